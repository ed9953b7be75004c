"""Numba kernel for the scalarized iterated local search on small instances.

Routes are customer bit masks and their lengths come from the exact subset table, so every
route a solution holds is optimally sequenced. Each run sweeps the directions in order; inside
a direction the search alternates perturbation with best-improvement descent over inter-route
relocate and swap moves. Every feasible neighbour that gets evaluated is offered to the
archive of the single spec s.
"""
import numba as nb
import numpy as np

from ._bnb import INF, NS, arch_insert, exact_key, key_le, last_le, popc, sort_desc


@nb.njit(cache=True)
def _key(f, W, r, K, xb, kv):
    for i in range(K):
        xb[i] = W[r, i]
    if f == 1:
        sort_desc(xb, K, kv)
        return 0, 1
    return exact_key(f, xb, K)


@nb.njit(cache=True)
def offer(s, cost, masks, W, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag):
    r = s // 6
    f = s % 6
    kn, kd = _key(f, W, r, K, xb, kv)
    p = last_le(acost[s], asz[s], cost)
    if p >= 0:
        if f == 1:
            le, eq = key_le(f, 0, 1, avec[s, p], 0, 1, kv, K)
        else:
            le, eq = key_le(f, akn[s, p], akd[s, p], kv, kn, kd, kv, K)
        if le and (acost[s, p] < cost or not eq):
            return
    if arch_insert(s, f, acost, akn, akd, avec, amask, asz, cost, kn, kd, kv, masks, K, obit) < 0:
        flag[0] = 1


@nb.njit(cache=True)
def fill_w(masks, K, tsp, load, W):
    c = 0
    for i in range(K):
        W[0, i] = tsp[masks[i]]
        W[1, i] = load[masks[i]]
        W[2, i] = popc(masks[i])
        c += W[0, i]
    return c


@nb.njit(cache=True)
def score(s, cost, W, K, norm, lam, xb, kv):
    """Scalarized value as a (primary, secondary) pair compared lexicographically.

    lam >= 0 weights normalized balance against normalized cost. lam < 0 is the direction
    where balance comes first and cost only breaks ties. For Lex, lam >= 0 caps the largest
    workload: the excess comes first, then cost.
    """
    r = s // 6
    f = s % 6
    c = (cost - norm[0]) / norm[1]
    if f == 1:
        if lam < 0:
            sort_desc(W[r], K, kv)
            p = 0.0
            for i in range(K):
                p = p * norm[4] + kv[i]
            return p, c
        mx = 0
        for i in range(K):
            mx = max(mx, W[r, i])
        return max(0.0, mx - lam), c
    if lam == 0.0:
        return c, 0.0
    kn, kd = _key(f, W, r, K, xb, kv)
    b = kn / kd
    if lam < 0:
        return b, c
    return c + lam * (b - norm[2]) / norm[3], 0.0


@nb.njit(cache=True)
def better(p, q, bp, bq):
    return p < bp or (p == bp and q < bq)


@nb.njit(cache=True)
def descend(s, masks, W, K, tsp, load, Q, n, norm, lam, acost, akn, akd, avec, amask, asz, obit,
            xb, kv, flag, route_of, max_rounds):
    # best-improvement descent; returns the final score
    cost = fill_w(masks, K, tsp, load, W)
    cp, cq = score(s, cost, W, K, norm, lam, xb, kv)
    offer(s, cost, masks, W, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)
    W2 = W.copy()
    m2 = masks.copy()
    for _ in range(max_rounds):
        bp = cp
        bq = cq
        bi = -1
        bj = -1
        bt = 0  # 1 relocate, 2 swap
        for i in range(n):
            a = route_of[i]
            bit = 1 << i
            Ma = masks[a] ^ bit
            if Ma == 0:
                continue
            for b in range(K):
                if b == a:
                    continue
                Mb = masks[b] | bit
                if load[Mb] > Q:
                    continue
                for t in range(K):
                    m2[t] = masks[t]
                m2[a] = Ma
                m2[b] = Mb
                for r in range(3):
                    for t in range(K):
                        W2[r, t] = W[r, t]
                W2[0, a] = tsp[Ma]
                W2[1, a] = load[Ma]
                W2[2, a] -= 1
                W2[0, b] = tsp[Mb]
                W2[1, b] = load[Mb]
                W2[2, b] += 1
                c2 = cost - W[0, a] - W[0, b] + W2[0, a] + W2[0, b]
                offer(s, c2, m2, W2, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)
                p, q = score(s, c2, W2, K, norm, lam, xb, kv)
                if better(p, q, bp, bq):
                    bp = p
                    bq = q
                    bi = i
                    bj = b
                    bt = 1
        for i in range(n):
            a = route_of[i]
            for j in range(i + 1, n):
                b = route_of[j]
                if a == b:
                    continue
                bit_i = 1 << i
                bit_j = 1 << j
                Ma = (masks[a] ^ bit_i) | bit_j
                Mb = (masks[b] ^ bit_j) | bit_i
                if load[Ma] > Q or load[Mb] > Q:
                    continue
                for t in range(K):
                    m2[t] = masks[t]
                m2[a] = Ma
                m2[b] = Mb
                for r in range(3):
                    for t in range(K):
                        W2[r, t] = W[r, t]
                W2[0, a] = tsp[Ma]
                W2[1, a] = load[Ma]
                W2[0, b] = tsp[Mb]
                W2[1, b] = load[Mb]
                c2 = cost - W[0, a] - W[0, b] + W2[0, a] + W2[0, b]
                offer(s, c2, m2, W2, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)
                p, q = score(s, c2, W2, K, norm, lam, xb, kv)
                if better(p, q, bp, bq):
                    bp = p
                    bq = q
                    bi = i
                    bj = j
                    bt = 2
        if bt == 0:
            break
        if bt == 1:
            a = route_of[bi]
            masks[a] ^= 1 << bi
            masks[bj] |= 1 << bi
            route_of[bi] = bj
        else:
            a = route_of[bi]
            b = route_of[bj]
            masks[a] = (masks[a] ^ (1 << bi)) | (1 << bj)
            masks[b] = (masks[b] ^ (1 << bj)) | (1 << bi)
            route_of[bi] = b
            route_of[bj] = a
        cost = fill_w(masks, K, tsp, load, W)
        cp = bp
        cq = bq
    return cp, cq


@nb.njit(cache=True)
def perturb(masks, route_of, K, n, load, Q, strength):
    moved = 0
    tries = 0
    while moved < strength and tries < 50 * strength:
        tries += 1
        i = np.random.randint(n)
        a = route_of[i]
        b = np.random.randint(K)
        bit = 1 << i
        if b == a or masks[a] == bit:
            continue
        if load[masks[b] | bit] > Q:
            continue
        masks[a] ^= bit
        masks[b] |= bit
        route_of[i] = b
        moved += 1


@nb.njit(cache=True)
def refresh_norm(s, K, acost, akn, akd, avec, asz, norm):
    m = asz[s]
    f = s % 6
    if m == 0:
        return
    c0 = acost[s, 0]
    c1 = acost[s, m - 1]
    norm[0] = c0
    norm[1] = max(float(c1 - c0), 1.0)
    if f == 1:
        # Lex: scale for the largest workload
        hi = avec[s, 0, 0]
        lo = avec[s, m - 1, 0]
        norm[2] = lo
        norm[3] = max(float(hi - lo), 1.0)
        return
    b_hi = akn[s, 0] / akd[s, 0]
    b_lo = akn[s, m - 1] / akd[s, m - 1]
    norm[2] = b_lo
    norm[3] = max(b_hi - b_lo, 1e-9)


@nb.njit(cache=True)
def route_of_from(masks, K, n):
    ro = np.empty(n, np.int64)
    for r in range(K):
        x = masks[r]
        while x:
            low = x & (-x)
            i = 0
            while (1 << i) != low:
                i += 1
            ro[i] = r
            x ^= low
    return ro


@nb.njit(cache=True)
def ils_run(s, n, K, tsp, load, Q, init_masks, levels, iters, strength, seed, acost, akn, akd,
            avec, amask, asz, obit, flag):
    np.random.seed(seed)
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    W = np.zeros((3, K), np.int64)
    # cost origin, cost span, balance origin, balance span, lex base
    norm = np.array([0.0, 1.0, 0.0, 1.0, 1.0])
    mx = 0
    for i in range(tsp.shape[0]):
        if tsp[i] < INF:
            mx = max(mx, tsp[i], load[i])
    norm[4] = mx + 1.0
    masks = init_masks.copy()
    f = s % 6
    D = levels.shape[0]
    for d in range(D):
        refresh_norm(s, K, acost, akn, akd, avec, asz, norm)
        lam = levels[d]
        if f == 1 and lam >= 1.0:
            # the loosest cap is no cap at all: a cost-only direction
            lam = np.inf
        elif f == 1 and lam >= 0:
            # levels are fractions of the largest-workload span in the archive
            lam = norm[2] + lam * norm[3]
        ro = route_of_from(masks, K, n)
        cp, cq = descend(s, masks, W, K, tsp, load, Q, n, norm, lam, acost, akn, akd, avec, amask,
                         asz, obit, xb, kv, flag, ro, 1000)
        best_m = masks.copy()
        bp = cp
        bq = cq
        for it in range(iters):
            if flag[0]:
                return
            m2 = masks.copy()
            ro2 = ro.copy()
            perturb(m2, ro2, K, n, load, Q, strength)
            p, q = descend(s, m2, W, K, tsp, load, Q, n, norm, lam, acost, akn, akd, avec, amask,
                           asz, obit, xb, kv, flag, ro2, 1000)
            if not better(cp, cq, p, q):
                masks = m2
                ro = ro2
                cp = p
                cq = q
                if better(p, q, bp, bq):
                    bp = p
                    bq = q
                    best_m = m2.copy()
            elif np.random.random() < 0.05:
                masks = best_m.copy()
                ro = route_of_from(masks, K, n)
                cp = bp
                cq = bq
        masks = best_m


@nb.njit(cache=True)
def _mask_hash(masks, K):
    # order-free hash of a partition
    h = np.uint64(1469598103934665603)
    srt = np.sort(masks[:K])
    for i in range(K):
        h = (h ^ np.uint64(srt[i])) * np.uint64(1099511628211)
        h ^= h >> np.uint64(29)
    return np.int64(h)


@nb.njit(cache=True)
def neighbours(s, masks, W, K, tsp, load, Q, n, acost, akn, akd, avec, amask, asz, obit, xb, kv,
               flag):
    # offer every relocate and swap neighbour of one partition
    ro = route_of_from(masks, K, n)
    cost = fill_w(masks, K, tsp, load, W)
    W2 = W.copy()
    m2 = masks.copy()
    for i in range(n):
        a = ro[i]
        bit = 1 << i
        Ma = masks[a] ^ bit
        if Ma == 0:
            continue
        for b in range(K):
            if b == a:
                continue
            Mb = masks[b] | bit
            if load[Mb] > Q:
                continue
            for t in range(K):
                m2[t] = masks[t]
                for r in range(3):
                    W2[r, t] = W[r, t]
            m2[a] = Ma
            m2[b] = Mb
            W2[0, a] = tsp[Ma]
            W2[1, a] = load[Ma]
            W2[2, a] -= 1
            W2[0, b] = tsp[Mb]
            W2[1, b] = load[Mb]
            W2[2, b] += 1
            c2 = cost - W[0, a] - W[0, b] + W2[0, a] + W2[0, b]
            offer(s, c2, m2, W2, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)
    for i in range(n):
        a = ro[i]
        for j in range(i + 1, n):
            b = ro[j]
            if a == b:
                continue
            Ma = (masks[a] ^ (1 << i)) | (1 << j)
            Mb = (masks[b] ^ (1 << j)) | (1 << i)
            if load[Ma] > Q or load[Mb] > Q:
                continue
            for t in range(K):
                m2[t] = masks[t]
                for r in range(3):
                    W2[r, t] = W[r, t]
            m2[a] = Ma
            m2[b] = Mb
            W2[0, a] = tsp[Ma]
            W2[1, a] = load[Ma]
            W2[0, b] = tsp[Mb]
            W2[1, b] = load[Mb]
            c2 = cost - W[0, a] - W[0, b] + W2[0, a] + W2[0, b]
            offer(s, c2, m2, W2, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)


@nb.njit(cache=True)
def moves(masks, K, load, Q, n, out):
    # every capacity-feasible relocate and swap partition of one partition; returns the count
    ro = route_of_from(masks, K, n)
    c = 0
    for i in range(n):
        a = ro[i]
        bit = 1 << i
        if masks[a] == bit:
            continue
        for b in range(K):
            if b != a and load[masks[b] | bit] <= Q:
                out[c, :K] = masks[:K]
                out[c, a] = masks[a] ^ bit
                out[c, b] = masks[b] | bit
                c += 1
    for i in range(n):
        a = ro[i]
        for j in range(i + 1, n):
            b = ro[j]
            if a == b:
                continue
            Ma = (masks[a] ^ (1 << i)) | (1 << j)
            Mb = (masks[b] ^ (1 << j)) | (1 << i)
            if load[Ma] <= Q and load[Mb] <= Q:
                out[c, :K] = masks[:K]
                out[c, a] = Ma
                out[c, b] = Mb
                c += 1
    return c


@nb.njit(cache=True)
def pareto_local_search(s, n, K, tsp, load, Q, acost, akn, akd, avec, amask, asz, obit, flag,
                        max_expansions, deep=False):
    """Expand archive members until every member's neighbourhood has been offered.

    With deep, once the one-move stage converges each member is also expanded two moves deep
    (through dominated intermediates), and any new members go back to the first stage.
    """
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    W = np.zeros((3, K), np.int64)
    buf = np.empty((n * K + n * n // 2 + 1, K), np.int64)
    done = dict()
    done[np.int64(0)] = True
    done2 = dict()
    done2[np.int64(0)] = True
    expansions = 0
    while expansions < max_expansions:
        pick = -1
        for e in range(asz[s]):
            if _mask_hash(amask[s, e], K) not in done:
                pick = e
                break
        if pick >= 0:
            m = amask[s, pick].copy()
            done[_mask_hash(m, K)] = True
            neighbours(s, m, W, K, tsp, load, Q, n, acost, akn, akd, avec, amask, asz, obit, xb, kv,
                       flag)
        else:
            for e in range(asz[s]):
                if _mask_hash(amask[s, e], K) not in done2:
                    pick = e
                    break
            if pick < 0 or not deep:
                break
            m = amask[s, pick].copy()
            done2[_mask_hash(m, K)] = True
            cnt = moves(m, K, load, Q, n, buf)
            for q in range(cnt):
                neighbours(s, buf[q].copy(), W, K, tsp, load, Q, n, acost, akn, akd, avec, amask, asz,
                           obit, xb, kv, flag)
                if flag[0]:
                    return expansions
        if flag[0]:
            return expansions
        expansions += 1
    return expansions


@nb.njit(cache=True)
def polish(s, n, K, tsp, load, Q, seeds, acost, akn, akd, avec, amask, asz, obit, flag):
    """Seed the archive with the given partitions, then run the deep Pareto local search."""
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    W = np.zeros((3, K), np.int64)
    for q in range(seeds.shape[0]):
        m = seeds[q].copy()
        cost = fill_w(m, K, tsp, load, W)
        offer(s, cost, m, W, K, acost, akn, akd, avec, amask, asz, obit, xb, kv, flag)
        if flag[0]:
            return
    pareto_local_search(s, n, K, tsp, load, Q, acost, akn, akd, avec, amask, asz, obit, flag,
                        1 << 30, True)
