"""Numba kernel for the iterated local search on instances past the subset-table size.

Routes are explicit customer sequences. Inter-route relocate, swap and 2-opt* moves are
scored with exact length deltas; after each accepted move the touched routes are driven to
an intra-route local optimum (2-opt, move, swap), and only those sequenced solutions are
offered to the archive, so every archived route passes the heuristic admissibility test.
"""
import numba as nb
import numpy as np

from ._bnb import key_le, last_le
from ._ils import _key, better, score

# -- archive with route sequences as payload --------------------------------------------


@nb.njit(cache=True)
def encode(seq, L, K, out):
    # giant tour: route customers separated by zeros
    p = 0
    for r in range(K):
        for i in range(L[r]):
            out[p] = seq[r, i]
            p += 1
        out[p] = 0
        p += 1
    for i in range(p, out.shape[0]):
        out[i] = 0


@nb.njit(cache=True)
def seq_offer(f, r, cost, W, K, acost, akn, akd, avec, apay, asz, seq, L, xb, kv, flag):
    if flag[0]:
        return
    kn, kd = _key(f, W, r, K, xb, kv)
    m = asz[0]
    p = last_le(acost, m, cost)
    if p >= 0:
        le, eq = key_le(f, akn[p], akd[p], avec[p], kn, kd, kv, K)
        if le:
            return  # dominated, or a duplicate vector (keep the first one found)
    j = 0
    for i in range(m):
        le, eq = key_le(f, kn, kd, kv, akn[i], akd[i], avec[i], K)
        if not (cost <= acost[i] and le):
            if j != i:
                acost[j] = acost[i]
                akn[j] = akn[i]
                akd[j] = akd[i]
                avec[j] = avec[i]
                apay[j] = apay[i]
            j += 1
    asz[0] = j
    if j >= acost.shape[0]:
        flag[0] = 1
        return
    q = j
    while q > 0 and acost[q - 1] > cost:
        acost[q] = acost[q - 1]
        akn[q] = akn[q - 1]
        akd[q] = akd[q - 1]
        avec[q] = avec[q - 1]
        apay[q] = apay[q - 1]
        q -= 1
    acost[q] = cost
    akn[q] = kn
    akd[q] = kd
    for i in range(K):
        avec[q, i] = kv[i]
    encode(seq, L, K, apay[q])
    asz[0] = j + 1


# -- route sequencing -------------------------------------------------------------------


@nb.njit(cache=True)
def path_len(d, buf, m):
    t = 0
    prev = 0
    for i in range(m):
        t += d[prev, buf[i]]
        prev = buf[i]
    return t + d[prev, 0]


@nb.njit(cache=True)
def intra_opt(d, seq, L, r, tmp):
    """First-improvement 2-opt, move and swap on route r until none shortens it."""
    m = L[r]
    x = seq[r]
    improved = True
    while improved:
        improved = False
        base = path_len(d, x, m)
        for i in range(m - 1):
            a = x[i - 1] if i > 0 else 0
            b = x[i]
            for j in range(i + 1, m):
                c = x[j]
                e = x[j + 1] if j + 1 < m else 0
                if d[a, c] + d[b, e] < d[a, b] + d[c, e]:
                    lo = i
                    hi = j
                    while lo < hi:
                        t = x[lo]
                        x[lo] = x[hi]
                        x[hi] = t
                        lo += 1
                        hi -= 1
                    improved = True
                    break
            if improved:
                break
        if improved:
            continue
        for i in range(m):
            for p in range(m):
                if p == i:
                    continue
                # rest = x without i; insert x[i] at rest position p
                k = 0
                for t in range(m):
                    if t == i:
                        continue
                    if k == p:
                        tmp[k] = x[i]
                        k += 1
                    tmp[k] = x[t]
                    k += 1
                if p >= m - 1:
                    tmp[k] = x[i]
                if path_len(d, tmp, m) < base:
                    for t in range(m):
                        x[t] = tmp[t]
                    improved = True
                    break
            if improved:
                break
        if improved:
            continue
        for i in range(m - 1):
            for j in range(i + 1, m):
                t = x[i]
                x[i] = x[j]
                x[j] = t
                if path_len(d, x, m) < base:
                    improved = True
                    break
                x[j] = x[i]
                x[i] = t
            if improved:
                break


@nb.njit(cache=True)
def refresh(d, q, seq, L, K, W):
    c = 0
    for r in range(K):
        W[0, r] = path_len(d, seq[r], L[r])
        s = 0
        for i in range(L[r]):
            s += q[seq[r, i]]
        W[1, r] = s
        W[2, r] = L[r]
        c += W[0, r]
    return c


# -- descent ----------------------------------------------------------------------------


@nb.njit(cache=True)
def descend(s, d, q, Q, seq, L, K, n, W, norm, lam, dirty, tmp, acost, akn, akd, avec, apay, asz,
            xb, kv, flag, W2, pre, suf, pld):
    r_res = s // 6
    f = s % 6
    keep = seq.copy()
    keepL = L.copy()
    pp = np.inf
    pq = np.inf
    while True:
        for r in range(K):
            if dirty[r]:
                intra_opt(d, seq, L, r, tmp)
                dirty[r] = False
        cost = refresh(d, q, seq, L, K, W)
        seq_offer(f, r_res, cost, W, K, acost, akn, akd, avec, apay, asz, seq, L, xb, kv, flag)
        cp, cq = score(s, cost, W, K, norm, lam, xb, kv)
        if not better(cp, cq, pp, pq):
            # resequencing undid the predicted gain; step back to the previous state
            seq[:] = keep
            L[:] = keepL
            refresh(d, q, seq, L, K, W)
            return pp, pq
        pp = cp
        pq = cq
        keep[:] = seq
        keepL[:] = L
        bp = cp
        bq = cq
        bt = 0
        b1 = 0
        b2 = 0
        b3 = 0
        b4 = 0
        # prefix/suffix tables for 2-opt*
        for r in range(K):
            pre[r, 0] = 0
            pld[r, 0] = 0
            prev = 0
            for i in range(L[r]):
                pre[r, i + 1] = pre[r, i] + d[prev, seq[r, i]]
                pld[r, i + 1] = pld[r, i] + q[seq[r, i]]
                prev = seq[r, i]
            suf[r, L[r]] = 0
            nxt = 0
            for i in range(L[r] - 1, -1, -1):
                suf[r, i] = suf[r, i + 1] + d[seq[r, i], nxt]
                nxt = seq[r, i]
        for a in range(K):
            for i in range(L[a]):
                c = seq[a, i]
                pa = seq[a, i - 1] if i > 0 else 0
                na = seq[a, i + 1] if i + 1 < L[a] else 0
                # relocate c to its cheapest position in b
                if L[a] > 1:
                    rem = d[pa, c] + d[c, na] - d[pa, na]
                    for b in range(K):
                        if b == a or W[1, b] + q[c] > Q:
                            continue
                        best_ins = -1
                        bk = 0
                        prev = 0
                        for k in range(L[b] + 1):
                            nx = seq[b, k] if k < L[b] else 0
                            ins = d[prev, c] + d[c, nx] - d[prev, nx]
                            if best_ins < 0 or ins < best_ins:
                                best_ins = ins
                                bk = k
                            prev = nx
                        for r in range(3):
                            for t in range(K):
                                W2[r, t] = W[r, t]
                        W2[0, a] -= rem
                        W2[0, b] += best_ins
                        W2[1, a] -= q[c]
                        W2[1, b] += q[c]
                        W2[2, a] -= 1
                        W2[2, b] += 1
                        c2 = cost - rem + best_ins
                        p, qq = score(s, c2, W2, K, norm, lam, xb, kv)
                        if better(p, qq, bp, bq):
                            bp = p
                            bq = qq
                            bt = 1
                            b1 = a
                            b2 = i
                            b3 = b
                            b4 = bk
                # swap with e in a later route (positional)
                for b in range(a + 1, K):
                    for j in range(L[b]):
                        e = seq[b, j]
                        if W[1, a] - q[c] + q[e] > Q or W[1, b] - q[e] + q[c] > Q:
                            continue
                        pb = seq[b, j - 1] if j > 0 else 0
                        nb_ = seq[b, j + 1] if j + 1 < L[b] else 0
                        da = d[pa, e] + d[e, na] - d[pa, c] - d[c, na]
                        db = d[pb, c] + d[c, nb_] - d[pb, e] - d[e, nb_]
                        for r in range(3):
                            for t in range(K):
                                W2[r, t] = W[r, t]
                        W2[0, a] += da
                        W2[0, b] += db
                        W2[1, a] += q[e] - q[c]
                        W2[1, b] += q[c] - q[e]
                        p, qq = score(s, cost + da + db, W2, K, norm, lam, xb, kv)
                        if better(p, qq, bp, bq):
                            bp = p
                            bq = qq
                            bt = 2
                            b1 = a
                            b2 = i
                            b3 = b
                            b4 = j
        # 2-opt*: a keeps its first i customers then takes b's tail from j, and vice versa
        for a in range(K):
            for b in range(a + 1, K):
                for i in range(L[a] + 1):
                    for j in range(L[b] + 1):
                        na_ = i + L[b] - j
                        nb_ = j + L[a] - i
                        if na_ == 0 or nb_ == 0:
                            continue
                        if (i == 0 and j == 0) or (i == L[a] and j == L[b]):
                            continue
                        la = pld[a, i] + pld[b, L[b]] - pld[b, j]
                        lb = pld[b, j] + pld[a, L[a]] - pld[a, i]
                        if la > Q or lb > Q:
                            continue
                        ea = seq[a, i - 1] if i > 0 else 0
                        sa = seq[a, i] if i < L[a] else 0
                        eb = seq[b, j - 1] if j > 0 else 0
                        sb = seq[b, j] if j < L[b] else 0
                        da = pre[a, i] + d[ea, sb] + suf[b, j]
                        db = pre[b, j] + d[eb, sa] + suf[a, i]
                        for r in range(3):
                            for t in range(K):
                                W2[r, t] = W[r, t]
                        W2[0, a] = da
                        W2[0, b] = db
                        W2[1, a] = la
                        W2[1, b] = lb
                        W2[2, a] = na_
                        W2[2, b] = nb_
                        p, qq = score(s, cost - W[0, a] - W[0, b] + da + db, W2, K, norm, lam, xb, kv)
                        if better(p, qq, bp, bq):
                            bp = p
                            bq = qq
                            bt = 3
                            b1 = a
                            b2 = i
                            b3 = b
                            b4 = j
        if bt == 0 or flag[0]:
            return cp, cq
        if bt == 1:
            relocate(seq, L, b1, b2, b3, b4)
        elif bt == 2:
            t = seq[b1, b2]
            seq[b1, b2] = seq[b3, b4]
            seq[b3, b4] = t
        else:
            tails(seq, L, b1, b2, b3, b4, tmp)
        dirty[b1] = True
        dirty[b3] = True


@nb.njit(cache=True)
def relocate(seq, L, a, i, b, k):
    c = seq[a, i]
    for t in range(i, L[a] - 1):
        seq[a, t] = seq[a, t + 1]
    L[a] -= 1
    for t in range(L[b], k, -1):
        seq[b, t] = seq[b, t - 1]
    seq[b, k] = c
    L[b] += 1


@nb.njit(cache=True)
def tails(seq, L, a, i, b, j, tmp):
    ta = L[a] - i
    for t in range(ta):
        tmp[t] = seq[a, i + t]
    tb = L[b] - j
    for t in range(tb):
        seq[a, i + t] = seq[b, j + t]
    for t in range(ta):
        seq[b, j + t] = tmp[t]
    L[a] = i + tb
    L[b] = j + ta


@nb.njit(cache=True)
def perturb(seq, L, K, q, Q, W, strength):
    moved = 0
    tries = 0
    while moved < strength and tries < 50 * strength:
        tries += 1
        a = np.random.randint(K)
        b = np.random.randint(K)
        if a == b or L[a] < 2:
            continue
        i = np.random.randint(L[a])
        c = seq[a, i]
        if W[1, b] + q[c] > Q:
            continue
        relocate(seq, L, a, i, b, np.random.randint(L[b] + 1))
        W[1, a] -= q[c]
        W[1, b] += q[c]
        moved += 1


@nb.njit(cache=True)
def seq_norm(f, acost, akn, akd, avec, asz, norm):
    m = asz[0]
    if m == 0:
        return
    norm[0] = acost[0]
    norm[1] = max(float(acost[m - 1] - acost[0]), 1.0)
    if f == 1:
        norm[2] = avec[m - 1, 0]
        norm[3] = max(float(avec[0, 0] - avec[m - 1, 0]), 1.0)
        return
    norm[2] = akn[m - 1] / akd[m - 1]
    norm[3] = max(akn[0] / akd[0] - norm[2], 1e-9)


@nb.njit(cache=True)
def ils_run(s, n, K, d, q, Q, seq0, L0, levels, iters, strength, seed, acost, akn, akd, avec, apay,
            asz, flag):
    np.random.seed(seed)
    f = s % 6
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    W = np.zeros((3, K), np.int64)
    W2 = np.zeros((3, K), np.int64)
    tmp = np.zeros(n + 1, np.int64)
    pre = np.zeros((K, n + 1), np.int64)
    suf = np.zeros((K, n + 1), np.int64)
    pld = np.zeros((K, n + 1), np.int64)
    dirty = np.ones(K, np.bool_)
    seq = seq0.copy()
    L = L0.copy()
    big = 0
    for i in range(1, n + 1):
        big += 2 * d[0, i]
    norm = np.array([0.0, 1.0, 0.0, 1.0, float(max(big, Q) + 1)])
    for dd in range(levels.shape[0]):
        seq_norm(f, acost, akn, akd, avec, asz, norm)
        lam = levels[dd]
        if f == 1 and lam >= 0:
            lam = norm[2] + lam * norm[3]
        dirty[:] = True
        cp, cq = descend(s, d, q, Q, seq, L, K, n, W, norm, lam, dirty, tmp, acost, akn, akd, avec,
                         apay, asz, xb, kv, flag, W2, pre, suf, pld)
        bseq = seq.copy()
        bL = L.copy()
        bp = cp
        bq = cq
        for it in range(iters):
            if flag[0]:
                return
            s2 = seq.copy()
            L2 = L.copy()
            refresh(d, q, s2, L2, K, W)
            perturb(s2, L2, K, q, Q, W, strength)
            dirty[:] = True
            p, qq = descend(s, d, q, Q, s2, L2, K, n, W, norm, lam, dirty, tmp, acost, akn, akd,
                            avec, apay, asz, xb, kv, flag, W2, pre, suf, pld)
            if not better(cp, cq, p, qq):
                seq = s2
                L = L2
                cp = p
                cq = qq
                if better(p, qq, bp, bq):
                    bp = p
                    bq = qq
                    bseq = s2.copy()
                    bL = L2.copy()
            elif np.random.random() < 0.05:
                seq = bseq.copy()
                L = bL.copy()
                cp = bp
                cq = bq
        seq = bseq
        L = bL


def run(inst, spec, cfg, run_seed, groups, levels, capacity=4096):
    """Route lists of the run's archive, cheapest first."""
    n, K = inst.n, inst.K
    d = np.ascontiguousarray(inst.dist, dtype=np.int64)
    q = np.array((0,) + tuple(inst.demands), dtype=np.int64)
    seq0 = np.zeros((K, n + 1), np.int64)
    L0 = np.zeros(K, np.int64)
    for r, g in enumerate(groups):
        # nearest-neighbour order as a starting sequence
        left, cur, out = set(g), 0, []
        while left:
            cur = min(left, key=lambda c: (d[cur, c], c))
            out.append(cur)
            left.remove(cur)
        seq0[r, :len(out)] = out
        L0[r] = len(out)
    while True:
        acost = np.zeros(capacity, np.int64)
        akn = np.zeros(capacity, np.int64)
        akd = np.ones(capacity, np.int64)
        avec = np.zeros((capacity, K), np.int64)
        apay = np.zeros((capacity, n + K), np.int64)
        asz = np.zeros(1, np.int64)
        flag = np.zeros(1, np.int64)
        ils_run(spec.index, n, K, d, q, inst.Q, seq0, L0, levels, cfg.iterations, cfg.perturbation,
                run_seed, acost, akn, akd, avec, apay, asz, flag)
        if not flag[0]:
            break
        capacity *= 4
    out = []
    for e in range(int(asz[0])):
        routes, cur = [], []
        for c in apay[e]:
            if c == 0:
                if cur:
                    routes.append(cur)
                cur = []
            else:
                cur.append(int(c))
        out.append(routes)
    return out
