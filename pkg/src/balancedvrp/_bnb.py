"""Numba kernels for the exact solver.

A solution is a set partition of the customers (bit masks) into K capacity-feasible routes,
each sequenced optimally, so route lengths come from the subset table `tsp`. The search
fixes routes one at a time, always choosing the route that holds the lowest unassigned
customer (which breaks the symmetry between vehicles), and keeps one Pareto archive per
objective spec. A child is skipped for a spec only when a bound proves that no completion
can enter that spec's front, so every archive ends up equal to the front of the full
enumeration.

Spec index s = 6 * resource + function with resources (distance, load, stops) and functions
(max, lex, range, mad, stdev, gini).

Exact balance keys are integers (key numerator, denominator 1) except Gini, which is
num / den. Lex keys are the sorted workload vectors.
"""
import math

import numba as nb
import numpy as np

INF = 1 << 60
NS = 18
TOL = 1e-9

# -- subset recursions ------------------------------------------------------------------


@nb.njit(cache=True)
def popc(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@nb.njit(cache=True)
def children(S, k, load, Q):
    """Routes T that hold the lowest customer of S, fit the capacity, and leave a remainder
    that k-1 vehicles can still carry. T == S is excluded."""
    low = S & (-S)
    rest = S ^ low
    m = popc(rest)
    bits = np.empty(m, np.int64)
    dem = np.empty(m, np.int64)
    suf = np.zeros(m + 1, np.int64)
    j = 0
    x = rest
    while x:
        b = x & (-x)
        bits[j] = b
        dem[j] = load[b]
        j += 1
        x ^= b
    for i in range(m - 1, -1, -1):
        suf[i] = suf[i + 1] + dem[i]
    need = load[S] - (k - 1) * Q
    cap = 64
    out = np.empty(cap, np.int64)
    nch = 0
    stT = np.empty(m + 2, np.int64)
    stL = np.empty(m + 2, np.int64)
    stI = np.empty(m + 2, np.int64)
    stT[0] = low
    stL[0] = load[low]
    stI[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        T = stT[sp]
        L = stL[sp]
        i = stI[sp]
        if L + suf[i] < need:
            continue
        if i == m:
            if T != S and L >= need:
                if nch == cap:
                    cap *= 2
                    o2 = np.empty(cap, np.int64)
                    o2[:nch] = out[:nch]
                    out = o2
                out[nch] = T
                nch += 1
            continue
        stT[sp] = T
        stL[sp] = L
        stI[sp] = i + 1
        sp += 1
        if L + dem[i] <= Q:
            stT[sp] = T | bits[i]
            stL[sp] = L + dem[i]
            stI[sp] = i + 1
            sp += 1
    return out, nch


@nb.njit(cache=True)
def ghu(S, k, tsp, load, Q, G, H, U):
    """(min total length, min over partitions of the longest route, max over partitions of
    the shortest route) for S split into k routes. Memoized in rows k-2 of G, H, U."""
    if k == 1:
        c = tsp[S]
        return c, c, c
    if G[k - 2, S] != -1:
        return G[k - 2, S], H[k - 2, S], U[k - 2, S]
    bg = INF
    bh = INF
    bu = -1
    out, nch = children(S, k, load, Q)
    for t in range(nch):
        T = out[t]
        c = tsp[T]
        g2, h2, u2 = ghu(S ^ T, k - 1, tsp, load, Q, G, H, U)
        if g2 < INF:
            if c + g2 < bg:
                bg = c + g2
            hh = max(c, h2)
            if hh < bh:
                bh = hh
            uu = min(c, u2)
            if uu > bu:
                bu = uu
    G[k - 2, S] = bg
    H[k - 2, S] = bh
    U[k - 2, S] = bu
    return bg, bh, bu


# -- keys -------------------------------------------------------------------------------


@nb.njit(cache=True)
def fkey(f, x, n, K):
    # real-valued key (same scale as the exact key) over x[:n]
    s = 0.0
    mx = -1e300
    mn = 1e300
    for i in range(n):
        s += x[i]
        mx = max(mx, x[i])
        mn = min(mn, x[i])
    if f == 0:
        return mx
    if f == 2:
        return mx - mn
    if f == 3:
        t = 0.0
        for i in range(n):
            t += abs(K * x[i] - s)
        return t
    if f == 4:
        t = 0.0
        for i in range(n):
            t += (K * x[i] - s) ** 2
        return t
    t = 0.0
    for i in range(n):
        for j in range(n):
            t += abs(x[i] - x[j])
    return t / (2.0 * K * s)


@nb.njit(cache=True)
def exact_key(f, x, K):
    s = 0
    mx = x[0]
    mn = x[0]
    for i in range(K):
        s += x[i]
        mx = max(mx, x[i])
        mn = min(mn, x[i])
    if f == 0:
        return mx, 1
    if f == 2:
        return mx - mn, 1
    if f == 3:
        t = 0
        for i in range(K):
            t += abs(K * x[i] - s)
        return t, 1
    if f == 4:
        t = 0
        for i in range(K):
            t += (K * x[i] - s) ** 2
        return t, 1
    t = 0
    for i in range(K):
        for j in range(K):
            t += abs(x[i] - x[j])
    return t, 2 * K * s


@nb.njit(cache=True)
def sort_desc(x, K, out):
    for i in range(K):
        out[i] = x[i]
    for i in range(1, K):
        v = out[i]
        j = i - 1
        while j >= 0 and out[j] < v:
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = v


# -- lower bounds for variable-sum completions ------------------------------------------
# P: the d fixed route lengths; the k open routes have some average a, and the key of
# P plus k copies of a bounds the key of any completion with that average (equal split
# minimizes every Schur-convex key). Over a, the relaxation is convex (MAD, StDev) or a
# ratio of piecewise-linear to linear (Gini), so its minimum on an interval sits at an
# endpoint or a breakpoint.


@nb.njit(cache=True)
def lb_split(f, P, d, k, a, K, buf):
    for i in range(d):
        buf[i] = P[i]
    for i in range(d, d + k):
        buf[i] = a
    return fkey(f, buf, d + k, K)


@nb.njit(cache=True)
def scalar_lb(f, P, d, k, Gf, Hf, Uf, K, buf):
    # Gf: least remaining total; Hf: least possible longest open route; Uf: largest possible
    # shortest open route
    a0 = Gf / k
    sP = 0.0
    mxP = -1e300
    mnP = 1e300
    for i in range(d):
        sP += P[i]
        mxP = max(mxP, P[i])
        mnP = min(mnP, P[i])
    top = max(mxP, max(Hf, a0))
    rng = top - min(mnP, Uf)
    if rng < 0:
        rng = 0.0
    if f == 0:
        return top
    if f == 2:
        return rng
    mP = sP / d
    if f == 4:
        v = lb_split(f, P, d, k, max(a0, mP), K, buf)
        return max(v, K * K * rng * rng / 2.0)   # var >= range^2 / (2K)
    best = lb_split(f, P, d, k, a0, K, buf)
    if mP >= a0:
        best = min(best, lb_split(f, P, d, k, mP, K, buf))
    for i in range(d):
        if f == 3:
            a = (K * P[i] - sP) / k
        else:
            a = P[i]
        if a >= a0:
            best = min(best, lb_split(f, P, d, k, a, K, buf))
    if f == 3:
        return max(best, K * rng)                # MAD >= range / K
    return min(best, d / K)                      # Gini relaxation tends to d/K as a grows


@nb.njit(cache=True)
def split_min(f, P, d, k, K, sP, alo, ahi, buf):
    # min over a in [alo, ahi] (ahi >= 1e200 means unbounded) of key(P + a^k)
    mP = sP / d
    best = lb_split(f, P, d, k, alo, K, buf)
    if ahi < 1e200:
        best = min(best, lb_split(f, P, d, k, ahi, K, buf))
    if mP > alo and mP < ahi:
        best = min(best, lb_split(f, P, d, k, mP, K, buf))
    if f == 4:
        return best
    for i in range(d):
        if f == 3:
            a = (K * P[i] - sP) / k
        else:
            a = P[i]
        if a > alo and a < ahi:
            best = min(best, lb_split(f, P, d, k, a, K, buf))
    if f == 5 and ahi >= 1e200:
        best = min(best, d / K)
    return best


@nb.njit(cache=True)
def range_term_at(f, K, k, sP, M0, m0, a):
    rg = max(M0, a) - min(m0, a)
    if f == 2:
        return rg
    if f == 3:
        return K * rg
    if f == 4:
        return K * K * rg * rg / 2.0
    return (K - 1) * rg / (K * (sP + k * a))    # pairwise sum >= 2 (K-1) range


@nb.njit(cache=True)
def range_term_min(f, K, k, sP, M0, m0, alo, ahi):
    best = range_term_at(f, K, k, sP, M0, m0, alo)
    if ahi < 1e200:
        best = min(best, range_term_at(f, K, k, sP, M0, m0, ahi))
    if m0 > alo and m0 < ahi:
        best = min(best, range_term_at(f, K, k, sP, M0, m0, m0))
    if M0 > alo and M0 < ahi:
        best = min(best, range_term_at(f, K, k, sP, M0, m0, M0))
    if ahi >= 1e200 and f == 5:
        best = min(best, (K - 1) / (K * k))
    return best


# -- archives ---------------------------------------------------------------------------
# Per spec s: entries 0..asz[s]-1 sorted by cost ascending with strictly falling key.


@nb.njit(cache=True)
def last_le(acost, m, c):
    lo = 0
    hi = m
    while lo < hi:
        mid = (lo + hi) >> 1
        if acost[mid] <= c:
            lo = mid + 1
        else:
            hi = mid
    return lo - 1


@nb.njit(cache=True)
def prune_scalar(s, f, acost, akn, akd, asz, c, b):
    # entry with the largest cost <= c has the best key among all entries not costlier than c
    p = last_le(acost[s], asz[s], c)
    if p < 0:
        return False
    if f == 5:
        return akn[s, p] / akd[s, p] < b - TOL * (1.0 + b)
    B = math.ceil(b - 1e-7 * (1.0 + abs(b)))   # integer keys
    pb = akn[s, p]
    return pb < B or (pb == B and acost[s, p] < c)


@nb.njit(cache=True)
def prune_exact(s, acost, akn, akd, asz, c, bn, bd):
    p = last_le(acost[s], asz[s], c)
    if p < 0:
        return False
    l = akn[s, p] * bd
    r = bn * akd[s, p]
    return l < r or (l == r and acost[s, p] < c)


@nb.njit(cache=True)
def prune_lex(s, acost, avec, asz, c, lbv, K, integral):
    p = last_le(acost[s], asz[s], c)
    if p < 0:
        return False
    eps = 0.0 if integral else 1e-7
    for i in range(K):
        a = float(avec[s, p, i])
        if a < lbv[i] - eps:
            return True
        if a > lbv[i] + eps:
            return False
    return integral and acost[s, p] < c


@nb.njit(cache=True)
def stair_prune(s, f, acost, akn, akd, asz, lbc, P, d, k, K, Hf, Uf, buf):
    """Cost-aware test: a completion of total cost c has open-route average (c - sP)/k, and it
    must beat the archive entry in force at c. Try whole runs of archive steps at once and
    split a run only when its joint bound fails."""
    m = asz[s]
    p = last_le(acost[s], m, lbc)
    if p < 0:
        return False
    sP = 0.0
    mxP = -1e300
    mnP = 1e300
    for i in range(d):
        sP += P[i]
        mxP = max(mxP, P[i])
        mnP = min(mnP, P[i])
    M0 = max(mxP, Hf)
    m0 = min(mnP, Uf)
    stl = np.empty(2 * 64, np.int64)
    sth = np.empty(2 * 64, np.int64)
    stl[0] = p
    sth[0] = m - 1
    sp = 1
    while sp > 0:
        sp -= 1
        i = stl[sp]
        j = sth[sp]
        lo_s = max(float(acost[s, i]), float(lbc))
        last = j + 1 >= m
        hi_s = 1e300 if last else float(acost[s, j + 1] - 1)
        if lo_s > hi_s:
            continue
        alo = (lo_s - sP) / k
        ahi = 1e300 if last else (hi_s - sP) / k
        lb = split_min(f, P, d, k, K, sP, alo, ahi, buf) if f != 2 else 0.0
        lb = max(lb, range_term_min(f, K, k, sP, M0, m0, alo, ahi))
        bi = akn[s, i] / akd[s, i]   # the worst key in the run is its first
        if lb > bi + TOL * (1.0 + bi):
            continue
        if i == j:
            return False
        mid = (i + j) >> 1
        stl[sp] = mid + 1
        sth[sp] = j
        sp += 1
        stl[sp] = i
        sth[sp] = mid
        sp += 1
    return True


@nb.njit(cache=True)
def to_orig(mask, obit):
    out = 0
    x = mask
    while x:
        low = x & (-x)
        i = 0
        while (1 << i) != low:
            i += 1
        out |= obit[i]
        x ^= low
    return out


@nb.njit(cache=True)
def canonical_masks(masks, K, obit, out):
    # route masks in the caller's numbering, ordered by lowest customer
    for r in range(K):
        out[r] = to_orig(masks[r], obit)
    for i in range(1, K):
        v = out[i]
        j = i - 1
        while j >= 0 and (out[j] & -out[j]) > (v & -v):
            out[j + 1] = out[j]
            j -= 1
        out[j + 1] = v


@nb.njit(cache=True)
def canon_less(a, b, K, obit):
    ca = np.empty(K, np.int64)
    cb = np.empty(K, np.int64)
    canonical_masks(a, K, obit, ca)
    canonical_masks(b, K, obit, cb)
    for r in range(K):
        if ca[r] != cb[r]:
            return ca[r] < cb[r]
    return False


@nb.njit(cache=True)
def key_le(f, an, ad, av, bn, bd, bv, K):
    # (a <= b, a == b)
    if f == 1:
        for i in range(K):
            if av[i] != bv[i]:
                return av[i] < bv[i], False
        return True, True
    l = an * bd
    r = bn * ad
    return l <= r, l == r


@nb.njit(cache=True)
def arch_insert(s, f, acost, akn, akd, avec, amask, asz, cost, kn, kd, kv, masks, K, obit):
    """0 added, 1 dominated, 2 duplicate (the canonically smaller partition is kept),
    -1 out of room."""
    m = asz[s]
    for i in range(m):
        if acost[s, i] > cost:
            break
        le, eq = key_le(f, akn[s, i], akd[s, i], avec[s, i], kn, kd, kv, K)
        if le:
            if acost[s, i] < cost or not eq:
                return 1
            if canon_less(masks, amask[s, i], K, obit):
                for r in range(K):
                    amask[s, i, r] = masks[r]
            return 2
    j = 0
    for i in range(m):
        le, eq = key_le(f, kn, kd, kv, akn[s, i], akd[s, i], avec[s, i], K)
        if not (cost <= acost[s, i] and le):
            if j != i:
                acost[s, j] = acost[s, i]
                akn[s, j] = akn[s, i]
                akd[s, j] = akd[s, i]
                avec[s, j] = avec[s, i]
                amask[s, j] = amask[s, i]
            j += 1
    asz[s] = j
    if j >= acost.shape[1]:
        return -1
    p = j
    while p > 0 and acost[s, p - 1] > cost:
        acost[s, p] = acost[s, p - 1]
        akn[s, p] = akn[s, p - 1]
        akd[s, p] = akd[s, p - 1]
        avec[s, p] = avec[s, p - 1]
        amask[s, p] = amask[s, p - 1]
        p -= 1
    acost[s, p] = cost
    akn[s, p] = kn
    akd[s, p] = kd
    for i in range(K):
        avec[s, p, i] = kv[i]
        amask[s, p, i] = masks[i]
    asz[s] = j + 1
    return 0


# -- search -----------------------------------------------------------------------------


@nb.njit(cache=True)
def workload(r, T, tsp, load):
    if r == 0:
        return tsp[T]
    if r == 1:
        return load[T]
    return popc(T)


@nb.njit(cache=True)
def node_prunable(s, cost_lb, d, k, S2, W, tsp, load, Q, G, H, U, K, acost, akn, akd, avec, asz,
                  buf, lbv, Pf, xb, kv):
    """True when no completion of the d fixed routes (k open routes over S2, total cost at
    least cost_lb) can enter the archive of spec s."""
    r = s // 6
    f = s % 6
    if r != 0:
        # constant-sum: the balanced integer split of what remains is majorized by every
        # other split, so it bounds every Schur-convex key and the Lex order
        R = load[S2] if r == 1 else popc(S2)
        qq = R // k
        rr = R % k
        for i in range(d):
            xb[i] = W[r, i]
        for i in range(k):
            xb[d + i] = qq + 1 if i < rr else qq
        if f == 1:
            sort_desc(xb, K, kv)
            for i in range(K):
                lbv[i] = kv[i]
            return prune_lex(s, acost, avec, asz, cost_lb, lbv, K, True)
        kn, kd = exact_key(f, xb, K)
        return prune_exact(s, acost, akn, akd, asz, cost_lb, kn, kd)
    for i in range(d):
        Pf[i] = W[0, i]
    g2, h2, u2 = ghu(S2, k, tsp, load, Q, G, H, U)
    Gf = float(g2)
    Hf = float(h2)
    Uf = float(u2)
    if f != 1:
        b = scalar_lb(f, Pf, d, k, Gf, Hf, Uf, K, buf)
        if prune_scalar(s, f, acost, akn, akd, asz, cost_lb, b):
            return True
        if f >= 2:
            return stair_prune(s, f, acost, akn, akd, asz, cost_lb, Pf, d, k, K, Hf, Uf, buf)
        return False
    # Lex on distance: the longest open route is at least y0, the others share the rest
    for i in range(d):
        buf[i] = Pf[i]
    y0 = max(Hf, Gf / k)
    buf[d] = y0
    rem = Gf - y0
    for i in range(1, k):
        buf[d + i] = rem / (k - 1) if rem > 0 else 0.0
    sort_desc(buf, K, lbv)
    return prune_lex(s, acost, avec, asz, cost_lb, lbv, K, False)


@nb.njit(cache=True)
def leaf(cost, path, W, active, K, acost, akn, akd, avec, amask, asz, xb, kv, obit, stats):
    stats[2] += 1
    for s in range(NS):
        if not active[s]:
            continue
        r = s // 6
        f = s % 6
        for i in range(K):
            xb[i] = W[r, i]
        if f == 1:
            sort_desc(xb, K, kv)
            kn = 0
            kd = 1
        else:
            kn, kd = exact_key(f, xb, K)
        p = last_le(acost[s], asz[s], cost)
        if p >= 0:
            if f == 1:
                le, eq = key_le(f, 0, 1, avec[s, p], 0, 1, kv, K)
            else:
                le, eq = key_le(f, akn[s, p], akd[s, p], kv, kn, kd, kv, K)
            if le and (acost[s, p] < cost or not eq):
                continue
        if arch_insert(s, f, acost, akn, akd, avec, amask, asz, cost, kn, kd, kv, path, K, obit) < 0:
            stats[3] = 1
            return


@nb.njit(cache=True)
def dfs(S, k, cost, d, path, W, active, K, tsp, load, Q, G, H, U, acost, akn, akd, avec, amask, asz,
        obit, stats):
    stats[0] += 1
    buf = np.empty(K)
    lbv = np.empty(K)
    Pf = np.empty(K)
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    cm, cand = children(S, k, load, Q)
    cl = np.empty(cand, np.int64)
    nch = 0
    for t in range(cand):
        T = cm[t]
        g2, h2, u2 = ghu(S ^ T, k - 1, tsp, load, Q, G, H, U)
        if g2 < INF:
            cm[nch] = T
            cl[nch] = cost + tsp[T] + g2
            nch += 1
    # cheapest completions first: archives fill with good points early
    order = np.argsort(cl[:nch], kind="mergesort")
    act2 = np.empty(NS, np.bool_)
    for oi in range(nch):
        if stats[3]:
            return
        T = cm[order[oi]]
        lbc = cl[order[oi]]
        S2 = S ^ T
        path[d] = T
        for r in range(3):
            W[r, d] = workload(r, T, tsp, load)
        if k == 2:
            path[d + 1] = S2
            for r in range(3):
                W[r, d + 1] = workload(r, S2, tsp, load)
            leaf(lbc, path, W, active, K, acost, akn, akd, avec, amask, asz, xb, kv, obit, stats)
            continue
        anyact = False
        for s in range(NS):
            act2[s] = False
            if active[s]:
                if node_prunable(s, lbc, d + 1, k - 1, S2, W, tsp, load, Q, G, H, U, K, acost, akn, akd,
                                 avec, asz, buf, lbv, Pf, xb, kv):
                    stats[1] += 1
                else:
                    act2[s] = True
                    anyact = True
        if anyact:
            dfs(S2, k - 1, cost + tsp[T], d + 1, path, W, act2.copy(), K, tsp, load, Q, G, H, U,
                acost, akn, akd, avec, amask, asz, obit, stats)


@nb.njit(cache=True)
def single_route(n, K, tsp, load, active, acost, akn, akd, avec, amask, asz, obit, stats):
    full = (1 << n) - 1
    if tsp[full] >= INF:
        return
    path = np.full(K, full, np.int64)
    W = np.zeros((3, K), np.int64)
    W[0, 0] = tsp[full]
    W[1, 0] = load[full]
    W[2, 0] = n
    xb = np.empty(K, np.int64)
    kv = np.empty(K, np.int64)
    leaf(tsp[full], path, W, active, K, acost, akn, akd, avec, amask, asz, xb, kv, obit, stats)


def pareto_search(n, K, tsp, load, Q, obit, active, capacity=4096):
    """Run the search; returns (costs, key numerators, key denominators, lex vectors, route masks,
    sizes, stats) with masks in the search numbering."""
    while True:
        acost = np.zeros((NS, capacity), np.int64)
        akn = np.zeros((NS, capacity), np.int64)
        akd = np.ones((NS, capacity), np.int64)
        avec = np.zeros((NS, capacity, K), np.int64)
        amask = np.zeros((NS, capacity, K), np.int64)
        asz = np.zeros(NS, np.int64)
        stats = np.zeros(4, np.int64)
        if K == 1:
            single_route(n, K, tsp, load, active, acost, akn, akd, avec, amask, asz, obit, stats)
        else:
            rows = max(K - 2, 1)
            G = np.full((rows, 1 << n), -1, np.int64)
            H = G.copy()
            U = G.copy()
            path = np.zeros(K, np.int64)
            W = np.zeros((3, K), np.int64)
            dfs((1 << n) - 1, K, 0, 0, path, W, active, K, tsp, load, Q, G, H, U, acost, akn, akd,
                avec, amask, asz, obit, stats)
        if not stats[3]:
            return acost, akn, akd, avec, amask, asz, stats[:3]
        capacity *= 4


# -- full enumeration ---------------------------------------------------------------------


@nb.njit(cache=True)
def _enum(S, k, cost, d, path, W, active, K, tsp, load, Q, acost, akn, akd, avec, amask, asz, obit,
          xb, kv, stats):
    # every capacity-feasible partition, offered to every active archive; no bounds
    if stats[3]:
        return
    if k == 1:
        if tsp[S] >= INF:
            return
        path[d] = S
        for r in range(3):
            W[r, d] = workload(r, S, tsp, load)
        leaf(cost + tsp[S], path, W, active, K, acost, akn, akd, avec, amask, asz, xb, kv, obit, stats)
        return
    stats[0] += 1
    cm, cand = children(S, k, load, Q)
    for t in range(cand):
        T = cm[t]
        path[d] = T
        for r in range(3):
            W[r, d] = workload(r, T, tsp, load)
        _enum(S ^ T, k - 1, cost + tsp[T], d + 1, path, W, active, K, tsp, load, Q, acost, akn, akd,
              avec, amask, asz, obit, xb, kv, stats)


def enumerate_fronts(n, K, tsp, load, Q, obit, active, capacity=4096):
    """Same outputs as pareto_search, from one pass over all feasible partitions."""
    while True:
        acost = np.zeros((NS, capacity), np.int64)
        akn = np.zeros((NS, capacity), np.int64)
        akd = np.ones((NS, capacity), np.int64)
        avec = np.zeros((NS, capacity, K), np.int64)
        amask = np.zeros((NS, capacity, K), np.int64)
        asz = np.zeros(NS, np.int64)
        stats = np.zeros(4, np.int64)
        path = np.zeros(K, np.int64)
        W = np.zeros((3, K), np.int64)
        xb = np.empty(K, np.int64)
        kv = np.empty(K, np.int64)
        _enum((1 << n) - 1, K, 0, 0, path, W, active, K, tsp, load, Q, acost, akn, akd, avec, amask,
              asz, obit, xb, kv, stats)
        if not stats[3]:
            return acost, akn, akd, avec, amask, asz, stats[:3]
        capacity *= 4




@nb.njit(cache=True)
def _scan(S, k, dist_acc, load_acc, stops_acc, tsp, load, Q, out):
    # out: count, then (min, max) of the distance, load and stop totals
    if k == 1:
        if tsp[S] >= INF:
            return
        dt = dist_acc + tsp[S]
        lt = load_acc + load[S]
        st = stops_acc + popc(S)
        out[0] += 1
        if dt < out[1]:
            out[1] = dt
        if dt > out[2]:
            out[2] = dt
        if lt < out[3]:
            out[3] = lt
        if lt > out[4]:
            out[4] = lt
        if st < out[5]:
            out[5] = st
        if st > out[6]:
            out[6] = st
        return
    if k == 2:
        # last split: walk the submasks directly, no child list
        low = S & (-S)
        rest = S ^ low
        sub = rest
        while True:
            T = low | sub
            R = S ^ T
            if R and load[T] <= Q and load[R] <= Q and tsp[T] < INF and tsp[R] < INF:
                dt = dist_acc + tsp[T] + tsp[R]
                lt = load_acc + load[T] + load[R]
                st = stops_acc + popc(S)
                out[0] += 1
                out[1] = min(out[1], dt)
                out[2] = max(out[2], dt)
                out[3] = min(out[3], lt)
                out[4] = max(out[4], lt)
                out[5] = min(out[5], st)
                out[6] = max(out[6], st)
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return
    cm, cand = children(S, k, load, Q)
    for t in range(cand):
        T = cm[t]
        _scan(S ^ T, k - 1, dist_acc + tsp[T], load_acc + load[T], stops_acc + popc(T),
              tsp, load, Q, out)


def scan_all_partitions(n, K, tsp, load, Q):
    """Visit every capacity-feasible partition into K routes; returns (count, dist min/max,
    load min/max, stops min/max)."""
    out = np.array([0, INF, -1, INF, -1, INF, -1], np.int64)
    _scan((1 << n) - 1, K, 0, 0, 0, tsp, load, Q, out)
    return tuple(int(v) for v in out)
