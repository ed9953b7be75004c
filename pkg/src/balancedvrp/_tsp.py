"""Held-Karp kernels: one route at a time, or every capacity-feasible customer subset at once."""
import numba as nb
import numpy as np

INF = 1 << 60


@nb.njit(cache=True)
def hk_finish_table(d):
    # d: (m+1)x(m+1) matrix with the depot at 0. h[R, j] = shortest path that starts at local
    # customer j, visits every customer in R (a mask over 0..m-1 not containing j), and ends at
    # the depot. Building sequences forward from this table gives exact lexicographic tie-breaks.
    m = d.shape[0] - 1
    N = 1 << m
    h = np.full((N, m), INF, np.int64)
    for j in range(m):
        h[0, j] = d[j + 1, 0]
    for R in range(1, N):
        for j in range(m):
            if (R >> j) & 1:
                continue
            best = INF
            x = R
            while x:
                low = x & (-x)
                k = 0
                while (1 << k) != low:
                    k += 1
                v = d[j + 1, k + 1] + h[R ^ low, k]
                if v < best:
                    best = v
                x ^= low
            h[R, j] = best
    return h


@nb.njit(cache=True)
def subset_tables(d, q, Q):
    """Load of every customer subset, and the optimal tour length of every subset with load <= Q.

    Customer i (1-based) is bit i-1. Infeasible subsets get INF.
    """
    n = q.shape[0]
    N = 1 << n
    load = np.zeros(N, np.int64)
    for m in range(1, N):
        low = m & (-m)
        b = 0
        while (1 << b) != low:
            b += 1
        load[m] = load[m ^ low] + q[b]
    idx = -np.ones(N, np.int64)
    cnt = 0
    for m in range(1, N):
        if load[m] <= Q:
            idx[m] = cnt
            cnt += 1
    # f[idx[m], j]: shortest depot -> ... -> j path covering m
    f = np.full((cnt, n), INF, np.int64)
    tsp = np.full(N, INF, np.int64)
    for m in range(1, N):
        if load[m] > Q:
            continue
        i = idx[m]
        if m & (m - 1) == 0:
            b = 0
            while (1 << b) != m:
                b += 1
            f[i, b] = d[0, b + 1]
        else:
            for j in range(n):
                if (m >> j) & 1:
                    pm = m ^ (1 << j)
                    pi = idx[pm]
                    best = INF
                    for k in range(n):
                        if (pm >> k) & 1:
                            v = f[pi, k] + d[k + 1, j + 1]
                            if v < best:
                                best = v
                    f[i, j] = best
        best = INF
        for j in range(n):
            if (m >> j) & 1:
                v = f[i, j] + d[j + 1, 0]
                if v < best:
                    best = v
        tsp[m] = best
    return tsp, load
