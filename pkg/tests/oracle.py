"""Slow, independent reference computations: brute-force sequencing, partition listing by
restricted-growth strings, Fraction arithmetic for the equity values, pairwise filtering."""
from fractions import Fraction
from itertools import permutations, product

from balancedvrp.equity import EquityFunction as F


def tour_length(inst, seq):
    d = inst.dist
    p = (0,) + tuple(seq) + (0,)
    return sum(int(d[a, b]) for a, b in zip(p, p[1:]))


def brute_tsp(inst, group):
    return min(tour_length(inst, p) for p in permutations(sorted(group)))


def partitions(inst):
    """Each capacity-feasible split into exactly K nonempty groups, once."""
    n, K = inst.n, inst.K
    for labels in product(range(K), repeat=n):
        top = -1
        ok = True
        for lab in labels:
            if lab > top + 1:
                ok = False
                break
            top = max(top, lab)
        if not ok or top != K - 1:
            continue
        groups = [[c + 1 for c in range(n) if labels[c] == k] for k in range(K)]
        if all(sum(inst.demand(c) for c in g) <= inst.Q for g in groups):
            yield groups


def value(f, x):
    K = len(x)
    m = Fraction(sum(x), K)
    if f is F.MAX:
        return max(x)
    if f is F.LEX:
        return tuple(sorted(x, reverse=True))
    if f is F.RANGE:
        return max(x) - min(x)
    if f is F.MAD:
        return sum(abs(v - m) for v in x) / K
    if f is F.STDEV:
        return sum((v - m) ** 2 for v in x) / K   # variance orders like the deviation
    return Fraction(sum(abs(a - b) for a in x for b in x)) / (2 * K * K * m)


def solutions(inst):
    """(partition key, cost, {resource tag: workloads}) for every feasible partition."""
    memo = {}
    out = []
    for groups in partitions(inst):
        lens = []
        for g in groups:
            t = tuple(g)
            if t not in memo:
                memo[t] = brute_tsp(inst, t)
            lens.append(memo[t])
        w = {"distance": tuple(lens),
             "load": tuple(sum(inst.demand(c) for c in g) for g in groups),
             "stops": tuple(len(g) for g in groups)}
        pkey = tuple(sum(1 << (c - 1) for c in g) for g in groups)  # groups already by min
        out.append((pkey, sum(lens), w))
    return out


def front(sols, spec):
    """{(cost, value)} of the filtered exact front under spec."""
    f = spec.function
    tag = spec.resource.tag
    reps = {}
    for pkey, cost, w in sols:
        v = (cost, value(f, w[tag]))
        if v not in reps or pkey < reps[v][0]:
            reps[v] = (pkey, w[tag])
    pts = list(reps)
    nd = [p for p in pts if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in pts)]
    if tag == "distance" and f in (F.RANGE, F.MAD, F.STDEV, F.GINI):
        srt = {p: sorted(reps[p][1], reverse=True) for p in nd}
        nd = [x for x in nd
              if not any(y[0] < x[0] and all(a <= b for a, b in zip(srt[y], srt[x])) for y in nd)]
    return set(nd)


def archive_vectors(archive):
    f = archive.spec.function
    return {(e.cost, value(f, e.workloads.values)) for e in archive.entries}
