"""Solutions, workload vectors, and exact route sequencing."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from ._tsp import hk_finish_table
from .errors import CapabilityError, ParseError, StructureError
from .instance import Instance

HELD_KARP_LIMIT = 20


class SumClass(Enum):
    CONSTANT = "constant-sum"
    VARIABLE = "variable-sum"


class Resource(Enum):
    DISTANCE = "distance"
    LOAD = "load"
    STOPS = "stops"

    @property
    def sum_class(self) -> SumClass:
        return SumClass.VARIABLE if self is Resource.DISTANCE else SumClass.CONSTANT

    @property
    def tag(self) -> str:
        return self.value

    @classmethod
    def parse(cls, text: str) -> "Resource":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown resource {text!r}; expected distance, load or stops") from None


RESOURCES = (Resource.DISTANCE, Resource.LOAD, Resource.STOPS)


def route_length(inst: Instance, route) -> int:
    d = inst.dist
    prev, total = 0, 0
    for c in route:
        total += int(d[prev, c])
        prev = c
    return total + int(d[prev, 0])


def canonical_route(route) -> tuple:
    route = tuple(int(c) for c in route)
    return route if route[0] <= route[-1] else route[::-1]


def route_mask(route) -> int:
    m = 0
    for c in route:
        m |= 1 << (c - 1)
    return m


@dataclass(frozen=True)
class WorkloadVector:
    resource: Resource
    values: tuple

    @property
    def sorted_desc(self) -> tuple:
        return tuple(sorted(self.values, reverse=True))

    @property
    def total(self):
        return sum(self.values)

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Solution:
    """K routes, depot implicit at both ends.

    Routes are stored canonically: each read from its smaller end, then ordered by decreasing
    length with ties broken by the customer sequence. Two solutions with the same route set
    therefore compare equal.
    """
    instance: Instance = field(compare=False, repr=False, hash=False)
    routes: tuple
    cost: int

    @classmethod
    def from_routes(cls, inst: Instance, routes, validate: bool = True) -> "Solution":
        rs = [canonical_route(r) for r in routes if len(r)]
        if validate:
            check_routes(inst, rs)
        lens = [route_length(inst, r) for r in rs]
        order = sorted(range(len(rs)), key=lambda i: (-lens[i], rs[i]))
        return cls(inst, tuple(rs[i] for i in order), int(sum(lens)))

    @property
    def K(self) -> int:
        return len(self.routes)

    def route_lengths(self) -> tuple:
        return tuple(route_length(self.instance, r) for r in self.routes)

    def masks(self) -> tuple:
        return tuple(route_mask(r) for r in self.routes)

    def canonical_key(self) -> tuple:
        # partition first (route masks ordered by smallest customer), then sequencing
        rs = sorted(self.routes, key=min)
        return tuple(route_mask(r) for r in rs), tuple(rs)

    def workloads(self, r: Resource) -> WorkloadVector:
        return workload_vector(self, r)

    def edges(self) -> list:
        """Undirected edges including both depot legs, as a list (a multiset)."""
        out = []
        for r in self.routes:
            path = (0,) + r + (0,)
            for a, b in zip(path, path[1:]):
                out.append((a, b) if a <= b else (b, a))
        return out


def check_routes(inst: Instance, routes):
    if len(routes) != inst.K:
        raise StructureError(f"expected {inst.K} nonempty routes, got {len(routes)}")
    seen = [c for r in routes for c in r]
    if sorted(seen) != list(inst.customers):
        raise StructureError("every customer must appear in exactly one route, exactly once")
    for r in routes:
        load = sum(inst.demand(c) for c in r)
        if load > inst.Q:
            raise StructureError(f"route {r} carries {load} > capacity {inst.Q}")


def workload_vector(sol: Solution, r: Resource) -> WorkloadVector:
    inst = sol.instance
    if r is Resource.DISTANCE:
        vals = sol.route_lengths()
    elif r is Resource.LOAD:
        vals = tuple(sum(inst.demand(c) for c in route) for route in sol.routes)
    else:
        vals = tuple(len(route) for route in sol.routes)
    return WorkloadVector(r, tuple(int(v) for v in vals))


def tsp_optimal_order(inst: Instance, subset) -> tuple:
    """Shortest depot tour over the subset; ties go to the lexicographically smallest sequence."""
    cust = tuple(sorted(set(int(c) for c in subset)))
    if not cust:
        raise ValueError("subset must contain at least one customer")
    if len(cust) > HELD_KARP_LIMIT:
        raise CapabilityError(
            f"{len(cust)} customers exceed the exact sequencing limit of {HELD_KARP_LIMIT}; "
            "use local-search sequencing (solver_heuristic) instead")
    return _tsp_cached(inst, cust)


@lru_cache(maxsize=1 << 16)
def _tsp_cached(inst: Instance, cust: tuple):
    m = len(cust)
    nodes = np.array((0,) + cust)
    d = np.ascontiguousarray(inst.dist[np.ix_(nodes, nodes)])
    h = hk_finish_table(d)
    rem = (1 << m) - 1
    seq = []
    prev = 0
    while rem:
        best, pick = None, None
        x = rem
        while x:
            low = x & -x
            j = low.bit_length() - 1
            v = int(d[prev, j + 1]) + int(h[rem ^ low, j])
            if best is None or v < best:
                best, pick = v, j
            x ^= low
        seq.append(pick)
        prev = pick + 1
        rem ^= 1 << pick
    length = int(h[((1 << m) - 1) ^ (1 << seq[0]), seq[0]] + d[0, seq[0] + 1])
    return tuple(cust[j] for j in seq), length


def _intra_improvable(d, path) -> bool:
    # path includes the depot at both ends; moves never touch the depot endpoints
    m = len(path) - 2
    if m < 2:
        return False
    base = sum(int(d[a, b]) for a, b in zip(path, path[1:]))
    inner = list(path[1:-1])

    def length(seq):
        p = (0,) + tuple(seq) + (0,)
        return sum(int(d[a, b]) for a, b in zip(p, p[1:]))

    # 2-opt: reverse inner[i..j]
    for i in range(m - 1):
        for j in range(i + 1, m):
            a, b = path[i], path[i + 1]
            c, e = path[j + 1], path[j + 2]
            if int(d[a, c]) + int(d[b, e]) < int(d[a, b]) + int(d[c, e]):
                return True
    # move: take one customer out and reinsert elsewhere
    for i in range(m):
        rest = inner[:i] + inner[i + 1:]
        for p in range(m):
            if p == i:
                continue
            cand = rest[:p] + [inner[i]] + rest[p:]
            if length(cand) < base:
                return True
    # swap two customers
    for i in range(m - 1):
        for j in range(i + 1, m):
            cand = inner[:]
            cand[i], cand[j] = cand[j], cand[i]
            if length(cand) < base:
                return True
    return False


def is_sequencing_local_optimum(sol: Solution) -> bool:
    """No intra-route move, swap, or 2-opt reversal strictly shortens any route."""
    d = sol.instance.dist
    return not any(_intra_improvable(d, (0,) + r + (0,)) for r in sol.routes)


def sequence_optimally(inst: Instance, groups) -> Solution:
    return Solution.from_routes(inst, [tsp_optimal_order(inst, g)[0] for g in groups])


def format_solution(sol: Solution) -> str:
    lines = [f"instance {sol.instance.name}", f"cost {sol.cost}"]
    for r in sol.routes:
        lines.append("route " + " ".join(map(str, r)))
    for res in RESOURCES:
        lines.append(f"workload {res.tag} " + " ".join(map(str, workload_vector(sol, res).values)))
    return "\n".join(lines) + "\n"


def parse_solution(text: str, inst: Instance) -> Solution:
    routes, cost = [], None
    for lineno, raw in enumerate(text.splitlines(), 1):
        toks = raw.split()
        if not toks:
            continue
        try:
            if toks[0] == "route":
                routes.append([int(t) for t in toks[1:]])
            elif toks[0] == "cost":
                cost = int(toks[1])
        except (ValueError, IndexError):
            raise ParseError(f"bad solution line {raw!r}", lineno) from None
    sol = Solution.from_routes(inst, routes)
    if cost is not None and cost != sol.cost:
        raise StructureError(f"stated cost {cost} differs from recomputed cost {sol.cost}")
    return sol
