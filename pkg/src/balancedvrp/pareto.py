"""Objective specs, dominance, Pareto archives, and the admissibility filters."""
from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass
from enum import Enum

from .equity import EquityFunction, FUNCTIONS, balance_key, key_value
from .model import (RESOURCES, Resource, Solution, SumClass, WorkloadVector, is_sequencing_local_optimum,
                    route_length, tsp_optimal_order, workload_vector)
from .errors import UsageError


@dataclass(frozen=True, order=False)
class ObjectiveSpec:
    resource: Resource
    function: EquityFunction

    @property
    def label(self) -> str:
        return f"{self.resource.tag}:{self.function.tag}"

    @property
    def index(self) -> int:
        return RESOURCES.index(self.resource) * len(FUNCTIONS) + FUNCTIONS.index(self.function)

    @property
    def needs_filters(self) -> bool:
        # sequencing and consistency filters only matter when a non-monotone function meets
        # a variable-sum resource
        return self.resource.sum_class is SumClass.VARIABLE and not self.function.monotone

    def __str__(self):
        return self.label

    @classmethod
    def parse(cls, text: str) -> "ObjectiveSpec":
        r, sep, f = text.partition(":")
        if not sep:
            raise ValueError(f"spec {text!r} must look like resource:function, e.g. distance:gini")
        return cls(Resource.parse(r), EquityFunction.parse(f))


ALL_SPECS = tuple(ObjectiveSpec(r, f) for r in RESOURCES for f in FUNCTIONS)


def parse_specs(text: str) -> list:
    if text.strip().lower() == "all":
        return list(ALL_SPECS)
    out = []
    for part in text.split(","):
        s = ObjectiveSpec.parse(part)
        if s not in out:
            out.append(s)
    return out


class Regime(Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"


class Status(Enum):
    ADDED = "added"
    DOMINATED = "dominated"
    DUPLICATE = "duplicate"
    INADMISSIBLE = "inadmissible"


def dominates(a, b, spec: ObjectiveSpec | None = None) -> bool:
    """(cost, balance) pairs; Lex balances are workload vectors compared in sorted order."""
    (ca, ba), (cb, bb) = a, b
    if spec is not None and spec.function is EquityFunction.LEX:
        ba, bb = tuple(sorted(ba, reverse=True)), tuple(sorted(bb, reverse=True))
    return ca <= cb and ba <= bb and (ca < cb or ba < bb)


@dataclass(frozen=True)
class Entry:
    solution: Solution
    cost: int
    key: object          # exact comparison key
    workloads: WorkloadVector
    function: EquityFunction

    @property
    def balance(self):
        return key_value(self.function, self.key, len(self.workloads))


def make_entry(sol: Solution, spec: ObjectiveSpec) -> Entry:
    w = workload_vector(sol, spec.resource)
    return Entry(sol, sol.cost, balance_key(spec.function, w), w, spec.function)


def admissible(sol: Solution, spec: ObjectiveSpec, regime: Regime) -> bool:
    if not spec.needs_filters:
        return True
    if regime is Regime.EXACT:
        inst = sol.instance
        return all(route_length(inst, r) == tsp_optimal_order(inst, r)[1] for r in sol.routes)
    return is_sequencing_local_optimum(sol)


def _consistency_violation(y, x) -> bool:
    # y witnesses against x: cheaper and no sorted workload position of x is strictly lower
    return y.cost < x.cost and all(a <= b for a, b in zip(y.workloads.sorted_desc, x.workloads.sorted_desc))


def workload_consistency_filter(front) -> list:
    """Drop entries that cost more than another entry while improving no sorted workload.

    Accepts Entry objects or (solution, cost, WorkloadVector) triples; returns the same kind.
    """
    items = list(front)
    norm = [it if isinstance(it, Entry) else _Triple(*it) for it in items]
    keep = []
    for i, x in enumerate(norm):
        if not any(_consistency_violation(y, x) for j, y in enumerate(norm) if j != i):
            keep.append(items[i])
    return keep


@dataclass(frozen=True)
class _Triple:
    solution: object
    cost: int
    workloads: WorkloadVector


class ParetoArchive:
    """Mutually non-dominated entries under one spec, sorted by cost with strictly falling balance."""

    def __init__(self, spec: ObjectiveSpec, regime: Regime | None = None):
        self.spec = spec
        self.regime = regime
        self.entries: list = []
        self._costs: list = []

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def insert(self, sol: Solution) -> Status:
        if self.regime is not None and not admissible(sol, self.spec, self.regime):
            return Status.INADMISSIBLE
        return self.insert_entry(make_entry(sol, self.spec))

    def insert_entry(self, e: Entry) -> Status:
        p = bisect.bisect_right(self._costs, e.cost) - 1
        if p >= 0:
            q = self.entries[p]
            if q.key < e.key or (q.key == e.key and q.cost < e.cost):
                return Status.DOMINATED
            if q.key == e.key and q.cost == e.cost:
                if e.solution.canonical_key() < q.solution.canonical_key():
                    self.entries[p] = e
                return Status.DUPLICATE
        lo = p + 1
        if p >= 0 and self.entries[p].cost == e.cost:
            lo = p  # same cost, worse key: it goes
        hi = lo
        while hi < len(self.entries) and not (self.entries[hi].key < e.key):
            hi += 1
        self.entries[lo:hi] = [e]
        self._costs[lo:hi] = [e.cost]
        return Status.ADDED

    def finalize(self) -> "ParetoArchive":
        if self.spec.needs_filters and self.regime is not None:
            self.entries = workload_consistency_filter(self.entries)
            self._costs = [e.cost for e in self.entries]
        return self

    def solutions(self) -> list:
        return [e.solution for e in self.entries]

    def balance_values(self) -> list:
        return [e.balance for e in self.entries]

    def lex_ranks(self) -> list:
        # rank 1 is the lexicographically best key; entries are cost-ascending, keys descending
        m = len(self.entries)
        return [m - i for i in range(m)]

    def points(self) -> list:
        """(cost, scalar balance) per entry; Lex uses the rank within this front."""
        if self.spec.function is EquityFunction.LEX:
            return list(zip([e.cost for e in self.entries], self.lex_ranks()))
        return list(zip([e.cost for e in self.entries], self.balance_values()))

    def vectors(self) -> set:
        """Objective vectors with exact keys, for set comparisons between fronts."""
        return {(e.cost, e.key) for e in self.entries}

    def merge(self, other: "ParetoArchive") -> "ParetoArchive":
        if other.spec != self.spec:
            raise UsageError(f"cannot merge {other.spec} into {self.spec}")
        for e in sorted(other.entries, key=lambda e: e.solution.canonical_key()):
            self.insert_entry(e)
        return self

    def copy(self) -> "ParetoArchive":
        a = ParetoArchive(self.spec, self.regime)
        a.entries = list(self.entries)
        a._costs = list(self._costs)
        return a


def archive_from_solutions(spec, solutions, regime=None, finalize=True) -> ParetoArchive:
    a = ParetoArchive(spec, regime)
    for s in solutions:
        a.insert(s)
    return a.finalize() if finalize else a


def front_csv(archive: ParetoArchive) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    K = archive.entries[0].solution.K if archive.entries else 0
    lex = archive.spec.function is EquityFunction.LEX
    w.writerow(["index", "cost", "lex_rank" if lex else "balance"]
               + [f"w{i + 1}" for i in range(K)] + ["routes"])
    coords = archive.lex_ranks() if lex else archive.balance_values()
    for i, (e, b) in enumerate(zip(archive.entries, coords), 1):
        routes = "|".join("-".join(map(str, r)) for r in e.solution.routes)
        bal = b if lex else f"{b:.10g}"
        w.writerow([i, e.cost, bal] + list(e.workloads.sorted_desc) + [routes])
    return buf.getvalue()


def read_front_csv(text: str, instance, spec: ObjectiveSpec, regime=None) -> ParetoArchive:
    """Rebuild an archive from its CSV; balance values are recomputed from the routes."""
    a = ParetoArchive(spec, regime)
    for row in csv.DictReader(io.StringIO(text)):
        routes = [[int(c) for c in r.split("-")] for r in row["routes"].split("|")]
        sol = Solution.from_routes(instance, routes)
        if sol.cost != int(row["cost"]):
            raise UsageError(f"front row {row['index']}: cost {row['cost']} does not match its routes")
        a.insert_entry(make_entry(sol, spec))
    return a
