"""Exact Pareto fronts for small instances, all objective specs in one sweep."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _bnb
from ._tsp import subset_tables
from .equity import verdict_from_totals
from .errors import CapabilityError, InfeasibleInstanceError
from .instance import Instance
from .model import RESOURCES, Solution, tsp_optimal_order
from .pareto import ALL_SPECS, ParetoArchive, Regime, front_csv, make_entry

MAX_CUSTOMERS = 22
MAX_VEHICLES = 6


def _guard(inst: Instance, max_customers, max_vehicles):
    if inst.n > max_customers or inst.K > max_vehicles:
        raise CapabilityError(
            f"{inst.name}: n={inst.n}, K={inst.K} exceeds the exact bounds "
            f"(n <= {max_customers}, K <= {max_vehicles}); use solver_heuristic")


@dataclass
class EnumerationState:
    """Restricted-growth assignment: customer i joins an open route or opens the next one."""
    K: int
    Q: int
    assignment: list = field(default_factory=list)   # route index per assigned customer
    loads: list = field(default_factory=list)

    def options(self, demand: int, remaining_after: int):
        opened = len(self.loads)
        for r in range(opened):
            # never leave more empty routes than customers still to place
            if self.loads[r] + demand <= self.Q and self.K - opened <= remaining_after:
                yield r
        if opened < self.K and demand <= self.Q and self.K - opened - 1 <= remaining_after:
            yield opened


def enumerate_feasible(inst: Instance, max_customers: int = MAX_CUSTOMERS,
                       max_vehicles: int = MAX_VEHICLES):
    """Every partition of the customers into exactly K nonempty capacity-feasible routes, once,
    with each route sequenced by Held-Karp. Order is deterministic."""
    _guard(inst, max_customers, max_vehicles)
    n = inst.n
    st = EnumerationState(inst.K, inst.Q)
    groups = [[] for _ in range(inst.K)]

    def rec(i):
        if i > n:
            yield Solution.from_routes(inst, [tsp_optimal_order(inst, g)[0] for g in groups],
                                       validate=False)
            return
        q = inst.demand(i)
        for r in list(st.options(q, n - i)):
            new = r == len(st.loads)
            if new:
                st.loads.append(0)
            st.loads[r] += q
            st.assignment.append(r)
            groups[r].append(i)
            yield from rec(i + 1)
            groups[r].pop()
            st.assignment.pop()
            st.loads[r] -= q
            if new:
                st.loads.pop()

    yield from rec(1)


def farthest_first(inst: Instance) -> np.ndarray:
    # search numbering: customers far from the depot get the low bits, so the route that is
    # fixed first is one of the expensive ones and bounds bite early
    return np.argsort(-inst.dist[0, 1:], kind="stable")


@dataclass
class ExactTables:
    perm: np.ndarray      # search bit j is customer perm[j] + 1
    tsp: np.ndarray
    load: np.ndarray

    def to_customers(self, mask: int) -> tuple:
        out = []
        j = 0
        while mask:
            if mask & 1:
                out.append(int(self.perm[j]) + 1)
            mask >>= 1
            j += 1
        return tuple(sorted(out))


def build_tables(inst: Instance, perm=None) -> ExactTables:
    perm = farthest_first(inst) if perm is None else np.asarray(perm)
    idx = np.concatenate([[0], perm + 1])
    d = np.ascontiguousarray(inst.dist[np.ix_(idx, idx)])
    q = np.array(inst.demands, dtype=np.int64)[perm]
    tsp, load = subset_tables(d, q, inst.Q)
    return ExactTables(perm, tsp, load)


def solve_exact(inst: Instance, specs=None, method: str = "search", stats: dict | None = None,
                max_customers: int = MAX_CUSTOMERS, max_vehicles: int = MAX_VEHICLES) -> dict:
    """Map spec -> exact ParetoArchive over all capacity-feasible, TSP-optimally sequenced
    solutions; Distance with a non-monotone function also passes the consistency filter.

    method "enumerate" offers every capacity-feasible partition to every archive in one
    compiled pass; "search" skips subtrees whose proven lower bounds are already dominated
    and returns the same fronts far faster; "reference" inserts each Solution from
    enumerate_feasible in pure Python (slow, for cross-checks).
    """
    _guard(inst, max_customers, max_vehicles)
    specs = list(ALL_SPECS if specs is None else specs)
    t0 = time.perf_counter()
    if method == "reference":
        archives = {s: ParetoArchive(s, Regime.EXACT) for s in specs}
        count = 0
        for sol in enumerate_feasible(inst, max_customers, max_vehicles):
            count += 1
            for a in archives.values():
                a.insert(sol)
        info = {"solutions": count}
    elif method in ("search", "enumerate"):
        archives, info = _compiled(inst, specs, method)
    else:
        raise ValueError(f"unknown method {method!r}")
    for a in archives.values():
        a.finalize()
    if any(not a.entries for a in archives.values()):
        raise InfeasibleInstanceError(f"{inst.name}: no feasible partition into {inst.K} routes")
    if stats is not None:
        stats.update(info)
        stats["runtime_s"] = time.perf_counter() - t0
        stats["method"] = method
    return archives


def _compiled(inst: Instance, specs, method):
    tab = build_tables(inst)
    obit = np.array([1 << int(p) for p in tab.perm], dtype=np.int64)
    active = np.zeros(_bnb.NS, dtype=np.bool_)
    for s in specs:
        active[s.index] = True
    run = _bnb.pareto_search if method == "search" else _bnb.enumerate_fronts
    acost, akn, akd, avec, amask, asz, st = run(inst.n, inst.K, tab.tsp, tab.load, inst.Q, obit, active)
    archives = {}
    for s in specs:
        a = ParetoArchive(s, Regime.EXACT)
        i = s.index
        for e in range(int(asz[i])):
            groups = [tab.to_customers(int(m)) for m in amask[i, e]]
            sol = Solution.from_routes(inst, [tsp_optimal_order(inst, g)[0] for g in groups],
                                       validate=False)
            if sol.cost != int(acost[i, e]):
                raise AssertionError("search cost disagrees with the sequenced solution")
            a.insert_entry(make_entry(sol, s))
        archives[s] = a
    info = {"nodes": int(st[0]), "pruned": int(st[1]), "solutions": int(st[2])}
    return archives, info


def scan_partitions(inst: Instance, max_customers: int = MAX_CUSTOMERS,
                    max_vehicles: int = MAX_VEHICLES) -> dict:
    """Visit every feasible solution and report the workload-total range per resource."""
    _guard(inst, max_customers, max_vehicles)
    tab = build_tables(inst)
    count, dlo, dhi, llo, lhi, slo, shi = _bnb.scan_all_partitions(inst.n, inst.K, tab.tsp, tab.load,
                                                                    inst.Q)
    lohi = dict(zip(RESOURCES, [(dlo, dhi), (llo, lhi), (slo, shi)]))
    return {r: verdict_from_totals(r, count, *lohi[r]) for r in RESOURCES}


def front_filename(inst_name: str, spec) -> str:
    return f"{inst_name}__{spec.resource.tag}-{spec.function.tag}.csv"


def write_fronts(inst: Instance, archives: dict, outdir, runtime_s: float | None = None) -> list:
    """Per-spec front CSVs plus <instance>__manifest.json (spec, cardinality, runtime).

    Runtimes live only in the JSON so the CSVs stay byte-identical across reruns.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    rows = []
    for spec, a in archives.items():
        p = outdir / front_filename(inst.name, spec)
        p.write_text(front_csv(a))
        paths.append(p)
        rows.append({"instance": inst.name, "spec": spec.label, "cardinality": len(a), "file": p.name})
    man = outdir / f"{inst.name}__manifest.json"
    man.write_text(json.dumps({"instance": inst.name, "runtime_s": runtime_s, "fronts": rows}, indent=2))
    paths.append(man)
    return paths
