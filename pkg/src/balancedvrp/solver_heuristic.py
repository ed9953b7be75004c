"""Multi-directional iterated local search for approximate fronts on instances of any size."""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import _ils, _ils_seq
from ._tsp import subset_tables
from .errors import InfeasibleInstanceError, ParseError
from .instance import Instance
from .equity import EquityFunction
from .model import Solution, tsp_optimal_order
from .pareto import ObjectiveSpec, ParetoArchive, Regime, make_entry

# up to this many customers, route lengths come from the exact subset table
TABLE_LIMIT = 22
LAMBDA_MIN = 0.02
LAMBDA_MAX = 1000.0


@dataclass(frozen=True)
class HeuristicConfig:
    spec: ObjectiveSpec
    runs: int = 10
    directions: int = 20
    iterations: int = 2000
    perturbation: int = 3
    seed: int = 0

    def __post_init__(self):
        for name in ("runs", "directions", "iterations", "perturbation"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    @classmethod
    def parse(cls, text: str, **overrides) -> "HeuristicConfig":
        """key = value lines; '#' starts a comment. Keyword overrides win over the text."""
        known = {f.name for f in fields(cls)}
        vals = {}
        for no, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            k, sep, v = line.partition("=")
            k, v = k.strip(), v.strip()
            if not sep or k not in known:
                raise ParseError(f"expected one of {sorted(known)} = value, got {raw.strip()!r}", no)
            try:
                vals[k] = ObjectiveSpec.parse(v) if k == "spec" else int(v)
            except ValueError as e:
                raise ParseError(str(e), no) from None
        vals.update({k: v for k, v in overrides.items() if v is not None})
        if "spec" not in vals:
            raise ParseError("missing spec", 0)
        return cls(**vals)

    @classmethod
    def from_file(cls, path, **overrides) -> "HeuristicConfig":
        return cls.parse(Path(path).read_text(), **overrides)


def direction_levels(spec: ObjectiveSpec, D: int) -> np.ndarray:
    """Direction parameters for one run, in sweep order.

    Scalar functions: weight 0 (cost only), a geometric grid of weights on normalized balance,
    and last -1, meaning balance first with cost as tie-break. Lex: caps on the largest
    workload as fractions of the archive's span, starting uncapped (cost only), then -1 for
    the full lexicographic order.
    """
    if D == 1:
        return np.array([1.0 if spec.function is EquityFunction.LEX else 0.0])
    if spec.function is EquityFunction.LEX:
        return np.concatenate([np.linspace(1.0, 0.0, D - 1), [-1.0]])
    if D == 2:
        return np.array([0.0, -1.0])
    return np.concatenate([[0.0], np.geomspace(LAMBDA_MIN, LAMBDA_MAX, D - 2), [-1.0]])


def construct(inst: Instance, rng: np.random.Generator, attempts: int = 200) -> list:
    """K groups of customers: K far customers seed the routes, the rest go in by falling
    demand to the feasible route whose nearest member is closest (random ties and, after the
    first attempt, random seeds and noisy demand order)."""
    n, K, Q, d = inst.n, inst.K, inst.Q, inst.dist
    q = np.array(inst.demands)
    for attempt in range(attempts):
        if attempt == 0:
            seeds = list(np.argsort(-d[0, 1:], kind="stable")[:K] + 1)
            order = sorted(range(1, n + 1), key=lambda i: (-q[i - 1], i))
        else:
            seeds = list(rng.choice(np.arange(1, n + 1), size=K, replace=False))
            noise = rng.random(n) * q.max() * min(1.0, attempt / 50)
            order = sorted(range(1, n + 1), key=lambda i: -(q[i - 1] + noise[i - 1]))
        groups = [[int(s)] for s in seeds]
        loads = [int(q[s - 1]) for s in seeds]
        ok = True
        for i in order:
            if i in seeds:
                continue
            best, bestd = -1, None
            for r, g in enumerate(groups):
                if loads[r] + q[i - 1] > Q:
                    continue
                dd = min(int(d[i, j]) for j in g)
                if bestd is None or dd < bestd:
                    best, bestd = r, dd
            if best < 0:
                ok = False
                break
            groups[best].append(i)
            loads[best] += int(q[i - 1])
        if ok:
            return groups
    raise InfeasibleInstanceError(
        f"{inst.name}: no packing of the demands into {K} routes of capacity {Q} found "
        f"after {attempts} constructions")


def _masks(groups):
    return np.array([sum(1 << (c - 1) for c in g) for g in groups], dtype=np.int64)


class _Tables:
    def __init__(self, inst):
        d = np.ascontiguousarray(inst.dist)
        self.tsp, self.load = subset_tables(d, np.array(inst.demands, dtype=np.int64), inst.Q)


def _table_archive(inst, spec, fill, capacity=4096):
    # fill(acost, akn, akd, avec, amask, asz, flag) runs a kernel; retried with room to spare on overflow
    s, K = spec.index, inst.K
    while True:
        ns = _ils.NS
        acost = np.zeros((ns, capacity), np.int64)
        akn = np.zeros((ns, capacity), np.int64)
        akd = np.ones((ns, capacity), np.int64)
        avec = np.zeros((ns, capacity, K), np.int64)
        amask = np.zeros((ns, capacity, K), np.int64)
        asz = np.zeros(ns, np.int64)
        flag = np.zeros(1, np.int64)
        fill(acost, akn, akd, avec, amask, asz, flag)
        if not flag[0]:
            break
        capacity *= 4
    out = []
    for e in range(int(asz[s])):
        gs = []
        for m in amask[s, e]:
            m = int(m)
            gs.append(tuple(i + 1 for i in range(inst.n) if m >> i & 1))
        out.append(gs)
    return out


def _obit(inst):
    return np.array([1 << i for i in range(inst.n)], dtype=np.int64)


def _run_table(inst, spec, cfg, run_seed, groups, tables, pls=True):
    s, K, obit = spec.index, inst.K, _obit(inst)
    levels = direction_levels(spec, cfg.directions)

    def fill(acost, akn, akd, avec, amask, asz, flag):
        _ils.ils_run(s, inst.n, K, tables.tsp, tables.load, inst.Q, _masks(groups), levels,
                     cfg.iterations, cfg.perturbation, run_seed, acost, akn, akd, avec, amask,
                     asz, obit, flag)
        if not flag[0] and pls:
            _ils.pareto_local_search(s, inst.n, K, tables.tsp, tables.load, inst.Q, acost, akn, akd,
                                     avec, amask, asz, obit, flag, 1 << 30)

    return _table_archive(inst, spec, fill)


def _polish_table(inst, spec, tables, archive):
    seeds = np.array([_masks(s.routes) for s in archive.solutions()], dtype=np.int64).reshape(-1, inst.K)
    s, obit = spec.index, _obit(inst)

    def fill(acost, akn, akd, avec, amask, asz, flag):
        _ils.polish(s, inst.n, inst.K, tables.tsp, tables.load, inst.Q, seeds, acost, akn, akd,
                    avec, amask, asz, obit, flag)

    return _table_archive(inst, spec, fill)


def _as_solutions(inst, found):
    return [Solution.from_routes(inst, [tsp_optimal_order(inst, g)[0] for g in gs], validate=False)
            for gs in found]


def _run_seq(inst, spec, cfg, run_seed, groups):
    return _ils_seq.run(inst, spec, cfg, run_seed, groups, direction_levels(spec, cfg.directions))


def solve_heuristic(inst: Instance, config: HeuristicConfig, per_run: list | None = None) -> ParetoArchive:
    """Merged, filtered archive over config.runs independent runs (run i uses seed + i).

    On table-sized instances the union is then polished by a two-move Pareto local search, so
    the result can improve on the plain union of the per-run archives. Deterministic for a fixed config. Pass a list as per_run to collect each run's own archive.
    """
    spec = config.spec
    use_table = inst.n <= TABLE_LIMIT
    tables = _Tables(inst) if use_table else None
    merged = ParetoArchive(spec, Regime.HEURISTIC)
    for run in range(config.runs):
        seed = config.seed + run
        rng = np.random.default_rng(seed)
        groups = construct(inst, rng)
        if use_table:
            sols = _as_solutions(inst, _run_table(inst, spec, config, seed, groups, tables))
        else:
            sols = [Solution.from_routes(inst, routes, validate=False)
                    for routes in _run_seq(inst, spec, config, seed, groups)]
        a = ParetoArchive(spec, Regime.HEURISTIC)
        for sol in sols:
            a.insert_entry(make_entry(sol, spec))
        if per_run is not None:
            per_run.append(a.copy().finalize())
        merged.merge(a)
    if use_table and len(merged):
        # one deep local-search pass over the union of the runs
        for sol in _as_solutions(inst, _polish_table(inst, spec, tables, merged)):
            merged.insert_entry(make_entry(sol, spec))
    return merged.finalize()


def merge_reference(fronts, known_optimum=None) -> ParetoArchive:
    """Non-dominated union of several fronts for one spec.

    known_optimum may be a cost-optimal Solution, which joins the union, or just its cost; in
    either case the relative gap of the cheapest merged entry is left on .optimum_gap.
    """
    fronts = list(fronts)
    if not fronts:
        raise ValueError("no fronts to merge")
    out = ParetoArchive(fronts[0].spec, Regime.HEURISTIC)
    for f in fronts:
        out.merge(f)
    best = None
    if isinstance(known_optimum, Solution):
        out.insert_entry(make_entry(known_optimum, out.spec))
        best = known_optimum.cost
    elif known_optimum is not None:
        best = int(known_optimum)
    out.finalize()
    out.optimum_gap = None
    if best and out.entries:
        out.optimum_gap = (out.entries[0].cost - best) / best
    return out


def with_overrides(cfg: HeuristicConfig, **kw) -> HeuristicConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
