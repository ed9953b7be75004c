import numpy as np
import pytest

from balancedvrp.analysis import front_points, hypervolume, nadir
from balancedvrp.equity import EquityFunction as F
from balancedvrp.errors import InfeasibleInstanceError, ParseError, UsageError
from balancedvrp.model import Resource, is_sequencing_local_optimum, route_length, tsp_optimal_order
from balancedvrp.pareto import ALL_SPECS, ObjectiveSpec, ParetoArchive, Regime
from balancedvrp.solver_exact import solve_exact
from balancedvrp.solver_heuristic import (HeuristicConfig, construct, direction_levels, merge_reference,
                                          solve_heuristic)

from conftest import make_instance, random_small

DR = ObjectiveSpec(Resource.DISTANCE, F.RANGE)
LL = ObjectiveSpec(Resource.LOAD, F.LEX)


def small_cfg(spec, **kw):
    base = dict(runs=2, directions=6, iterations=30)
    base.update(kw)
    return HeuristicConfig(spec, **base)


def test_config_defaults_and_validation():
    c = HeuristicConfig(DR)
    assert (c.runs, c.directions, c.iterations, c.perturbation) == (10, 20, 2000, 3)
    for k in ("runs", "directions", "iterations", "perturbation"):
        with pytest.raises(ValueError):
            HeuristicConfig(DR, **{k: 0})


def test_config_text(tmp_path):
    text = "spec = load:gini\nruns = 3   # fewer\n\niterations=50\n"
    c = HeuristicConfig.parse(text, seed=7)
    assert c.spec == ObjectiveSpec(Resource.LOAD, F.GINI)
    assert (c.runs, c.iterations, c.seed) == (3, 50, 7)
    p = tmp_path / "h.cfg"
    p.write_text(text)
    assert HeuristicConfig.from_file(p, runs=4).runs == 4
    with pytest.raises(ParseError) as e:
        HeuristicConfig.parse("spec = load:gini\nrunz = 3\n")
    assert e.value.line == 2
    with pytest.raises(ParseError):
        HeuristicConfig.parse("runs = 3\n")
    with pytest.raises(ParseError):
        HeuristicConfig.parse("spec = load:theil\n")


def test_direction_levels():
    lv = direction_levels(DR, 20)
    assert len(lv) == 20 and lv[0] == 0 and lv[-1] == -1
    assert np.all(np.diff(lv[1:-1]) > 0)
    lx = direction_levels(LL, 5)
    assert np.allclose(lx, [1.0, 2 / 3, 1 / 3, 0.0, -1.0])
    assert len(direction_levels(DR, 1)) == 1 and len(direction_levels(DR, 2)) == 2


def test_construct_fits_capacity():
    inst = random_small(15, 4, seed=3)
    groups = construct(inst, np.random.default_rng(0))
    assert sorted(c for g in groups for c in g) == list(inst.customers)
    assert len(groups) == 4 and all(sum(inst.demand(c) for c in g) <= inst.Q for g in groups)


def test_construct_reports_infeasible():
    inst = make_instance([(1, 0), (0, 1), (1, 1)], [6, 6, 6], K=2, Q=10)
    with pytest.raises(InfeasibleInstanceError):
        construct(inst, np.random.default_rng(0), attempts=5)


def test_deterministic():
    inst = random_small(10, 3, seed=4)
    a = solve_heuristic(inst, small_cfg(DR, seed=3))
    b = solve_heuristic(inst, small_cfg(DR, seed=3))
    assert [(e.cost, e.key, e.solution) for e in a] == [(e.cost, e.key, e.solution) for e in b]


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_cost_only_direction_finds_optimum(seed):
    inst = random_small(10, 3, seed=seed)
    best = solve_exact(inst, [DR])[DR].entries[0].cost
    a = solve_heuristic(inst, HeuristicConfig(DR, runs=3, directions=1, iterations=100))
    assert a.entries[0].cost == best


def test_archived_solutions_admissible():
    inst = random_small(12, 3, seed=5)
    for spec in ALL_SPECS[:6] + ALL_SPECS[6:7]:
        a = solve_heuristic(inst, small_cfg(spec))
        assert a.regime is Regime.HEURISTIC
        for s in a.solutions():
            assert s.K == inst.K
            assert all(sum(inst.demand(c) for c in r) <= inst.Q for r in s.routes)
            if spec.needs_filters:
                assert is_sequencing_local_optimum(s)
            # small instances are sequenced exactly
            assert all(route_length(inst, r) == tsp_optimal_order(inst, r)[1] for r in s.routes)


def test_heuristic_front_within_exact():
    inst = random_small(10, 3, seed=6)
    exact = solve_exact(inst)
    for spec in (DR, LL, ObjectiveSpec(Resource.STOPS, F.GINI)):
        a = solve_heuristic(inst, small_cfg(spec, iterations=60))
        ex = exact[spec]
        for e in a:
            # never better than the exact front
            assert not any(e.cost <= x.cost and e.key <= x.key and (e.cost, e.key) != (x.cost, x.key)
                           for x in ex)


@pytest.mark.parametrize("spec", [ObjectiveSpec(Resource.DISTANCE, F.GINI), LL,
                                  ObjectiveSpec(Resource.STOPS, F.MAD)])
def test_sequence_mode_on_larger_instance(spec):
    inst = random_small(40, 4, seed=2)
    a = solve_heuristic(inst, HeuristicConfig(spec, runs=2, directions=4, iterations=10))
    assert len(a) >= 1
    for s in a.solutions():
        assert s.K == 4 and sorted(c for r in s.routes for c in r) == list(inst.customers)
        assert all(sum(inst.demand(c) for c in r) <= inst.Q for r in s.routes)
        assert is_sequencing_local_optimum(s)


def _hv(archives, ref_front):
    ref = nadir(front_points(ref_front))
    return [hypervolume(front_points(a, ref_front), ref) for a in archives]


def test_more_runs_never_hurt():
    inst = random_small(11, 3, seed=7)
    spec = ObjectiveSpec(Resource.DISTANCE, F.STDEV)
    per_run = []
    merged = solve_heuristic(inst, small_cfg(spec, runs=4, iterations=10, directions=3), per_run=per_run)
    assert len(per_run) == 4
    exact = solve_exact(inst, [spec])[spec]
    prefixes = [merge_reference(per_run[:k]) for k in range(1, 5)]
    hv = _hv(prefixes, exact)
    assert all(a <= b + 1e-9 for a, b in zip(hv, hv[1:]))
    # the polished merge can only add to the plain union
    assert hv[-1] <= _hv([merged], exact)[0] + 1e-9
    singles = _hv(per_run, exact)
    assert hv[-1] >= max(singles) - 1e-9


def test_merge_examples():
    inst = random_small(9, 3, seed=8)
    exact = solve_exact(inst, [DR])[DR]
    assert len(exact) >= 2
    assert merge_reference([exact, exact]).vectors() == exact.vectors()
    a, b = ParetoArchive(DR, Regime.HEURISTIC), ParetoArchive(DR, Regime.HEURISTIC)
    a.insert_entry(exact.entries[0])
    b.insert_entry(exact.entries[-1])
    m = merge_reference([a, b])
    assert m.vectors() == {(exact.entries[0].cost, exact.entries[0].key),
                           (exact.entries[-1].cost, exact.entries[-1].key)}
    with pytest.raises(UsageError):
        merge_reference([a, ParetoArchive(LL)])
    with pytest.raises(ValueError):
        merge_reference([])


def test_merge_inserts_known_optimum():
    inst = random_small(9, 3, seed=8)
    exact = solve_exact(inst, [DR])[DR]
    opt = exact.entries[0].solution
    partial = ParetoArchive(DR, Regime.HEURISTIC)
    partial.insert_entry(exact.entries[-1])
    m = merge_reference([partial], known_optimum=opt)
    assert m.entries[0].cost == opt.cost and m.optimum_gap == 0
    g = merge_reference([partial], known_optimum=opt.cost)
    assert g.optimum_gap == pytest.approx((exact.entries[-1].cost - opt.cost) / opt.cost)
