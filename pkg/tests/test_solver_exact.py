import json

import pytest

from balancedvrp.equity import EquityFunction as F
from balancedvrp.errors import CapabilityError, InfeasibleInstanceError
from balancedvrp.model import Resource, tsp_optimal_order, route_length
from balancedvrp.pareto import ALL_SPECS, ObjectiveSpec
from balancedvrp.solver_exact import enumerate_feasible, scan_partitions, solve_exact, write_fronts

from conftest import make_instance, random_small
import oracle


def test_forced_singletons():
    inst = make_instance([(1, 0), (0, 1), (1, 1)], [1, 1, 1], K=3)
    sols = list(enumerate_feasible(inst))
    assert len(sols) == 1 and sorted(sols[0].routes) == [(1,), (2,), (3,)]


def test_stirling_count():
    inst = make_instance([(1, 0), (0, 1), (1, 1), (2, 2)], [1] * 4, K=2)
    assert len(list(enumerate_feasible(inst))) == 7


def test_binding_capacity_count_matches_oracle():
    for seed in range(5):
        inst = random_small(6, 3, seed=seed)
        sols = list(enumerate_feasible(inst))
        assert len(sols) == sum(1 for _ in oracle.partitions(inst))
        assert len({frozenset(s.masks()) for s in sols}) == len(sols)


def test_every_route_held_karp_optimal(six):
    for sol in enumerate_feasible(six):
        for r in sol.routes:
            assert route_length(six, r) == tsp_optimal_order(six, r)[1]


def test_guard():
    inst = random_small(23, 5, seed=0, binding=False)
    with pytest.raises(CapabilityError):
        list(enumerate_feasible(inst))
    with pytest.raises(CapabilityError):
        solve_exact(inst)


def test_no_packing_is_infeasible():
    inst = make_instance([(1, 0), (0, 1), (1, 1)], [6, 6, 6], K=2, Q=10)
    with pytest.raises(InfeasibleInstanceError):
        solve_exact(inst)


@pytest.mark.parametrize("method", ["search", "enumerate", "reference"])
@pytest.mark.parametrize("seed, n, K, binding", [(1, 6, 2, True), (2, 7, 3, True), (3, 8, 2, False),
                                                 (4, 8, 3, True), (5, 5, 3, False)])
def test_fronts_match_oracle(method, seed, n, K, binding):
    inst = random_small(n, K, seed=seed, binding=binding)
    fronts = solve_exact(inst, method=method)
    sols = oracle.solutions(inst)
    for spec in ALL_SPECS:
        assert oracle.archive_vectors(fronts[spec]) == oracle.front(sols, spec), spec


def test_shared_cost_optimum():
    inst = random_small(9, 3, seed=8)
    fronts = solve_exact(inst)
    assert len({a.entries[0].cost for a in fronts.values()}) == 1
    assert fronts[ALL_SPECS[0]].entries[0].cost == min(s.cost for s in enumerate_feasible(inst))


def test_even_stop_split_reaches_zero():
    inst = random_small(9, 3, seed=9, binding=False)
    fronts = solve_exact(inst)
    for f in (F.RANGE, F.MAD, F.STDEV, F.GINI):
        assert fronts[ObjectiveSpec(Resource.STOPS, f)].entries[-1].balance == 0


def test_search_equals_enumeration_midsize():
    inst = random_small(12, 4, seed=12)
    a = solve_exact(inst, method="search")
    b = solve_exact(inst, method="enumerate")
    for spec in ALL_SPECS:
        assert a[spec].vectors() == b[spec].vectors(), spec


def test_spec_subset_and_stats():
    inst = random_small(8, 3, seed=6)
    specs = [ObjectiveSpec(Resource.LOAD, F.GINI), ObjectiveSpec(Resource.DISTANCE, F.STDEV)]
    st = {}
    fronts = solve_exact(inst, specs, method="enumerate", stats=st)
    assert set(fronts) == set(specs)
    assert st["solutions"] == sum(1 for _ in oracle.partitions(inst))
    full = solve_exact(inst)
    for s in specs:
        assert fronts[s].vectors() == full[s].vectors()


def test_scan_constant_sums():
    inst = random_small(10, 3, seed=4)
    v = scan_partitions(inst)
    assert v[Resource.LOAD].verdict == "constant-sum" and v[Resource.LOAD].min_total == inst.total_demand
    assert v[Resource.STOPS].verdict == "constant-sum" and v[Resource.STOPS].max_total == inst.n
    assert v[Resource.DISTANCE].verdict == "variable-sum"
    assert v[Resource.LOAD].solutions == len(list(enumerate_feasible(inst)))


def test_written_fronts_are_stable(tmp_path):
    inst = random_small(8, 3, seed=2)
    fronts = solve_exact(inst)
    files = write_fronts(inst, fronts, tmp_path / "a", runtime_s=1.0)
    again = write_fronts(inst, solve_exact(inst), tmp_path / "b", runtime_s=2.0)
    csvs = sorted(p for p in map(str, files) if p.endswith(".csv"))
    assert len(csvs) == 18
    for p, q in zip(sorted(map(str, files)), sorted(map(str, again))):
        if p.endswith(".csv"):
            assert open(p).read() == open(q).read()
    man = [p for p in map(str, files) if p.endswith(".json")]
    data = json.load(open(man[0]))
    assert data["instance"] == inst.name
