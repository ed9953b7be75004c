import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balancedvrp.equity import EquityFunction as F
from balancedvrp.errors import UsageError
from balancedvrp.model import Resource, Solution, WorkloadVector
from balancedvrp.pareto import (ALL_SPECS, ObjectiveSpec, ParetoArchive, Regime, Status, admissible,
                                archive_from_solutions, dominates, front_csv, make_entry, parse_specs,
                                read_front_csv, workload_consistency_filter)
from balancedvrp.solver_exact import enumerate_feasible

from conftest import make_instance, random_small

DR = ObjectiveSpec(Resource.DISTANCE, F.RANGE)


def test_eighteen_specs():
    assert len(ALL_SPECS) == 18 == len(set(ALL_SPECS))
    assert [s.index for s in ALL_SPECS] == list(range(18))
    assert parse_specs("all") == list(ALL_SPECS)
    assert parse_specs("distance:gini,load:max,distance:gini") == [
        ObjectiveSpec(Resource.DISTANCE, F.GINI), ObjectiveSpec(Resource.LOAD, F.MAX)]
    with pytest.raises(ValueError):
        ObjectiveSpec.parse("distance")
    assert {s for s in ALL_SPECS if s.needs_filters} == {
        ObjectiveSpec(Resource.DISTANCE, f) for f in (F.RANGE, F.MAD, F.STDEV, F.GINI)}


def test_dominance_examples():
    assert not dominates((6654, 186), (6739, 182))
    assert not dominates((6739, 182), (6654, 186))
    assert not dominates((10, 5), (10, 5))
    assert dominates((9, 5), (10, 7))
    lex = ObjectiveSpec(Resource.LOAD, F.LEX)
    assert dominates((9, (3, 5)), (9, (6, 1)), lex)
    assert not dominates((9, (5, 3)), (9, (3, 5)), lex)


def test_insert_statuses(six):
    spec = ObjectiveSpec(Resource.LOAD, F.RANGE)
    sols = list(enumerate_feasible(six))
    best = min(sols, key=lambda s: s.cost)
    a = ParetoArchive(spec, Regime.EXACT)
    assert a.insert(best) is Status.ADDED
    assert a.insert(best) is Status.DUPLICATE
    for s in sols:
        a.insert(s)
    before = [(e.cost, e.key) for e in a]
    front = {(e.cost, e.key) for e in a}
    # a solution strictly worse than some entry in both coordinates
    victim = next(s for s in sols
                  if any(c < s.cost and k < make_entry(s, spec).key for c, k in front))
    assert a.insert(victim) is Status.DOMINATED
    assert [(e.cost, e.key) for e in a] == before


def _crossing_solution():
    inst = make_instance([(0, 10), (10, 10), (10, 20), (0, 20)], [1] * 4, K=1)
    return Solution.from_routes(inst, [[1, 3, 2, 4]])


def test_admissibility_rules():
    sol = _crossing_solution()
    for regime in Regime:
        assert not admissible(sol, DR, regime)
        assert admissible(sol, ObjectiveSpec(Resource.DISTANCE, F.MAX), regime)
        assert admissible(sol, ObjectiveSpec(Resource.LOAD, F.GINI), regime)
    a = ParetoArchive(DR, Regime.HEURISTIC)
    assert a.insert(sol) is Status.INADMISSIBLE


def _t(cost, loads):
    return (f"s{cost}", cost, WorkloadVector(Resource.DISTANCE, tuple(loads)))


def test_consistency_examples():
    x, y = _t(10, (5, 5)), _t(9, (5, 5))
    assert workload_consistency_filter([x, y]) == [y]
    x, y = _t(10, (6, 4)), _t(9, (7, 3))
    assert workload_consistency_filter([x, y]) == [x, y]
    # equal cost never witnesses
    x, y = _t(10, (6, 4)), _t(10, (5, 4))
    assert len(workload_consistency_filter([x, y])) == 2


def test_exact_front_consistent(six):
    a = archive_from_solutions(DR, enumerate_feasible(six), Regime.EXACT)
    for x in a:
        for y in a:
            assert not (y.cost < x.cost and all(
                p <= q for p, q in zip(y.workloads.sorted_desc, x.workloads.sorted_desc)))


def test_merge_needs_matching_spec():
    with pytest.raises(UsageError):
        ParetoArchive(DR).merge(ParetoArchive(ObjectiveSpec(Resource.LOAD, F.MAX)))


def test_csv_roundtrip(six):
    for spec in (DR, ObjectiveSpec(Resource.STOPS, F.LEX)):
        a = archive_from_solutions(spec, enumerate_feasible(six), Regime.EXACT)
        text = front_csv(a)
        b = read_front_csv(text, six, spec, Regime.EXACT)
        assert b.vectors() == a.vectors()
        assert front_csv(b) == text
    bad = text.replace(f",{a.entries[0].cost},", f",{a.entries[0].cost + 1},", 1)
    with pytest.raises(UsageError):
        read_front_csv(bad, six, spec)


@pytest.fixture(scope="module")
def pool():
    inst = random_small(7, 3, seed=21)
    return list(enumerate_feasible(inst))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(ALL_SPECS))
def test_insertion_order_independent(pool, seed, spec):
    rng = np.random.default_rng(seed)
    order = [pool[i] for i in rng.permutation(len(pool))]
    a = archive_from_solutions(spec, pool, Regime.EXACT)
    b = archive_from_solutions(spec, order, Regime.EXACT)
    assert [(e.cost, e.key, e.solution) for e in a] == [(e.cost, e.key, e.solution) for e in b]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(ALL_SPECS))
def test_archive_ordering_and_filter_keeps_cheapest(pool, seed, spec):
    rng = np.random.default_rng(seed)
    sub = [pool[i] for i in rng.choice(len(pool), size=min(40, len(pool)), replace=False)]
    raw = archive_from_solutions(spec, sub, Regime.EXACT, finalize=False)
    cheapest = raw.entries[0]
    a = raw.copy().finalize()
    assert a.entries[0] is cheapest
    assert min(s.cost for s in sub) == cheapest.cost
    for p, q in zip(a.entries, a.entries[1:]):
        assert p.cost < q.cost and p.key > q.key
    for p in a:
        for q in a:
            assert not dominates((p.cost, p.key), (q.cost, q.key))
