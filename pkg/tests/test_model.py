import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from balancedvrp.errors import CapabilityError, StructureError
from balancedvrp.instance import Instance
from balancedvrp.model import (RESOURCES, Resource, Solution, SumClass, format_solution,
                               is_sequencing_local_optimum, parse_solution, route_length,
                               sequence_optimally, tsp_optimal_order, workload_vector)

from conftest import make_instance, random_small
from oracle import brute_tsp


def test_resource_sum_classes():
    assert Resource.DISTANCE.sum_class is SumClass.VARIABLE
    assert Resource.LOAD.sum_class is SumClass.CONSTANT
    assert Resource.STOPS.sum_class is SumClass.CONSTANT
    assert Resource.parse("Load") is Resource.LOAD


def test_load_workloads_of_sample_allocation():
    loads = [279, 275, 239, 230, 93]
    inst = make_instance([(i * 10, 0) for i in range(1, 6)], loads, K=5, Q=279)
    sol = Solution.from_routes(inst, [[i] for i in range(1, 6)])
    w = workload_vector(sol, Resource.LOAD)
    assert w.sorted_desc == (279, 275, 239, 230, 93)
    assert workload_vector(sol, Resource.STOPS).values == (1,) * 5


def test_distance_workloads_by_edge_sums():
    d = np.array([[0, 2, 4, 5],
                  [2, 0, 3, 6],
                  [4, 3, 0, 6],
                  [5, 6, 6, 0]])
    inst = Instance(name="m", depot=(0, 0), coords=[(0, 0)] * 3, demands=[1, 1, 1], K=2, Q=3, dist=d)
    sol = Solution.from_routes(inst, [[1, 2], [3]])
    assert sorted(workload_vector(sol, Resource.DISTANCE).values) == [9, 10]
    assert sol.cost == 19


def test_route_storage_is_canonical():
    inst = random_small(6, 2, seed=3, binding=False)
    a = Solution.from_routes(inst, [[1, 2, 3], [4, 5, 6]])
    b = Solution.from_routes(inst, [[6, 5, 4], [3, 2, 1]])
    assert a == b
    for r in a.routes:
        assert r[0] <= r[-1]


def test_invalid_routes():
    inst = random_small(4, 2, seed=0, binding=False)
    with pytest.raises(StructureError):
        Solution.from_routes(inst, [[1, 2, 3, 4]])           # one route short
    with pytest.raises(StructureError):
        Solution.from_routes(inst, [[1, 2], [2, 3, 4]])      # repeated customer
    with pytest.raises(StructureError):
        Solution.from_routes(inst, [[1, 2], [3]])            # customer 4 missing


def test_capacity_checked():
    inst = make_instance([(1, 0), (2, 0), (3, 0)], [6, 6, 5], K=2, Q=11)
    with pytest.raises(StructureError):
        Solution.from_routes(inst, [[1, 2], [3]])
    assert Solution.from_routes(inst, [[1, 3], [2]]).K == 2


def test_singleton_tour():
    inst = random_small(5, 2, seed=1)
    for c in inst.customers:
        seq, length = tsp_optimal_order(inst, {c})
        assert seq == (c,) and length == 2 * inst.dist[0, c]


def test_tsp_input_order_irrelevant():
    inst = random_small(6, 2, seed=2)
    assert tsp_optimal_order(inst, [1, 2, 3]) == tsp_optimal_order(inst, [3, 1, 2])


def test_tsp_size_guard():
    inst = random_small(21, 2, seed=0, binding=False)
    with pytest.raises(CapabilityError):
        tsp_optimal_order(inst, set(inst.customers))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 8))
def test_tsp_matches_permutations(seed, m):
    inst = random_small(8, 1, seed=seed, binding=False)
    rng = np.random.default_rng(seed)
    subset = sorted(int(c) for c in rng.choice(np.arange(1, 9), size=m, replace=False))
    seq, length = tsp_optimal_order(inst, subset)
    assert sorted(seq) == subset
    assert route_length(inst, seq) == length == brute_tsp(inst, subset)


def _crossing_instance():
    # depot, then a square whose corners are visited in crossing order
    coords = [(0, 10), (10, 10), (10, 20), (0, 20)]
    return make_instance(coords, [1] * 4, K=1)


def test_crossing_route_not_local_optimum():
    inst = _crossing_instance()
    crossing = [1, 3, 2, 4]          # (0,10)->(10,20)->(10,10)->(0,20): two edges cross
    uncrossed = [1, 2, 3, 4]         # reverses the inner segment (3, 2)
    assert route_length(inst, uncrossed) < route_length(inst, crossing)
    assert not is_sequencing_local_optimum(Solution.from_routes(inst, [crossing]))


def test_optimal_routes_are_local_optima():
    inst = random_small(10, 3, seed=5)
    groups = [[1, 2, 3, 4], [5, 6, 7], [8, 9, 10]]
    assert is_sequencing_local_optimum(sequence_optimally(inst, groups))


def test_short_routes_are_local_optima():
    inst = random_small(6, 3, seed=7, binding=False)
    sol = Solution.from_routes(inst, [[1, 2], [3, 4], [5, 6]])
    assert is_sequencing_local_optimum(sol)


def _random_solution(inst, rng):
    perm = [int(c) for c in rng.permutation(np.arange(1, inst.n + 1))]
    cuts = sorted(int(c) for c in rng.choice(np.arange(1, inst.n), size=inst.K - 1, replace=False))
    return [perm[a:b] for a, b in zip([0] + cuts, cuts + [inst.n])]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 12), st.integers(1, 4))
def test_solution_invariants(seed, n, K):
    K = min(K, n)
    inst = random_small(n, K, seed=seed, binding=False)
    rng = np.random.default_rng(seed)
    routes = _random_solution(inst, rng)
    sol = Solution.from_routes(inst, routes)
    assert len(sol.edges()) == n + K
    assert sol.cost == sum(workload_vector(sol, Resource.DISTANCE).values)
    assert workload_vector(sol, Resource.LOAD).total == inst.total_demand
    assert workload_vector(sol, Resource.STOPS).total == n
    assert sequence_optimally(inst, [set(r) for r in routes]).cost <= sol.cost


def test_solution_text_roundtrip():
    inst = random_small(7, 2, seed=4, binding=False)
    sol = Solution.from_routes(inst, [[1, 2, 3], [4, 5, 6, 7]])
    text = format_solution(sol)
    assert parse_solution(text, inst) == sol
    for res in RESOURCES:
        assert f"workload {res.tag}" in text
    with pytest.raises(StructureError):
        parse_solution(text.replace(f"cost {sol.cost}", f"cost {sol.cost + 1}"), inst)
