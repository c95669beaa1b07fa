import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoon_cull.assignments import Fleet, TransportAssignment, compute_bounds
from platoon_cull.exact_match import (
    coordination,
    coordination_min_distance,
    coordination_naive,
    evaluate_pairs,
    exact_matches,
    ground_truth,
)
from platoon_cull.road_network import RoadNetwork
from platoon_cull.scenario import build_scenario

from conftest import small_config


def bounds(net, aid, route, ts, td, v=80.0):
    return compute_bounds(net, TransportAssignment(aid, route, ts, td), v)


def test_identical_assignments(path_net, abc_bounds):
    other = bounds(path_net, 1, (0, 1, 2), 0.0, 2.0)
    v = coordination(path_net, abc_bounds, other)
    assert v.lam == 1 and v.pair == (0, 1)
    assert v.overlap_length == pytest.approx(90.0)


def test_shared_edge_overlapping_windows(path_net, abc_bounds):
    # j drives B->C only: window at B [0.6, 1.5], at C [1.225, 2.125]
    j = bounds(path_net, 1, (1, 2), 0.6, 1.5 + 50 / 80)
    assert j.lower[0] == pytest.approx(0.6) and j.upper[0] == pytest.approx(1.5)
    v = coordination(path_net, abc_bounds, j)
    assert v.lam == 1 and v.overlap_length == pytest.approx(50.0)


def test_disjoint_routes(path_net, abc_bounds):
    back = bounds(path_net, 1, (2, 1, 0), 0.0, 2.0)
    v = coordination(path_net, abc_bounds, back)
    assert v.lam == 0 and v.overlap_length == 0.0


def test_shared_edge_disjoint_windows(path_net):
    i = bounds(path_net, 0, (1, 2), 0.0, 0.2 + 50 / 80)  # window at B [0, 0.2]
    j = bounds(path_net, 1, (1, 2), 0.3, 0.5 + 50 / 80)  # window at B [0.3, 0.5]
    assert coordination(path_net, i, j).lam == 0


def test_touching_windows_count(path_net):
    i = bounds(path_net, 0, (0, 1), 0.0, 0.5)  # [0,0] at A, [0.5,0.5] at B
    j = bounds(path_net, 1, (0, 1), 0.0, 0.5)
    assert coordination(path_net, i, j).lam == 1
    k = bounds(path_net, 2, (0, 1), 0.0 + 1e-9, 0.5 + 1e-9)
    assert coordination(path_net, i, k).lam == 0


def test_min_distance_boundaries():
    net15 = RoadNetwork([[0, 0], [15, 0]], [[0, 1]])
    a, b = bounds(net15, 0, (0, 1), 0, 1), bounds(net15, 1, (0, 1), 0, 1)
    assert coordination_min_distance(net15, a, b, 20.0).lam == 0
    assert coordination_min_distance(net15, a, b, 0.0) == coordination(net15, a, b)
    net20 = RoadNetwork([[0, 0], [20, 0]], [[0, 1]])
    a, b = bounds(net20, 0, (0, 1), 0, 1), bounds(net20, 1, (0, 1), 0, 1)
    v = coordination_min_distance(net20, a, b, 20.0)
    assert v.lam == 1 and v.overlap_length == 20.0


def test_route_not_on_network(path_net, abc_bounds):
    other = RoadNetwork([[0, 0], [1, 0], [2, 0]], [[0, 2]])
    with pytest.raises(ValueError, match="not on this network"):
        coordination(other, abc_bounds, abc_bounds)


def test_repeated_edge_counts_every_index_pair():
    net = RoadNetwork([[0, 0], [10, 0], [10, 10]], [[0, 1], [1, 2], [2, 0]])
    loop = (0, 1, 2, 0, 1)  # edge 0->1 twice
    a = bounds(net, 0, loop, 0, 10)
    b = bounds(net, 1, (0, 1), 0, 10)
    v = coordination(net, a, b)
    assert v.matched_edges == 2 and v.overlap_length == pytest.approx(20.0)
    assert coordination_naive(net, a, b) == v


def test_ground_truth_small(path_net):
    routes = [bounds(path_net, 0, (0, 1, 2), 0, 2), bounds(path_net, 1, (0, 1, 2), 0, 2)]
    assert ground_truth(path_net, routes).to_set() == {(0, 1)}
    disjoint = [bounds(path_net, 0, (0, 1), 0, 2), bounds(path_net, 1, (2, 1), 0, 2)]
    assert len(ground_truth(path_net, disjoint)) == 0


def test_ground_truth_skips_infeasible(path_net):
    routes = [bounds(path_net, 0, (0, 1, 2), 0, 2), bounds(path_net, 1, (0, 1, 2), 0, 1),
              bounds(path_net, 2, (0, 1, 2), 0, 2)]
    assert ground_truth(path_net, routes).to_set() == {(0, 2)}


@pytest.fixture(scope="module")
def fleet():
    sc = build_scenario(small_config(11, K=80))
    return Fleet.build(sc.net, sc.assignments, sc.v_max)


def test_batched_matches_per_pair_reference(fleet):
    """Kernel ground truth against the per-pair hash join over all pairs."""
    expected = {}
    routes = fleet.routes
    for x in range(fleet.n):
        for y in range(x + 1, fleet.n):
            v = coordination(fleet.net, routes[x], routes[y])
            if v.lam:
                expected[(x, y)] = v.overlap_length
    m = exact_matches(fleet.table, 0.0)
    got = dict(zip(zip(m.i.tolist(), m.j.tolist()), m.overlap.tolist()))
    assert got.keys() == expected.keys()
    for k in got:
        assert got[k] == expected[k]
    assert len(expected) > 0


def test_evaluate_pairs_agrees(fleet):
    i, j = np.triu_indices(fleet.n, k=1)
    lam, overlap = evaluate_pairs(fleet.table, i, j, 20.0)
    for a, b, l, o in zip(i[:400], j[:400], lam[:400], overlap[:400]):
        v = coordination_min_distance(fleet.net, fleet.routes[a], fleet.routes[b], 20.0)
        assert v.lam == int(l) and v.overlap_length == o


def test_symmetry_and_bounds(fleet):
    rng = np.random.default_rng(0)
    for _ in range(200):
        a, b = rng.choice(fleet.n, 2, replace=False)
        ra, rb = fleet.routes[a], fleet.routes[b]
        v1, v2 = coordination(fleet.net, ra, rb), coordination(fleet.net, rb, ra)
        assert v1 == v2
        assert v1.overlap_length <= min(ra.route_length, rb.route_length) + 1e-9
        if v1.lam:
            assert v1.overlap_length > 0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 60), st.floats(0, 60))
def test_monotone_in_l_min(seed, l1, l2, ):
    rng = np.random.default_rng(seed)
    lo, hi = sorted((l1, l2))
    net = RoadNetwork([[0, 0], [10, 0], [25, 0], [45, 0]], [[0, 1], [1, 2], [2, 3]])
    a = bounds(net, 0, (0, 1, 2, 3), float(rng.uniform(0, 1)), 3.0)
    b = bounds(net, 1, (1, 2, 3), float(rng.uniform(0, 1)), 3.0)
    if coordination_min_distance(net, a, b, hi).lam:
        assert coordination_min_distance(net, a, b, lo).lam


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 2), st.floats(0, 2))
def test_monotone_in_slack(seed, widen_start, widen_end):
    rng = np.random.default_rng(seed)
    net = RoadNetwork([[0, 0], [10, 0], [25, 0], [45, 0]], [[0, 1], [1, 2], [2, 3]])
    ts = rng.uniform(0, 2, 2)
    a = TransportAssignment(0, (0, 1, 2, 3), ts[0], ts[0] + 45 / 80 + 0.2)
    b = TransportAssignment(1, (1, 2, 3), ts[1], ts[1] + 35 / 80 + 0.2)
    wide = TransportAssignment(0, a.route, a.t_start - widen_start, a.t_deadline + widen_end)
    before = coordination(net, compute_bounds(net, a, 80), compute_bounds(net, b, 80)).lam
    after = coordination(net, compute_bounds(net, wide, 80), compute_bounds(net, b, 80)).lam
    assert after >= before
