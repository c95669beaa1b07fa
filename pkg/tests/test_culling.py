import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from platoon_cull.assignments import Fleet
from platoon_cull.candidates import CandidateSet
from platoon_cull.culling import (
    CellClassifier,
    Classifier,
    ConstantClassifier,
    IntervalClassifier,
    OrientationClassifier,
    StagePlan,
    all_positives,
    apply_stage,
    build_classifiers,
    greedy_order,
    or_compose,
    run_pipeline,
)
from platoon_cull.exact_match import truth_set
from platoon_cull.features import FeatureSet, extract_all, reference_feature_config
from platoon_cull.features import ProjectionVector
from platoon_cull.scenario import build_scenario

from conftest import small_config


def interval_fs(intervals):
    lo = np.array([[a for a, _ in intervals]], dtype=float)
    hi = np.array([[b for _, b in intervals]], dtype=float)
    n = len(intervals)
    return FeatureSet(np.arange(n), n, [ProjectionVector((1, 0, 0), "x")], lo, hi)


def signature_fs(cell_sets, m=100):
    n = len(cell_sets)
    mask = np.zeros((n, m), dtype=bool)
    for r, cells in enumerate(cell_sets):
        mask[r, list(cells)] = True
    return FeatureSet(np.arange(n), n, [], np.empty((0, n)), np.empty((0, n)),
                      {"cells": m, "l_min_km": 0.0, "label": "c_o"}, mask, mask.astype(float))


def test_interval_positives_example():
    fs = interval_fs([(0, 1), (2, 3), (0.5, 2.5)])
    assert IntervalClassifier("x").positives(fs).to_set() == {(0, 2), (1, 2)}


def test_interval_all_identical():
    fs = interval_fs([(0, 1)] * 7)
    assert len(IntervalClassifier("x").positives(fs)) == 21


def test_interval_touching_is_overlap():
    fs = interval_fs([(0, 1), (1, 2)])
    assert IntervalClassifier("x").positives(fs).to_set() == {(0, 1)}


def test_signature_positives():
    fs = signature_fs([{0, 10}, {10, 25}, {50}])
    pos = OrientationClassifier().positives(fs).to_set()
    assert pos == {(0, 1)}
    fs = signature_fs([{0}, {0}, {1}])
    assert OrientationClassifier().positives(fs).to_set() == {(0, 1)}


def test_or_of_cell_classifiers_equals_signature():
    rng = np.random.default_rng(3)
    sets = [set(rng.choice(100, size=rng.integers(1, 6), replace=False).tolist()) for _ in range(60)]
    fs = signature_fs(sets)
    combined = or_compose([CellClassifier(k) for k in range(100)])
    assert combined.positives(fs) == OrientationClassifier().positives(fs)
    i, j = np.triu_indices(60, k=1)
    assert np.array_equal(combined.evaluate(fs, i, j), OrientationClassifier().evaluate(fs, i, j))


def test_or_compose_edge_cases():
    fs = interval_fs([(0, 1), (2, 3), (0.5, 2.5)])
    single = or_compose([IntervalClassifier("x")])
    assert single.positives(fs) == IntervalClassifier("x").positives(fs)
    absorbed = or_compose([IntervalClassifier("x"), ConstantClassifier(True)])
    assert len(absorbed.positives(fs)) == 3
    with pytest.raises(ValueError):
        or_compose([])


class Fixed(Classifier):
    """Classifier with a hard-coded positive set (test double)."""

    def __init__(self, label, pairs, n):
        self.label = label
        self.set = CandidateSet.from_pairs([p[0] for p in pairs], [p[1] for p in pairs], n)

    def positives(self, fs):
        return CandidateSet(self.set.keys, fs.n)

    def evaluate(self, fs, i, j):
        return self.set.contains_keys(np.minimum(i, j) * fs.n + np.maximum(i, j))


def brute_best_first(classifiers, fs):
    """Enumerate every order and return the first stage label of the order whose
    first stage removes the most (ties by label)."""
    start = CandidateSet.all_pairs(fs.ids, fs.n)
    best = min(itertools.permutations(classifiers), key=lambda order: (
        len(start.intersect(classifiers[order[0]].positives(fs))), order[0]))
    return best[0]


def test_greedy_order_example():
    fs = interval_fs([(0, 1)] * 3)
    cs = {
        "a_all": Fixed("a_all", [(0, 1), (0, 2), (1, 2)], 3),
        "b_one": Fixed("b_one", [(0, 1)], 3),
        "c_two": Fixed("c_two", [(0, 1), (1, 2)], 3),
    }
    plan = greedy_order(cs, fs)
    assert plan.stages[0] == "b_one" == brute_best_first(cs, fs)
    assert greedy_order({"b_one": cs["b_one"]}, fs).stages == ("b_one",)


def test_greedy_tie_break_by_label():
    fs = interval_fs([(0, 1)] * 3)
    cs = {"z": Fixed("z", [(0, 1)], 3), "y": Fixed("y", [(0, 1)], 3)}
    plan = greedy_order(cs, fs)
    assert plan.stages == ("y", "z")
    res = run_pipeline(plan, cs, fs)
    assert [n for _, n in res.stage_log] == [3, 1, 1]


def test_stage_plan_rejects_duplicates():
    with pytest.raises(ValueError):
        StagePlan(("a", "a"))


@pytest.fixture(scope="module")
def scenario_fs():
    sc = build_scenario(small_config(21, K=150, kind="random_geometric"))
    fleet = Fleet.build(sc.net, sc.assignments, sc.v_max)
    fs = extract_all(sc.net, fleet.table, reference_feature_config(), sc.v_max)
    return fleet, fs, build_classifiers(fs)


def test_empty_plan_is_all_pairs(scenario_fs):
    fleet, fs, cs = scenario_fs
    res = run_pipeline(StagePlan(()), cs, fs)
    assert len(res) == 150 * 149 // 2
    assert res.stage_log == [("none", 11175)]


def test_single_stage_equals_positives(scenario_fs):
    _, fs, cs = scenario_fs
    for label, c in cs.items():
        assert run_pipeline([label], cs, fs) == c.positives(fs)


def test_apply_stage_idempotent_and_modes(scenario_fs):
    _, fs, cs = scenario_fs
    start = CandidateSet.all_pairs(fs.ids, fs.n)
    c = cs["c_110"]
    once = apply_stage(start, c, fs)
    assert apply_stage(once, c, fs) == once
    # pairwise evaluation and set-wide intersection agree
    by_pairs = apply_stage(once, cs["c_a3"], fs, pairwise_threshold=float("inf"))
    by_sets = apply_stage(once, cs["c_a3"], fs, pairwise_threshold=0)
    assert by_pairs == by_sets
    by_pairs = apply_stage(once, cs["c_o"], fs, pairwise_threshold=float("inf"))
    by_sets = apply_stage(once, cs["c_o"], fs, pairwise_threshold=0)
    assert by_pairs == by_sets


def test_two_stages_not_above_either(scenario_fs):
    _, fs, cs = scenario_fs
    res = run_pipeline(["c_100", "c_010"], cs, fs)
    assert len(res) <= min(len(cs["c_100"].positives(fs)), len(cs["c_010"].positives(fs)))


def test_unknown_label(scenario_fs):
    _, fs, cs = scenario_fs
    with pytest.raises(KeyError):
        run_pipeline(["nope"], cs, fs)


def test_order_insensitive_and_negatives_superset(scenario_fs):
    fleet, fs, cs = scenario_fs
    labels = ["c_110", "c_a7", "c_a3", "c_o"]
    base = run_pipeline(labels, cs, fs)
    rng = np.random.default_rng(1)
    for _ in range(5):
        assert run_pipeline(list(rng.permutation(labels)), cs, fs) == base
    every = CandidateSet.all_pairs(fs.ids, fs.n)
    neg_combined = every.difference(base)
    for label in labels:
        neg_single = every.difference(cs[label].positives(fs))
        assert neg_combined.issuperset(neg_single)


def test_full_plan_sound(scenario_fs):
    fleet, fs, cs = scenario_fs
    pos = all_positives(cs, fs)
    plan = greedy_order(cs, fs, positives=pos)
    res = run_pipeline(plan, cs, fs, pos)
    counts = [n for _, n in res.stage_log]
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    truth = truth_set(fleet.table, 20.0)
    assert len(truth) > 0
    assert res.issuperset(truth)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(-50, 50), st.integers(0, 30)), min_size=0, max_size=80))
def test_interval_positives_vs_brute_force(raw):
    intervals = [(float(a), float(a + w)) for a, w in raw]
    fs = interval_fs(intervals) if intervals else None
    if fs is None:
        return
    got = IntervalClassifier("x").positives(fs).to_set()
    want = {(i, j) for i in range(len(intervals)) for j in range(i + 1, len(intervals))
            if intervals[i][0] <= intervals[j][1] and intervals[j][0] <= intervals[i][1]}
    assert got == want
