"""Broad-phase culling of assignment pairs.

Every classifier here is *required*: a negative verdict proves the pair
cannot platoon. Intersecting the positives of several required classifiers
is still required, so a pipeline of stages only ever removes true negatives.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .candidates import CandidateSet
from .features import FeatureSet


def _group_cliques(rows, groups):
    """All row pairs that share a group id (rows deduplicated per group)."""
    order = np.lexsort((rows, groups))
    rows = rows[order]
    groups = groups[order]
    end = np.searchsorted(groups, groups, side="right")
    k = np.arange(len(rows), dtype=np.int64)
    cnt = np.maximum(end - k - 1, 0)
    u = np.repeat(k, cnt)
    first = np.repeat(np.cumsum(cnt) - cnt, cnt)
    v = u + 1 + (np.arange(int(cnt.sum()), dtype=np.int64) - first)
    return rows[u], rows[v]


class Classifier:
    """Pairwise predicate over assignments, evaluated from a FeatureSet."""

    label: str

    def positives(self, fs: FeatureSet) -> CandidateSet:
        raise NotImplementedError

    def evaluate(self, fs: FeatureSet, i, j) -> np.ndarray:
        """Verdicts for id pairs ``(i[k], j[k])``."""
        raise NotImplementedError

    def _rows(self, fs, i, j):
        return fs.row_of[np.asarray(i, dtype=np.int64)], fs.row_of[np.asarray(j, dtype=np.int64)]

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"


class IntervalClassifier(Classifier):
    """Positive when the two projection intervals overlap (closed)."""

    def __init__(self, label: str, feature: str | None = None):
        self.label = label
        self.feature = feature or label

    def positives(self, fs):
        lo, hi = fs.interval(self.feature)
        a, b = kernels.sweep_pairs(lo, hi)
        return CandidateSet.from_pairs(fs.ids[a], fs.ids[b], fs.n)

    def evaluate(self, fs, i, j):
        lo, hi = fs.interval(self.feature)
        ri, rj = self._rows(fs, i, j)
        return (lo[ri] <= hi[rj]) & (lo[rj] <= hi[ri])


class OrientationClassifier(Classifier):
    """Positive when the retained orientation cells intersect."""

    def __init__(self, label: str = "c_o"):
        self.label = label

    def _mask(self, fs):
        if fs.cell_mask is None:
            raise ValueError("feature set has no orientation signatures")
        return fs.cell_mask

    def positives(self, fs):
        rows, cells = np.nonzero(self._mask(fs))
        a, b = _group_cliques(rows.astype(np.int64), cells.astype(np.int64))
        return CandidateSet.from_pairs(fs.ids[a], fs.ids[b], fs.n)

    def evaluate(self, fs, i, j):
        bits = np.packbits(self._mask(fs), axis=1)
        ri, rj = self._rows(fs, i, j)
        out = np.zeros(len(ri), dtype=bool)
        step = 1 << 16
        for s in range(0, len(ri), step):
            out[s:s + step] = np.any(bits[ri[s:s + step]] & bits[rj[s:s + step]], axis=1)
        return out


class CellClassifier(Classifier):
    """Binary feature of one orientation cell: positive when both routes keep it."""

    def __init__(self, cell: int, label: str | None = None):
        self.cell = int(cell)
        self.label = label or f"cell{self.cell}"

    def positives(self, fs):
        members = np.flatnonzero(fs.cell_mask[:, self.cell])
        a, b = np.triu_indices(len(members), k=1)
        return CandidateSet.from_pairs(fs.ids[members[a]], fs.ids[members[b]], fs.n)

    def evaluate(self, fs, i, j):
        ri, rj = self._rows(fs, i, j)
        col = fs.cell_mask[:, self.cell]
        return col[ri] & col[rj]


class ConstantClassifier(Classifier):
    def __init__(self, value: bool, label: str | None = None):
        self.value = bool(value)
        self.label = label or ("always" if value else "never")

    def positives(self, fs):
        if self.value:
            return CandidateSet.all_pairs(fs.ids, fs.n)
        return CandidateSet.empty(fs.n)

    def evaluate(self, fs, i, j):
        return np.full(len(np.asarray(i)), self.value)


class OrClassifier(Classifier):
    """Disjunction of a required *set* of classifiers."""

    def __init__(self, members, label: str | None = None):
        self.members = list(members)
        self.label = label or "|".join(c.label for c in self.members)

    def positives(self, fs):
        out = self.members[0].positives(fs)
        for c in self.members[1:]:
            out = out.union(c.positives(fs))
        return CandidateSet(out.keys, fs.n)

    def evaluate(self, fs, i, j):
        out = self.members[0].evaluate(fs, i, j)
        for c in self.members[1:]:
            out = out | c.evaluate(fs, i, j)
        return out


def or_compose(classifiers, label: str | None = None) -> OrClassifier:
    """OR of classifiers that are jointly required (e.g. per-cell orientation matchers)."""
    classifiers = list(classifiers)
    if not classifiers:
        raise ValueError("cannot compose an empty list of classifiers")
    return OrClassifier(classifiers, label)


def build_classifiers(fs: FeatureSet) -> dict:
    """One interval classifier per projection label, plus the orientation one."""
    out = {}
    for label in fs.labels:
        if label in out:
            raise ValueError(f"duplicate projection label {label!r}")
        out[label] = IntervalClassifier(label)
    if fs.orientation is not None:
        label = fs.orientation.get("label", "c_o")
        if label in out:
            raise ValueError(f"orientation label {label!r} clashes with a projection label")
        out[label] = OrientationClassifier(label)
    return out


# -- stages ---------------------------------------------------------------

@dataclass(frozen=True)
class StagePlan:
    stages: tuple

    def __post_init__(self):
        stages = tuple(self.stages)
        if len(set(stages)) != len(stages):
            raise ValueError("stage plan lists a classifier more than once")
        object.__setattr__(self, "stages", stages)

    def __len__(self):
        return len(self.stages)

    def __iter__(self):
        return iter(self.stages)

    @classmethod
    def load(cls, path) -> "StagePlan":
        data = json.loads(Path(path).read_text())
        return cls(tuple(data["stages"]))

    def to_dict(self) -> dict:
        return {"stages": list(self.stages)}


def default_pairwise_threshold(k: int) -> float:
    return k * math.log(k) if k > 1 else 0.0


def apply_stage(current: CandidateSet, classifier: Classifier, fs: FeatureSet, positives: CandidateSet | None = None,
                pairwise_threshold: float | None = None) -> CandidateSet:
    """Keep the pairs of ``current`` that ``classifier`` marks positive.

    Small candidate sets are checked pair by pair; otherwise the classifier's
    positive set is computed set-wide (or taken from ``positives``) and
    intersected. Both give the same pairs.
    """
    if pairwise_threshold is None:
        pairwise_threshold = default_pairwise_threshold(len(fs))
    if positives is None and len(current) < pairwise_threshold:
        i, j = current.pairs()
        keys = current.keys[classifier.evaluate(fs, i, j)]
    else:
        if positives is None:
            positives = classifier.positives(fs)
        keys = current.intersect(positives).keys
    return CandidateSet(keys, current.n, current.stage_log + [(classifier.label, len(keys))])


def _resolve(classifiers, label):
    try:
        return classifiers[label]
    except KeyError:
        raise KeyError(f"unknown classifier label {label!r}") from None


def run_pipeline(plan, classifiers: dict, fs: FeatureSet, positives: dict | None = None,
                 pairwise_threshold: float | None = None) -> CandidateSet:
    """Start from all feasible pairs and apply each stage of ``plan`` in order."""
    plan = plan if isinstance(plan, StagePlan) else StagePlan(tuple(plan))
    stages = [_resolve(classifiers, label) for label in plan]
    positives = positives or {}
    current = CandidateSet.all_pairs(fs.ids, fs.n)
    for c in stages:
        current = apply_stage(current, c, fs, positives.get(c.label), pairwise_threshold)
    return current


def all_positives(classifiers: dict, fs: FeatureSet) -> dict:
    """Standalone positive set of every classifier, keyed by label."""
    return {label: c.positives(fs) for label, c in classifiers.items()}


def greedy_order(classifiers: dict, fs: FeatureSet, max_stages: int | None = None,
                 positives: dict | None = None) -> StagePlan:
    """Order classifiers so each stage leaves the fewest surviving pairs.

    Ties go to the lexicographically smaller label.
    """
    if not classifiers:
        raise ValueError("greedy_order needs at least one classifier")
    if positives is None:
        positives = all_positives(classifiers, fs)
    remaining = sorted(classifiers)
    limit = len(remaining) if max_stages is None else min(max_stages, len(remaining))
    current = CandidateSet.all_pairs(fs.ids, fs.n)
    chosen = []
    while len(chosen) < limit:
        best = None
        for label in remaining:
            # positive sets only hold feasible pairs, so the first stage needs no intersection
            survivors = current.intersect(positives[label]) if chosen else positives[label]
            if best is None or len(survivors) < len(best[1]):
                best = (label, survivors)
        chosen.append(best[0])
        remaining.remove(best[0])
        current = CandidateSet(best[1].keys, fs.n)
    return StagePlan(tuple(chosen))
