"""Sets of unordered assignment pairs, stored as sorted int64 keys ``i * n + j``."""

from __future__ import annotations

import numpy as np


def pair_keys(i, j, n: int) -> np.ndarray:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    return np.minimum(i, j) * n + np.maximum(i, j)


class CandidateSet:
    """Unordered pairs (i, j), i < j, over assignment ids ``0 .. n-1``.

    ``stage_log`` records ``(label, surviving count)`` for every culling
    stage that produced this set.
    """

    __slots__ = ("keys", "n", "stage_log")

    def __init__(self, keys, n: int, stage_log=None):
        self.keys = np.asarray(keys, dtype=np.int64)
        self.n = int(n)
        self.stage_log = list(stage_log or [])

    @classmethod
    def from_pairs(cls, i, j, n: int, stage_log=None) -> "CandidateSet":
        i = np.asarray(i, dtype=np.int64)
        j = np.asarray(j, dtype=np.int64)
        keep = i != j
        return cls(np.unique(pair_keys(i[keep], j[keep], n)), n, stage_log)

    @classmethod
    def all_pairs(cls, ids, n: int, label: str = "none") -> "CandidateSet":
        ids = np.sort(np.asarray(ids, dtype=np.int64))
        a, b = np.triu_indices(len(ids), k=1)
        keys = ids[a] * n + ids[b]
        keys.sort()
        return cls(keys, n, [(label, len(keys))])

    @classmethod
    def empty(cls, n: int) -> "CandidateSet":
        return cls(np.empty(0, dtype=np.int64), n)

    def pairs(self):
        return self.keys // self.n if self.n else self.keys, self.keys % self.n if self.n else self.keys

    def to_set(self) -> set:
        i, j = self.pairs()
        return set(zip(i.tolist(), j.tolist()))

    def __len__(self):
        return len(self.keys)

    def __iter__(self):
        i, j = self.pairs()
        return iter(zip(i.tolist(), j.tolist()))

    def __contains__(self, pair):
        i, j = pair
        k = pair_keys(i, j, self.n)
        pos = np.searchsorted(self.keys, k)
        return bool(pos < len(self.keys) and self.keys[pos] == k)

    def contains_keys(self, keys) -> np.ndarray:
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, max(len(self.keys) - 1, 0))
        if len(self.keys) == 0:
            return np.zeros(len(keys), dtype=bool)
        return self.keys[pos] == keys

    def _check(self, other):
        if self.n != other.n:
            raise ValueError(f"candidate sets over different id ranges ({self.n} vs {other.n})")

    def intersect(self, other: "CandidateSet") -> "CandidateSet":
        self._check(other)
        # both key arrays are sorted and unique: probe the smaller into the larger
        small, large = (self, other) if len(self) <= len(other) else (other, self)
        return CandidateSet(small.keys[large.contains_keys(small.keys)], self.n, self.stage_log)

    def union(self, other: "CandidateSet") -> "CandidateSet":
        self._check(other)
        return CandidateSet(np.union1d(self.keys, other.keys), self.n)

    def difference(self, other: "CandidateSet") -> "CandidateSet":
        self._check(other)
        return CandidateSet(self.keys[~other.contains_keys(self.keys)], self.n)

    def issuperset(self, other: "CandidateSet") -> bool:
        self._check(other)
        return bool(np.all(self.contains_keys(other.keys)))

    def __eq__(self, other):
        if not isinstance(other, CandidateSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.keys, other.keys)

    __hash__ = None

    def __repr__(self):
        return f"CandidateSet({len(self)} pairs, n={self.n})"
