"""Exact pairwise coordination test (the narrow phase).

Two assignments can platoon when their routes share a directed edge and the
closed arrival-time windows overlap at both ends of that edge. The
minimum-distance variant also requires the matched edges to add up to at
least ``l_min`` km.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .assignments import BoundedRoute, RouteTable, is_feasible
from .candidates import CandidateSet
from .road_network import RoadNetwork


@dataclass(frozen=True)
class PairVerdict:
    pair: tuple
    lam: int
    overlap_length: float
    matched_edges: int = 0


def _windows_overlap(bi, a, bj, b):
    return bi.lower[a] <= bj.upper[b] and bj.lower[b] <= bi.upper[a]


def _check_on_network(net: RoadNetwork, b: BoundedRoute):
    eids = np.asarray(b.edge_ids)
    if len(eids) and (eids.max() >= net.edge_count or eids.min() < 0):
        raise ValueError(f"route of assignment {b.assignment_id} is not on this network")
    ends = net.edges[eids]
    if not (np.array_equal(ends[:, 0], b.nodes[:-1]) and np.array_equal(ends[:, 1], b.nodes[1:])):
        raise ValueError(f"route of assignment {b.assignment_id} is not on this network")


def _verdict(bi, bj, lengths, l_min):
    total = sum(sorted(lengths))
    lam = int(len(lengths) > 0 and total >= l_min)
    pair = tuple(sorted((bi.assignment_id, bj.assignment_id)))
    return PairVerdict(pair, lam, float(total), len(lengths))


def matched_lengths(bi: BoundedRoute, bj: BoundedRoute) -> list:
    """Lengths of every matched index pair (a, b), via a hash join on edge id."""
    where = defaultdict(list)
    for a, e in enumerate(bi.edge_ids.tolist()):
        where[e].append(a)
    out = []
    for b, e in enumerate(bj.edge_ids.tolist()):
        for a in where.get(e, ()):
            if _windows_overlap(bi, a, bj, b) and _windows_overlap(bi, a + 1, bj, b + 1):
                out.append(float(bi.edge_lengths[a]))
    return out


def coordination(net: RoadNetwork, bi: BoundedRoute, bj: BoundedRoute) -> PairVerdict:
    return coordination_min_distance(net, bi, bj, 0.0)


def coordination_min_distance(net: RoadNetwork, bi: BoundedRoute, bj: BoundedRoute, l_min: float) -> PairVerdict:
    if l_min < 0:
        raise ValueError("l_min must be non-negative")
    _check_on_network(net, bi)
    _check_on_network(net, bj)
    return _verdict(bi, bj, matched_lengths(bi, bj), l_min)


def coordination_naive(net: RoadNetwork, bi: BoundedRoute, bj: BoundedRoute, l_min: float = 0.0) -> PairVerdict:
    """Reference double loop over all index pairs; compares node ids directly."""
    lengths = []
    ni, nj = bi.nodes, bj.nodes
    for a in range(len(ni) - 1):
        for b in range(len(nj) - 1):
            if ni[a] == nj[b] and ni[a + 1] == nj[b + 1]:
                if _windows_overlap(bi, a, bj, b) and _windows_overlap(bi, a + 1, bj, b + 1):
                    lengths.append(net.edge_length((int(ni[a]), int(ni[a + 1]))))
    return _verdict(bi, bj, lengths, l_min)


# -- batched evaluation ---------------------------------------------------

@dataclass(frozen=True)
class MatchTable:
    """Pairs (i, j) of assignment ids with their matched edge count and length."""

    i: np.ndarray
    j: np.ndarray
    matched: np.ndarray
    overlap: np.ndarray

    def __len__(self):
        return len(self.i)


def evaluate_pairs(table: RouteTable, i, j, l_min: float = 0.0):
    """Coordination verdicts for id pairs, all of which must be in ``table``.

    Returns ``(lam, overlap)`` arrays aligned with the input.
    """
    ri = table.row_of[np.asarray(i, dtype=np.int64)]
    rj = table.row_of[np.asarray(j, dtype=np.int64)]
    if np.any(ri < 0) or np.any(rj < 0):
        raise ValueError("pair references an assignment that is not in the route table")
    count, overlap = kernels.match_pairs(ri, rj, *table.kernel_args())
    lam = (count > 0) & (overlap >= l_min)
    return lam, overlap


def exact_matches(table: RouteTable, l_min: float = 0.0) -> MatchTable:
    """All pairs of the table with coordination verdict 1, sorted by (i, j)."""
    ri, rj, count, overlap = kernels.all_matches(*table.kernel_args())
    keep = overlap >= l_min
    i = table.ids[ri[keep]]
    j = table.ids[rj[keep]]
    a, b = np.minimum(i, j), np.maximum(i, j)
    order = np.lexsort((b, a))
    return MatchTable(a[order], b[order], count[keep][order], overlap[keep][order])


def ground_truth(net: RoadNetwork, routes: Sequence[BoundedRoute], l_min: float = 0.0) -> CandidateSet:
    """Exhaustive coordination over every pair of feasible routes."""
    feasible = [b for b in routes if is_feasible(b)]
    table = RouteTable(net, feasible, n_total=len(routes))
    return truth_set(table, l_min)


def truth_set(table: RouteTable, l_min: float = 0.0) -> CandidateSet:
    m = exact_matches(table, l_min)
    return CandidateSet.from_pairs(m.i, m.j, table.n_total)
