"""Transport assignments, arrival-time bounds and trajectory checks.

Units throughout: km, hours, km/h.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .road_network import RoadNetwork


class AssignmentError(ValueError):
    """Assignment input that violates the route or time invariants."""


@dataclass(frozen=True)
class TransportAssignment:
    id: int
    route: tuple
    t_start: float
    t_deadline: float

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(int(v) for v in self.route))
        if len(self.route) < 2:
            raise AssignmentError(f"assignment {self.id}: route needs at least 2 nodes")
        if not self.t_start <= self.t_deadline:
            raise AssignmentError(f"assignment {self.id}: t_start {self.t_start} > t_deadline {self.t_deadline}")

    @property
    def start_node(self) -> int:
        return self.route[0]

    @property
    def dest_node(self) -> int:
        return self.route[-1]

    def validate(self, net: RoadNetwork) -> None:
        for v in self.route:
            if not net.has_node(v):
                raise AssignmentError(f"assignment {self.id}: unknown node id {v}")
        for a, b in zip(self.route[:-1], self.route[1:]):
            if not net.has_edge(a, b):
                raise AssignmentError(f"assignment {self.id}: route is not a path ({a}->{b} is not an edge)")

    def to_dict(self) -> dict:
        return {"id": self.id, "route": list(self.route), "t_start": self.t_start, "t_deadline": self.t_deadline}


@dataclass(frozen=True, eq=False)
class BoundedRoute:
    """A route with per-node earliest and latest arrival times."""

    assignment_id: int
    nodes: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    edge_ids: np.ndarray = field(repr=False)
    edge_lengths: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.nodes)

    @property
    def route_length(self) -> float:
        return float(self.edge_lengths.sum())


@dataclass(frozen=True)
class Trajectory:
    nodes: tuple
    times: tuple

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        if len(self.nodes) != len(self.times):
            raise ValueError("trajectory needs one time per node")


def compute_bounds(net: RoadNetwork, a: TransportAssignment, v_max: float) -> BoundedRoute:
    """Earliest/latest node arrival times for ``a`` driven at most at ``v_max``.

    The result is returned even when the deadline cannot be met; check it
    with :func:`is_feasible`.
    """
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    nodes = np.asarray(a.route, dtype=np.int64)
    eids = net.edge_ids_of_path(nodes)
    lengths = net.lengths[eids]
    hops = lengths / v_max
    lower = np.empty(len(nodes))
    upper = np.empty(len(nodes))
    lower[0] = a.t_start
    lower[1:] = a.t_start + np.cumsum(hops)
    upper[-1] = a.t_deadline
    upper[:-1] = a.t_deadline - np.cumsum(hops[::-1])[::-1]
    for arr in (nodes, lower, upper, eids, lengths):
        arr.flags.writeable = False
    return BoundedRoute(a.id, nodes, lower, upper, eids, lengths)


def is_feasible(b: BoundedRoute) -> bool:
    return bool(np.all(b.lower <= b.upper))


def window_width(b: BoundedRoute, index: int) -> float:
    """Slack ``upper - lower`` at node ``index`` (0-based)."""
    if not 0 <= index < len(b.nodes):
        raise IndexError(f"node index {index} out of range for route of {len(b.nodes)} nodes")
    return float(b.upper[index] - b.lower[index])


def implements(net: RoadNetwork, traj: Trajectory, a: TransportAssignment, v_max: float, atol: float = 1e-9) -> bool:
    """Whether ``traj`` is a valid trajectory that carries out assignment ``a``.

    ``atol`` (hours) absorbs rounding in trajectories built from cumulative
    sums, e.g. the constant-``v_max`` trajectory.
    """
    n, t = traj.nodes, traj.times
    if len(n) < 1:
        return False
    if n[0] != a.start_node or n[-1] != a.dest_node:
        return False
    if t[0] < a.t_start - atol or t[-1] > a.t_deadline + atol:
        return False
    for k in range(len(n) - 1):
        if not net.has_edge(n[k], n[k + 1]):
            return False
        if t[k + 1] - t[k] < net.edge_length((n[k], n[k + 1])) / v_max - atol:
            return False
    return True


# -- packed storage for the kernels ---------------------------------------

class RouteTable:
    """Flat arrays over a list of bounded routes, in list order.

    ``ids[r]`` is the assignment id of row ``r``; ``row_of[id]`` inverts it
    (-1 for ids not in the table).
    """

    def __init__(self, net: RoadNetwork, routes: Sequence[BoundedRoute], n_total: int | None = None):
        self.ids = np.array([b.assignment_id for b in routes], dtype=np.int64)
        if n_total is None:
            n_total = int(self.ids.max()) + 1 if len(self.ids) else 0
        self.n_total = n_total
        self.row_of = np.full(n_total, -1, dtype=np.int64)
        self.row_of[self.ids] = np.arange(len(self.ids), dtype=np.int64)
        counts = np.array([len(b.nodes) for b in routes], dtype=np.int64)
        self.node_off = np.zeros(len(routes) + 1, dtype=np.int64)
        np.cumsum(counts, out=self.node_off[1:])
        self.edge_off = self.node_off - np.arange(len(routes) + 1, dtype=np.int64)
        if routes:
            self.nodes = np.concatenate([b.nodes for b in routes])
            self.lower = np.concatenate([b.lower for b in routes])
            self.upper = np.concatenate([b.upper for b in routes])
            self.edge_id = np.concatenate([b.edge_ids for b in routes])
        else:
            self.nodes = np.empty(0, dtype=np.int64)
            self.lower = np.empty(0)
            self.upper = np.empty(0)
            self.edge_id = np.empty(0, dtype=np.int64)
        self.x = net.positions[self.nodes, 0].copy()
        self.y = net.positions[self.nodes, 1].copy()
        self.edge_len = net.lengths[self.edge_id]
        self.edge_theta = net.orientations[self.edge_id]
        self.edge_route = np.repeat(np.arange(len(routes), dtype=np.int64), np.diff(self.edge_off))
        order = np.lexsort((self.edge_id, self.edge_route))
        self.edge_order = order - self.edge_off[self.edge_route[order]]

    def __len__(self):
        return len(self.ids)

    def kernel_args(self):
        """Positional route arguments of ``kernels.match_pairs`` / ``all_matches``."""
        return (self.node_off, self.lower, self.upper, self.edge_off, self.edge_id, self.edge_len, self.edge_order)


@dataclass(eq=False)
class Fleet:
    """Assignments on one network with their bounds precomputed.

    Infeasible assignments keep their id but are left out of ``table``.
    """

    net: RoadNetwork
    assignments: list
    v_max: float
    routes: list
    feasible: np.ndarray
    table: RouteTable

    @classmethod
    def build(cls, net: RoadNetwork, assignments: Sequence[TransportAssignment], v_max: float) -> "Fleet":
        routes = [compute_bounds(net, a, v_max) for a in assignments]
        for k, b in enumerate(routes):
            if b.assignment_id != k:
                raise AssignmentError(f"assignment at position {k} has id {b.assignment_id}")
        feasible = np.array([is_feasible(b) for b in routes], dtype=bool)
        table = RouteTable(net, [b for b, ok in zip(routes, feasible) if ok], n_total=len(routes))
        return cls(net, list(assignments), v_max, routes, feasible, table)

    @property
    def n(self) -> int:
        return len(self.routes)

    @property
    def feasible_ids(self) -> np.ndarray:
        return self.table.ids


# -- file format ----------------------------------------------------------

def assignments_to_dict(assignments: Sequence[TransportAssignment], v_max: float) -> dict:
    return {"v_max_kmh": v_max, "assignments": [a.to_dict() for a in assignments]}


def save_assignments(path, assignments: Sequence[TransportAssignment], v_max: float) -> None:
    Path(path).write_text(json.dumps(assignments_to_dict(assignments, v_max)) + "\n")


def parse_assignments(data, net: RoadNetwork | None = None):
    """Parse an assignment document into ``(assignments, v_max)``.

    With ``net`` given, every route is checked to be a path of that network.
    """
    if not isinstance(data, dict) or "assignments" not in data:
        raise AssignmentError("assignment document must be an object with an 'assignments' list")
    v_max = float(data.get("v_max_kmh", 80.0))
    if not v_max > 0:
        raise AssignmentError("v_max_kmh must be positive")
    out = []
    for k, item in enumerate(data["assignments"]):
        try:
            a = TransportAssignment(int(item["id"]), item["route"], float(item["t_start"]), float(item["t_deadline"]))
        except (KeyError, TypeError) as exc:
            raise AssignmentError(f"assignment entry {k}: malformed ({exc})") from None
        if a.id != k:
            raise AssignmentError(f"assignment entry {k} has id {a.id}; ids must be 0..K-1 in order")
        if net is not None:
            a.validate(net)
        out.append(a)
    return out, v_max
