"""Immutable directed road network with 2-D node positions."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

PLANAR = "planar_km"
GEODETIC = "geodetic_deg"
COORDINATE_MODES = (PLANAR, GEODETIC)

EARTH_RADIUS_KM = 6371.0
TWO_PI = 2.0 * math.pi


class NetworkError(ValueError):
    """Base class for invalid network input."""


class NetworkFormatError(NetworkError):
    pass


class DuplicatePositionError(NetworkError):
    pass


class DanglingEdgeError(NetworkError):
    pass


def _normalize_angle(theta):
    theta = np.where(theta < 0.0, theta + TWO_PI, theta)
    # -tiny + 2*pi can round up to exactly 2*pi
    return np.where(theta >= TWO_PI, 0.0, theta)


def _segment_deltas(mode, pa, pb):
    """Local east/north-style deltas (km) between position arrays pa -> pb."""
    d = pb - pa
    if mode == PLANAR:
        return d[..., 0], d[..., 1]
    # geodetic positions are [lat, lon] in degrees
    lat_mid = np.radians(0.5 * (pa[..., 0] + pb[..., 0]))
    dx = np.radians(d[..., 0]) * EARTH_RADIUS_KM
    dy = np.radians(d[..., 1]) * np.cos(lat_mid) * EARTH_RADIUS_KM
    return dx, dy


class RoadNetwork:
    """Directed graph over nodes with fixed 2-D positions.

    Node ids are dense integers ``0 .. node_count - 1``. Edges are ordered as
    given and addressed either by edge id or by a ``(tail, head)`` tuple.
    Edge lengths and orientations are precomputed at construction.

    In ``geodetic_deg`` mode node positions are ``[lat, lon]`` in degrees and
    lengths use an equirectangular projection about the segment mid-latitude.
    """

    def __init__(self, positions, edges, coordinate_mode=PLANAR, weights=None):
        if coordinate_mode not in COORDINATE_MODES:
            raise NetworkFormatError(f"unknown coordinate_mode {coordinate_mode!r}")
        pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2) if len(positions) else np.zeros((0, 2))
        if not np.all(np.isfinite(pos)):
            raise NetworkFormatError("node positions must be finite")
        e = np.asarray(edges, dtype=np.int64).reshape(-1, 2) if len(edges) else np.zeros((0, 2), dtype=np.int64)
        n = len(pos)

        if len(np.unique(pos, axis=0)) != n:
            raise DuplicatePositionError("two or more nodes share a position")
        bad = (e < 0) | (e >= n)
        if bad.any():
            row = int(np.argmax(bad.any(axis=1)))
            raise DanglingEdgeError(f"edge {row} {e[row].tolist()} references a node outside 0..{n - 1}")
        if np.any(e[:, 0] == e[:, 1]):
            raise NetworkFormatError("self-loop edges are not allowed")

        self.coordinate_mode = coordinate_mode
        self._positions = pos
        self._edges = e
        self._index = {}
        for k, (t, h) in enumerate(e.tolist()):
            if (t, h) in self._index:
                raise NetworkFormatError(f"duplicate edge {t}->{h}")
            self._index[(t, h)] = k

        if weights is not None:
            w = np.asarray(weights, dtype=np.float64)
            if w.shape != (n,) or np.any(w < 0) or (n and not np.any(w > 0)):
                raise NetworkFormatError("weights must be one non-negative value per node, not all zero")
            w.flags.writeable = False
            self.weights = w
        else:
            self.weights = None

        dx, dy = _segment_deltas(coordinate_mode, pos[e[:, 0]], pos[e[:, 1]])
        self._lengths = np.hypot(dx, dy)
        self._orientations = _normalize_angle(np.arctan2(dy, dx))
        for arr in (self._positions, self._edges, self._lengths, self._orientations):
            arr.flags.writeable = False

    # -- basic accessors -------------------------------------------------
    @property
    def node_count(self) -> int:
        return len(self._positions)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def lengths(self) -> np.ndarray:
        return self._lengths

    @property
    def orientations(self) -> np.ndarray:
        return self._orientations

    def has_node(self, node) -> bool:
        return 0 <= int(node) < self.node_count

    def has_edge(self, tail, head) -> bool:
        return (int(tail), int(head)) in self._index

    def edge_id(self, edge) -> int:
        """Resolve an edge id or a ``(tail, head)`` pair to an edge id."""
        if isinstance(edge, (tuple, list)):
            key = (int(edge[0]), int(edge[1]))
            try:
                return self._index[key]
            except KeyError:
                raise KeyError(f"no edge {key[0]}->{key[1]} in network") from None
        k = int(edge)
        if not 0 <= k < self.edge_count:
            raise KeyError(f"edge id {k} out of range 0..{self.edge_count - 1}")
        return k

    def edge_ids_of_path(self, nodes) -> np.ndarray:
        """Edge ids along a node sequence; KeyError if a hop is not an edge."""
        nodes = [int(v) for v in nodes]
        return np.array([self.edge_id((a, b)) for a, b in zip(nodes[:-1], nodes[1:])], dtype=np.int64)

    def edge_length(self, edge) -> float:
        return float(self._lengths[self.edge_id(edge)])

    def edge_orientation(self, edge) -> float:
        """Polar angle of the edge direction in [0, 2*pi)."""
        return float(self._orientations[self.edge_id(edge)])

    def distance(self, u, v) -> float:
        """Straight-line distance between two nodes (same metric as edge lengths)."""
        dx, dy = _segment_deltas(self.coordinate_mode, self._positions[int(u)], self._positions[int(v)])
        return float(np.hypot(dx, dy))

    # -- serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "coordinate_mode": self.coordinate_mode,
            "nodes": self._positions.tolist(),
            "edges": self._edges.tolist(),
        }
        if self.weights is not None:
            d["weights"] = self.weights.tolist()
        return d

    @classmethod
    def from_dict(cls, data) -> "RoadNetwork":
        if not isinstance(data, dict):
            raise NetworkFormatError("network document must be a JSON object")
        try:
            mode = data.get("coordinate_mode", PLANAR)
            nodes = data["nodes"]
            edges = data.get("edges", [])
        except KeyError as exc:
            raise NetworkFormatError(f"missing key {exc.args[0]!r}") from None
        for k, node in enumerate(nodes):
            if not isinstance(node, (list, tuple)) or len(node) != 2:
                raise NetworkFormatError(f"node {k} must be an [x, y] pair")
        for k, edge in enumerate(edges):
            if not isinstance(edge, (list, tuple)) or len(edge) != 2:
                raise NetworkFormatError(f"edge {k} must be a [tail, head] pair")
            if any(isinstance(v, bool) or not isinstance(v, int) for v in edge):
                raise NetworkFormatError(f"edge {k} endpoints must be integers")
        return cls(nodes, edges, mode, data.get("weights"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return (
            self.coordinate_mode == other.coordinate_mode
            and np.array_equal(self._positions, other._positions)
            and np.array_equal(self._edges, other._edges)
        )

    __hash__ = None

    def __repr__(self):
        return f"RoadNetwork({self.coordinate_mode}, nodes={self.node_count}, edges={self.edge_count})"


def load_network(source) -> RoadNetwork:
    """Load and validate a network JSON file (or an already parsed dict)."""
    if isinstance(source, dict):
        return RoadNetwork.from_dict(source)
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return RoadNetwork.from_dict(data)
    except NetworkError as exc:
        raise type(exc)(f"{path}: {exc}") from None
