"""Seeded synthetic scenarios and route-file ingestion."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import cKDTree

from .assignments import TransportAssignment, parse_assignments, save_assignments
from .road_network import PLANAR, RoadNetwork, load_network


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 0
    K: int = 1000
    network: dict = field(default_factory=lambda: {"kind": "grid", "rows": 30, "cols": 30, "spacing_km": 20.0,
                                                   "diagonal_fraction": 0.3})
    v_max_kmh: float = 80.0
    window_width_h: float = 0.5
    fraction_at_zero: float = 0.5
    horizon_h: float = 24.0
    max_route_length_km: float = 400.0
    l_min_km: float = 20.0

    def __post_init__(self):
        if self.K < 0:
            raise ValueError("K must be non-negative")
        if not self.v_max_kmh > 0:
            raise ValueError("v_max_kmh must be positive")
        if self.window_width_h < 0:
            raise ValueError("window_width_h must be non-negative")
        if not 0 <= self.fraction_at_zero <= 1:
            raise ValueError("fraction_at_zero must lie in [0, 1]")
        if self.horizon_h < 0 or self.l_min_km < 0:
            raise ValueError("horizon_h and l_min_km must be non-negative")
        if not self.max_route_length_km > 0:
            raise ValueError("max_route_length_km must be positive")

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        data = dict(data)
        net = dict(data.get("network", cls().network))
        if net.get("kind") == "file" and base_dir is not None:
            net["path"] = str(Path(base_dir) / net["path"])
        data["network"] = net
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        return cls.from_dict(json.loads(path.read_text()), base_dir=path.parent)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **changes) -> "ScenarioConfig":
        return ScenarioConfig(**{**self.to_dict(), **changes})


def reference_scenario_config(seed: int = 0, K: int = 1000) -> ScenarioConfig:
    """Synthetic stand-in for the reference experiment: a continental-scale
    random geometric road network with 400 km routes, half the fleet starting
    at t=0, 0.5 h windows and a 20 km minimum overlap."""
    return ScenarioConfig(
        seed=seed,
        K=K,
        network={"kind": "random_geometric", "n": 4000, "radius_km": 45.0, "extent_km": 1500.0},
    )


# -- networks -------------------------------------------------------------

def _both_ways(pairs):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    edges = np.concatenate([pairs, pairs[:, ::-1]])
    return edges[np.lexsort((edges[:, 1], edges[:, 0]))]


def grid_network(rows: int, cols: int, spacing_km: float, diagonal_fraction: float = 0.0, rng=None) -> RoadNetwork:
    if rows < 1 or cols < 1 or not spacing_km > 0:
        raise ValueError("grid needs rows, cols >= 1 and positive spacing")
    rng = rng if rng is not None else np.random.default_rng(0)
    r, c = np.divmod(np.arange(rows * cols), cols)
    pos = np.column_stack([c * spacing_km, r * spacing_km]).astype(float)
    node = np.arange(rows * cols).reshape(rows, cols)
    pairs = [np.column_stack([node[:, :-1].ravel(), node[:, 1:].ravel()]),
             np.column_stack([node[:-1, :].ravel(), node[1:, :].ravel()])]
    if diagonal_fraction > 0 and rows > 1 and cols > 1:
        cells = (rows - 1) * (cols - 1)
        take = rng.random(cells) < diagonal_fraction
        flip = rng.random(cells) < 0.5
        a = node[:-1, :-1].ravel()
        main = np.column_stack([a, a + cols + 1])
        anti = np.column_stack([a + 1, a + cols])
        diag = np.where(flip[:, None], anti, main)[take]
        pairs.append(diag)
    return RoadNetwork(pos, _both_ways(np.concatenate(pairs)), PLANAR)


def random_geometric_network(n: int, radius_km: float, extent_km: float = 1000.0, rng=None,
                             max_attempts: int = 20) -> RoadNetwork:
    """Nodes uniform in a square, roads between nodes closer than ``radius_km``."""
    rng = rng if rng is not None else np.random.default_rng(0)
    for _ in range(max_attempts):
        pos = rng.uniform(0.0, extent_km, size=(n, 2))
        pairs = cKDTree(pos).query_pairs(radius_km, output_type="ndarray")
        if n > 1 and len(pairs) == 0:
            continue
        adj = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        n_comp, _ = connected_components(adj, directed=False)
        if n_comp <= 1:
            return RoadNetwork(pos, _both_ways(pairs), PLANAR)
    raise ScenarioError(f"no connected random geometric network after {max_attempts} attempts; "
                        "increase radius_km or n")


def generate_network(params: dict, seed: int = 0) -> RoadNetwork:
    kind = params.get("kind", "grid")
    rng = np.random.default_rng([seed, 0])
    if kind == "grid":
        return grid_network(int(params["rows"]), int(params["cols"]), float(params.get("spacing_km", 10.0)),
                            float(params.get("diagonal_fraction", 0.0)), rng)
    if kind == "random_geometric":
        return random_geometric_network(int(params["n"]), float(params["radius_km"]),
                                        float(params.get("extent_km", 1000.0)), rng)
    if kind == "file":
        return load_network(params["path"])
    raise ValueError(f"unknown network kind {kind!r}")


# -- assignments ----------------------------------------------------------

def _truncate(path, lengths, max_len, rng):
    """Random contiguous run of whole edges with total length <= max_len."""
    total = float(np.sum(lengths))
    if total <= max_len:
        return path
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    valid = np.flatnonzero(cum[:-1] <= total - max_len)
    s = int(valid[rng.integers(len(valid))])
    e = s
    while e < len(lengths) and cum[e + 1] - cum[s] <= max_len:
        e += 1
    while e > s and float(np.sum(lengths[s:e])) > max_len:
        e -= 1
    if e == s:
        return None
    return path[s:e + 1]


def generate_assignments(net: RoadNetwork, cfg: ScenarioConfig, max_retries: int = 100) -> list:
    """``cfg.K`` assignments along shortest paths, with start times and deadlines."""
    K = cfg.K
    if K == 0:
        return []
    if net.node_count < 2:
        raise ScenarioError("need at least two nodes to generate assignments")
    rng = np.random.default_rng([cfg.seed, 1])
    e = net.edges
    graph = csr_matrix((net.lengths, (e[:, 0], e[:, 1])), shape=(net.node_count, net.node_count))
    probs = None if net.weights is None else net.weights / net.weights.sum()
    preds = {}
    routes = []
    for _ in range(K):
        for _attempt in range(max_retries):
            s, d = (int(v) for v in rng.choice(net.node_count, size=2, p=probs))
            if s == d:
                continue
            if s not in preds:
                preds[s] = dijkstra(graph, directed=True, indices=s, return_predecessors=True)[1]
            pred = preds[s]
            if pred[d] < 0:
                continue
            path = [d]
            while path[-1] != s:
                path.append(int(pred[path[-1]]))
            path.reverse()
            lengths = net.lengths[net.edge_ids_of_path(path)]
            path = _truncate(path, lengths, cfg.max_route_length_km, rng)
            if path is not None:
                routes.append(path)
                break
        else:
            raise ScenarioError(f"could not sample a valid route in {max_retries} attempts")

    n_zero = math.floor(K * cfg.fraction_at_zero)
    t_start = rng.uniform(0.0, cfg.horizon_h, size=K)
    t_start[rng.permutation(K)[:n_zero]] = 0.0
    out = []
    for k, path in enumerate(routes):
        hops = net.lengths[net.edge_ids_of_path(path)] / cfg.v_max_kmh
        drive = float(np.cumsum(hops)[-1])
        ts = float(t_start[k])
        out.append(TransportAssignment(k, tuple(path), ts, (ts + drive) + cfg.window_width_h))
    return out


@dataclass(eq=False)
class Scenario:
    net: RoadNetwork
    assignments: list
    v_max: float
    config: ScenarioConfig | None = None

    def save(self, out_dir) -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {"network": out / "network.json", "assignments": out / "assignments.json"}
        self.net.save(paths["network"])
        save_assignments(paths["assignments"], self.assignments, self.v_max)
        return paths


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    net = generate_network(cfg.network, cfg.seed)
    return Scenario(net, generate_assignments(net, cfg), cfg.v_max_kmh, cfg)


def load_assignments(source, net: RoadNetwork):
    """Read an assignment file and validate every route against ``net``.

    Returns ``(assignments, v_max)``.
    """
    if isinstance(source, dict):
        return parse_assignments(source, net)
    path = Path(source)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_assignments(data, net)
    except ValueError as exc:
        raise type(exc)(f"{path}: {exc}") from None


def load_scenario(network_path, assignments_path) -> Scenario:
    net = load_network(network_path)
    assignments, v_max = load_assignments(assignments_path, net)
    return Scenario(net, assignments, v_max)
