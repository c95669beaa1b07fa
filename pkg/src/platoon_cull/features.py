"""Per-assignment culling features.

Two kinds:

* projection intervals: the range of ``p . (x, y, t)`` over every route node
  paired with its earliest and its latest arrival time;
* orientation signatures: the set of angular cells (an equal partition of
  [0, 2*pi) into ``M`` cells) that the route's edges point into, after
  greedily discarding the lightest cells while their summed length stays
  below ``l_min / 2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import kernels
from .assignments import BoundedRoute, RouteTable, is_feasible
from .road_network import GEODETIC, PLANAR, RoadNetwork

# cos of the reference latitude (~50 deg N) used to scale longitude degrees
REFERENCE_LAT_COS = math.cos(0.278 * math.pi)


@dataclass(frozen=True)
class ProjectionVector:
    p: tuple
    label: str

    def __post_init__(self):
        p = tuple(float(v) for v in self.p)
        if len(p) != 3:
            raise ValueError(f"projection {self.label!r} needs 3 components")
        if not any(p):
            raise ValueError(f"projection {self.label!r} is the zero vector")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class IntervalFeature:
    lo: float
    hi: float

    def overlaps(self, other: "IntervalFeature") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi


@dataclass(frozen=True)
class OrientationSignature:
    cells: tuple
    loads: dict = field(compare=False)
    n_cells: int = 100
    l_min: float = 0.0
    excluded_length: float = 0.0

    def intersects(self, other: "OrientationSignature") -> bool:
        return not set(self.cells).isdisjoint(other.cells)


@dataclass(frozen=True)
class FeatureVector:
    intervals: tuple = ()
    signature: OrientationSignature | None = None

    def __len__(self):
        return len(self.intervals) + (self.signature is not None)


def alpha_vector(alpha: float, v_max: float, mode: str = PLANAR, label: str | None = None) -> ProjectionVector:
    """Projection roughly orthogonal to a max-speed trajectory heading ``alpha``.

    Geodetic mode works in degrees and hours; planar mode in km and hours.
    """
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    if label is None:
        label = f"c_alpha{alpha:.4f}"
    if mode == GEODETIC:
        p = (-math.cos(alpha), -math.sin(alpha) / REFERENCE_LAT_COS, v_max * 180.0 / (6371.0 * math.pi))
    elif mode == PLANAR:
        p = (-math.cos(alpha), -math.sin(alpha), v_max)
    else:
        raise ValueError(f"unknown coordinate mode {mode!r}")
    return ProjectionVector(p, label)


def project_interval(net: RoadNetwork, b: BoundedRoute, p: ProjectionVector) -> IntervalFeature:
    pos = net.positions[b.nodes]
    s = p.p[0] * pos[:, 0] + p.p[1] * pos[:, 1]
    vals = np.concatenate([s + p.p[2] * b.lower, s + p.p[2] * b.upper])
    return IntervalFeature(float(vals.min()), float(vals.max()))


def orientation_cells(theta, n_cells: int) -> np.ndarray:
    """Cell index of each angle in [0, 2*pi); cells are half-open."""
    k = np.floor(np.asarray(theta) * (n_cells / (2.0 * math.pi))).astype(np.int64)
    return np.clip(k, 0, n_cells - 1)


def _retained(loads: np.ndarray, l_min: float) -> np.ndarray:
    """Boolean mask of kept cells for a (rows, M) load matrix."""
    order = np.argsort(loads, axis=1, kind="stable")
    running = np.cumsum(np.take_along_axis(loads, order, axis=1), axis=1)
    dropped = np.zeros_like(loads, dtype=bool)
    np.put_along_axis(dropped, order, running < 0.5 * l_min, axis=1)
    return (loads > 0) & ~dropped


def orientation_signature(net: RoadNetwork, b: BoundedRoute, n_cells: int = 100, l_min: float = 0.0) -> OrientationSignature:
    if n_cells < 1:
        raise ValueError("need at least one orientation cell")
    if l_min < 0:
        raise ValueError("l_min must be non-negative")
    cells = orientation_cells(net.orientations[b.edge_ids], n_cells)
    loads = np.bincount(cells, weights=b.edge_lengths, minlength=n_cells)[None, :]
    keep = _retained(loads, l_min)[0]
    nonempty = np.flatnonzero(loads[0] > 0)
    excluded = float(loads[0][(loads[0] > 0) & ~keep].sum())
    return OrientationSignature(
        tuple(np.flatnonzero(keep).tolist()),
        {int(c): float(loads[0][c]) for c in nonempty},
        n_cells,
        float(l_min),
        excluded,
    )


# -- configuration --------------------------------------------------------

@dataclass(frozen=True)
class FeatureConfig:
    """Projection entries plus optional orientation parameters.

    Each projection entry is a dict with ``label`` and either ``p`` (a
    3-vector) or ``alpha`` (radians, resolved with :func:`alpha_vector`).
    """

    projections: tuple = ()
    orientation: dict | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureConfig":
        projs = []
        for k, entry in enumerate(data.get("projections", [])):
            if ("p" in entry) == ("alpha" in entry):
                raise ValueError(f"projection entry {k} needs exactly one of 'p' or 'alpha'")
            projs.append(dict(entry))
        orient = data.get("orientation")
        if orient is not None:
            orient = {"cells": int(orient.get("cells", 100)), "l_min_km": float(orient.get("l_min_km", 0.0)),
                      "label": orient.get("label", "c_o")}
            if orient["cells"] < 1 or orient["l_min_km"] < 0:
                raise ValueError("orientation needs cells >= 1 and l_min_km >= 0")
        return cls(tuple(projs), orient)

    @classmethod
    def load(cls, path) -> "FeatureConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        d = {"projections": [dict(p) for p in self.projections]}
        if self.orientation is not None:
            d["orientation"] = dict(self.orientation)
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def with_l_min(self, l_min: float) -> "FeatureConfig":
        if self.orientation is None:
            return self
        return FeatureConfig(self.projections, {**self.orientation, "l_min_km": float(l_min)})

    def resolve(self, v_max: float | None, mode: str) -> list:
        out = []
        for k, entry in enumerate(self.projections):
            if "alpha" in entry:
                if v_max is None:
                    raise ValueError("alpha projections need v_max")
                out.append(alpha_vector(float(entry["alpha"]), v_max, mode, entry.get("label")))
            else:
                out.append(ProjectionVector(tuple(entry["p"]), entry.get("label", f"p{k}")))
        return out


def reference_feature_config(n_cells: int = 100, l_min: float = 20.0) -> FeatureConfig:
    """The 13 projection vectors and one orientation classifier of the
    reference experiment: axis-aligned, diagonal, and eight heading vectors."""
    projs = [
        {"label": "c_100", "p": [1, 0, 0]},
        {"label": "c_010", "p": [0, 1, 0]},
        {"label": "c_001", "p": [0, 0, 1]},
        {"label": "c_110", "p": [1, 1, 0]},
        {"label": "c_-110", "p": [-1, 1, 0]},
    ]
    projs += [{"label": f"c_a{k}", "alpha": k * math.pi / 4} for k in range(8)]
    return FeatureConfig(tuple(projs), {"cells": n_cells, "l_min_km": l_min, "label": "c_o"})


# -- set-wide extraction --------------------------------------------------

class FeatureSet:
    """Features of every row of a route table, column-aligned with ``ids``.

    ``lo[k]``/``hi[k]`` hold the interval of projection ``labels[k]`` for
    every row; ``cell_mask`` is the (rows, M) retained-cell matrix.
    """

    def __init__(self, ids, n_total, projections, lo, hi, orientation=None, cell_mask=None, loads=None):
        self.ids = ids
        self.n = n_total
        self.projections = list(projections)
        self.labels = [p.label for p in self.projections]
        self.lo = lo
        self.hi = hi
        self.orientation = orientation
        self.cell_mask = cell_mask
        self.loads = loads
        self.row_of = np.full(n_total, -1, dtype=np.int64)
        self.row_of[ids] = np.arange(len(ids))

    def __len__(self):
        return len(self.ids)

    def interval_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no projection feature labelled {label!r}") from None

    def interval(self, label: str):
        k = self.interval_index(label)
        return self.lo[k], self.hi[k]

    def signature(self, assignment_id: int) -> OrientationSignature | None:
        if self.orientation is None:
            return None
        r = self.row_of[assignment_id]
        loads = self.loads[r]
        nonempty = np.flatnonzero(loads > 0)
        keep = self.cell_mask[r]
        return OrientationSignature(
            tuple(np.flatnonzero(keep).tolist()),
            {int(c): float(loads[c]) for c in nonempty},
            self.orientation["cells"],
            self.orientation["l_min_km"],
            float(loads[(loads > 0) & ~keep].sum()),
        )

    def vector(self, assignment_id: int) -> FeatureVector:
        r = self.row_of[assignment_id]
        if r < 0:
            raise KeyError(f"assignment {assignment_id} has no features (infeasible or unknown)")
        intervals = tuple(IntervalFeature(float(self.lo[k, r]), float(self.hi[k, r])) for k in range(len(self.labels)))
        return FeatureVector(intervals, self.signature(assignment_id))


def extract_all(net: RoadNetwork, routes, config: FeatureConfig, v_max: float | None = None) -> FeatureSet:
    """Features for every feasible route.

    ``routes`` is either a list of :class:`BoundedRoute` (infeasible ones are
    skipped) or an already built :class:`RouteTable`.
    """
    if isinstance(routes, RouteTable):
        table = routes
    else:
        routes = list(routes)
        table = RouteTable(net, [b for b in routes if is_feasible(b)], n_total=len(routes))
    projections = config.resolve(v_max, net.coordinate_mode)
    n_rows = len(table)
    lo = np.empty((len(projections), n_rows))
    hi = np.empty((len(projections), n_rows))
    for k, pv in enumerate(projections):
        lo[k], hi[k] = kernels.project_intervals(
            table.node_off, table.x, table.y, table.lower, table.upper, *pv.p
        )
    mask = loads = None
    orient = config.orientation
    if orient is not None:
        m = orient["cells"]
        cells = orientation_cells(table.edge_theta, m)
        loads = np.bincount(table.edge_route * m + cells, weights=table.edge_len, minlength=n_rows * m)
        loads = loads.reshape(n_rows, m)
        mask = _retained(loads, orient["l_min_km"])
    return FeatureSet(table.ids, table.n_total, projections, lo, hi, orient, mask, loads)
