import math

import numpy as np
import pytest

from platoon_cull.assignments import TransportAssignment, compute_bounds
from platoon_cull.road_network import GEODETIC, PLANAR, RoadNetwork
from platoon_cull.scenario import ScenarioConfig


@pytest.fixture
def path_net():
    """A(0,0) -> B(40,0) -> C(80,30), both directions."""
    return RoadNetwork([[0, 0], [40, 0], [80, 30]], [[0, 1], [1, 2], [1, 0], [2, 1]], PLANAR)


@pytest.fixture
def abc_bounds(path_net):
    a = TransportAssignment(0, (0, 1, 2), 0.0, 2.0)
    return compute_bounds(path_net, a, 80.0)


def small_config(seed, K=60, kind="grid", **kw):
    if kind == "grid":
        net = {"kind": "grid", "rows": 12, "cols": 12, "spacing_km": 20.0, "diagonal_fraction": 0.3}
    else:
        net = {"kind": "random_geometric", "n": 500, "radius_km": 50.0, "extent_km": 500.0}
    return ScenarioConfig(seed=seed, K=K, network=net, **kw)


def to_geodetic(net, lat0=50.0, lon0=10.0):
    """Re-express a planar-km network as [lat, lon] degrees around (lat0, lon0)."""
    km_per_deg = 6371.0 * math.pi / 180.0
    pos = net.positions
    lat = lat0 + pos[:, 1] / km_per_deg
    lon = lon0 + pos[:, 0] / (km_per_deg * math.cos(math.radians(lat0)))
    return RoadNetwork(np.column_stack([lat, lon]), net.edges, GEODETIC)


def retime(net, assignments, v_max, window):
    """Deadlines recomputed on ``net`` so every window is exactly ``window`` wide."""
    out = []
    for a in assignments:
        hops = net.lengths[net.edge_ids_of_path(a.route)] / v_max
        out.append(TransportAssignment(a.id, a.route, a.t_start, (a.t_start + float(np.cumsum(hops)[-1])) + window))
    return out


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
