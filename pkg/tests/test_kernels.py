"""numba and numpy kernels must agree with each other and with brute force."""

import numpy as np
import pytest

from platoon_cull import kernels
from platoon_cull.assignments import Fleet
from platoon_cull.scenario import build_scenario

from conftest import small_config

IMPLS = [kernels.numpy_impl] + ([kernels.numba_impl] if kernels.numba_impl is not None else [])


def brute_pairs(lo, hi):
    n = len(lo)
    i, j = np.triu_indices(n, k=1)
    keep = (lo[i] <= hi[j]) & (lo[j] <= hi[i])
    return set(zip(i[keep].tolist(), j[keep].tolist()))


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.NAME)
def test_sweep_matches_brute_force(impl):
    rng = np.random.default_rng(7)
    for _ in range(30):
        n = int(rng.integers(0, 300))
        lo = np.round(rng.uniform(0, 100, n), 1)  # rounding forces ties
        hi = lo + np.round(rng.exponential(3, n), 1)
        a, b = impl.sweep_pairs(lo, hi)
        assert np.all(a < b)
        got = set(zip(a.tolist(), b.tolist()))
        assert len(got) == len(a)
        assert got == brute_pairs(lo, hi)


@pytest.mark.parametrize("impl", IMPLS, ids=lambda m: m.NAME)
def test_sweep_degenerate(impl):
    a, b = impl.sweep_pairs(np.zeros(0), np.zeros(0))
    assert len(a) == len(b) == 0
    a, b = impl.sweep_pairs(np.array([1.0, 1.0, 1.0]), np.array([1.0, 1.0, 1.0]))
    assert len(a) == 3


@pytest.fixture(scope="module")
def table():
    sc = build_scenario(small_config(4, K=120))
    return Fleet.build(sc.net, sc.assignments, sc.v_max).table


def test_projection_backends_agree(table):
    for p in [(1.0, 0.0, 0.0), (0.3, -0.7, 80.0), (0.0, 0.0, 1.0)]:
        outs = [impl.project_intervals(table.node_off, table.x, table.y, table.lower, table.upper, *p) for impl in IMPLS]
        for lo, hi in outs[1:]:
            assert np.array_equal(lo, outs[0][0]) and np.array_equal(hi, outs[0][1])


def test_all_matches_backends_agree(table):
    outs = [impl.all_matches(*table.kernel_args()) for impl in IMPLS]
    for res in outs[1:]:
        for a, b in zip(res, outs[0]):
            assert np.array_equal(a, b)
    assert len(outs[0][0]) > 0


def test_match_pairs_backends_agree(table):
    rng = np.random.default_rng(0)
    i = rng.integers(0, len(table), 3000)
    j = rng.integers(0, len(table), 3000)
    keep = i != j
    i, j = i[keep], j[keep]
    outs = [impl.match_pairs(i, j, *table.kernel_args()) for impl in IMPLS]
    for c, t in outs[1:]:
        assert np.array_equal(c, outs[0][0]) and np.array_equal(t, outs[0][1])
    # match_pairs over every pair reproduces all_matches
    ai, aj = np.triu_indices(len(table), k=1)
    for impl in IMPLS:
        c, t = impl.match_pairs(ai, aj, *table.kernel_args())
        ri, rj, cc, tt = impl.all_matches(*table.kernel_args())
        hit = c > 0
        assert np.array_equal(ai[hit], ri) and np.array_equal(aj[hit], rj)
        assert np.array_equal(c[hit], cc) and np.array_equal(t[hit], tt)


def test_backend_selection(monkeypatch):
    assert kernels._select("numpy") is kernels.numpy_impl
    with pytest.raises(ValueError):
        kernels._select("fortran")
    assert kernels.BACKEND in ("numba", "numpy")
