"""Vectorised numpy kernels.

Route tables are passed as flat arrays (see ``RouteTable`` in
``platoon_cull.assignments``):

    node_off   (R+1,)  route r owns node slots node_off[r]:node_off[r+1]
    lower/upper        per node slot arrival-time bounds
    edge_off   (R+1,)  route r owns edge slots edge_off[r]:edge_off[r+1]
    edge_id, edge_len  per edge slot network edge id and length
    edge_order         per edge slot, local edge indices of the route sorted by edge id

Edge slot g of route r starts at node slot g + r.
"""

import numpy as np

NAME = "numpy"


def project_intervals(node_off, x, y, lower, upper, p0, p1, p2):
    """Min/max of ``p . (x, y, t)`` over every (node, bound) vertex of each route."""
    if len(node_off) <= 1:
        empty = np.empty(0, dtype=np.float64)
        return empty, empty.copy()
    s = p0 * x + p1 * y
    a = s + p2 * lower
    b = s + p2 * upper
    starts = node_off[:-1]
    lo = np.minimum.reduceat(np.minimum(a, b), starts)
    hi = np.maximum.reduceat(np.maximum(a, b), starts)
    return lo, hi


def _run_pairs(sorted_vals_end, n):
    """Pairs (k, m), k < m < end[k], for a sorted run-end array."""
    k = np.arange(n, dtype=np.int64)
    cnt = np.maximum(sorted_vals_end - k - 1, 0)
    total = int(cnt.sum())
    u = np.repeat(k, cnt)
    first = np.repeat(np.cumsum(cnt) - cnt, cnt)
    v = u + 1 + (np.arange(total, dtype=np.int64) - first)
    return u, v


def sweep_pairs(lo, hi):
    """All index pairs whose closed intervals overlap.

    Sorted by lower endpoint, interval k overlaps every later interval m whose
    lower endpoint is <= hi[k]; a right-sided searchsorted finds that run.
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    n = lo.shape[0]
    order = np.argsort(lo, kind="stable")
    lo_s = lo[order]
    end = np.searchsorted(lo_s, hi[order], side="right")
    u, v = _run_pairs(end, n)
    a = order[u]
    b = order[v]
    return np.minimum(a, b), np.maximum(a, b)


def _cooccurrences(node_off, lower, upper, edge_off, edge_id):
    """Every pair of edge slots from different routes that share an edge id
    and whose windows overlap at both edge endpoints."""
    n_routes = len(edge_off) - 1
    total = int(edge_off[-1]) if n_routes > 0 else 0
    if total == 0:
        z = np.empty(0, dtype=np.int64)
        return z, z, z
    route_of = np.repeat(np.arange(n_routes, dtype=np.int64), np.diff(edge_off))
    order = np.argsort(edge_id, kind="stable")
    sid = edge_id[order]
    end = np.searchsorted(sid, sid, side="right")
    u, v = _run_pairs(end, total)
    gu = order[u]
    gv = order[v]
    ru = route_of[gu]
    rv = route_of[gv]
    keep = ru != rv
    gu, gv, ru, rv = gu[keep], gv[keep], ru[keep], rv[keep]
    swap = ru > rv
    gu, gv = np.where(swap, gv, gu), np.where(swap, gu, gv)
    ru, rv = np.where(swap, rv, ru), np.where(swap, ru, rv)
    nu = gu + ru
    nv = gv + rv
    ok = (
        (lower[nu] <= upper[nv])
        & (lower[nv] <= upper[nu])
        & (lower[nu + 1] <= upper[nv + 1])
        & (lower[nv + 1] <= upper[nu + 1])
    )
    return ru[ok] * n_routes + rv[ok], gu[ok], n_routes


def _aggregate(keys, lengths):
    # ascending lengths within a key, then bincount sums sequentially
    order = np.lexsort((lengths, keys))
    keys = keys[order]
    lengths = lengths[order]
    uniq, inv = np.unique(keys, return_inverse=True)
    count = np.bincount(inv, minlength=len(uniq)).astype(np.int64)
    total = np.bincount(inv, weights=lengths, minlength=len(uniq))
    return uniq, count, total


def match_pairs(pi, pj, node_off, lower, upper, edge_off, edge_id, edge_len, edge_order):
    """Matched edge count and matched length for each requested route pair."""
    pi = np.asarray(pi, dtype=np.int64)
    pj = np.asarray(pj, dtype=np.int64)
    count = np.zeros(len(pi), dtype=np.int64)
    length = np.zeros(len(pi), dtype=np.float64)
    if len(pi) == 0:
        return count, length
    res = _cooccurrences(node_off, lower, upper, edge_off, edge_id)
    if len(res[0]) == 0:
        return count, length
    keys, slots, n_routes = res
    want = np.minimum(pi, pj) * n_routes + np.maximum(pi, pj)
    mask = np.isin(keys, want)
    uniq, c, t = _aggregate(keys[mask], edge_len[slots[mask]])
    if len(uniq) == 0:
        return count, length
    idx = np.searchsorted(uniq, want)
    idx_c = np.minimum(idx, len(uniq) - 1)
    hit = uniq[idx_c] == want
    count[hit] = c[idx_c[hit]]
    length[hit] = t[idx_c[hit]]
    return count, length


def all_matches(node_off, lower, upper, edge_off, edge_id, edge_len, edge_order):
    """Every route pair i < j with at least one matched edge, in (i, j) order."""
    res = _cooccurrences(node_off, lower, upper, edge_off, edge_id)
    if len(res[0]) == 0:
        z = np.empty(0, dtype=np.int64)
        return z, z.copy(), z.copy(), np.empty(0, dtype=np.float64)
    keys, slots, n_routes = res
    uniq, c, t = _aggregate(keys, edge_len[slots])
    return uniq // n_routes, uniq % n_routes, c, t
