"""numba-compiled kernels; same contracts as ``_numpy``."""

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def project_intervals(node_off, x, y, lower, upper, p0, p1, p2):
    n_routes = node_off.shape[0] - 1
    if n_routes < 0:
        n_routes = 0
    lo = np.empty(n_routes, dtype=np.float64)
    hi = np.empty(n_routes, dtype=np.float64)
    for r in range(n_routes):
        cur_lo = np.inf
        cur_hi = -np.inf
        for k in range(node_off[r], node_off[r + 1]):
            s = p0 * x[k] + p1 * y[k]
            a = s + p2 * lower[k]
            b = s + p2 * upper[k]
            if a < cur_lo:
                cur_lo = a
            if b < cur_lo:
                cur_lo = b
            if a > cur_hi:
                cur_hi = a
            if b > cur_hi:
                cur_hi = b
        lo[r] = cur_lo
        hi[r] = cur_hi
    return lo, hi


@njit(cache=True)
def _sweep(lo, hi, out_i, out_j, fill):
    n = lo.shape[0]
    vals = np.empty(2 * n, dtype=np.float64)
    vals[:n] = lo
    vals[n:] = hi
    # stable sort keeps every lower endpoint ahead of an equal upper endpoint
    order = np.argsort(vals, kind="mergesort")
    active = np.empty(n, dtype=np.int64)
    pos = np.empty(n, dtype=np.int64)
    size = 0
    total = 0
    for e in order:
        if e < n:
            if fill:
                for m in range(size):
                    other = active[m]
                    if other < e:
                        out_i[total + m] = other
                        out_j[total + m] = e
                    else:
                        out_i[total + m] = e
                        out_j[total + m] = other
            total += size
            active[size] = e
            pos[e] = size
            size += 1
        else:
            k = e - n
            p = pos[k]
            last = active[size - 1]
            active[p] = last
            pos[last] = p
            size -= 1
    return total


@njit(cache=True)
def sweep_pairs(lo, hi):
    dummy = np.empty(0, dtype=np.int64)
    total = _sweep(lo, hi, dummy, dummy, False)
    out_i = np.empty(total, dtype=np.int64)
    out_j = np.empty(total, dtype=np.int64)
    _sweep(lo, hi, out_i, out_j, True)
    return out_i, out_j


@njit(cache=True)
def _pair(i, j, node_off, lower, upper, edge_off, edge_id, edge_len, edge_order, buf):
    si = edge_off[i]
    ei = edge_off[i + 1]
    sj = edge_off[j]
    ej = edge_off[j + 1]
    ni = node_off[i]
    nj = node_off[j]
    p = si
    q = sj
    count = 0
    while p < ei and q < ej:
        id_p = edge_id[si + edge_order[p]]
        id_q = edge_id[sj + edge_order[q]]
        if id_p < id_q:
            p += 1
        elif id_p > id_q:
            q += 1
        else:
            p_end = p + 1
            while p_end < ei and edge_id[si + edge_order[p_end]] == id_p:
                p_end += 1
            q_end = q + 1
            while q_end < ej and edge_id[sj + edge_order[q_end]] == id_q:
                q_end += 1
            for pp in range(p, p_end):
                a = edge_order[pp]
                for qq in range(q, q_end):
                    b = edge_order[qq]
                    u = ni + a
                    v = nj + b
                    if (
                        lower[u] <= upper[v]
                        and lower[v] <= upper[u]
                        and lower[u + 1] <= upper[v + 1]
                        and lower[v + 1] <= upper[u + 1]
                    ):
                        if count == buf.shape[0]:
                            grown = np.empty(2 * buf.shape[0] + 1, dtype=np.float64)
                            grown[:count] = buf[:count]
                            buf = grown
                        buf[count] = edge_len[si + a]
                        count += 1
            p = p_end
            q = q_end
    total = 0.0
    if count > 0:
        vals = np.sort(buf[:count])
        for k in range(count):
            total += vals[k]
    return count, total, buf


@njit(cache=True)
def match_pairs(pi, pj, node_off, lower, upper, edge_off, edge_id, edge_len, edge_order):
    n = pi.shape[0]
    count = np.zeros(n, dtype=np.int64)
    length = np.zeros(n, dtype=np.float64)
    buf = np.empty(64, dtype=np.float64)
    for k in range(n):
        i = pi[k]
        j = pj[k]
        if i > j:
            i, j = j, i
        c, t, buf = _pair(i, j, node_off, lower, upper, edge_off, edge_id, edge_len, edge_order, buf)
        count[k] = c
        length[k] = t
    return count, length


@njit(cache=True)
def all_matches(node_off, lower, upper, edge_off, edge_id, edge_len, edge_order):
    n_routes = edge_off.shape[0] - 1
    cap = 1024
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_c = np.empty(cap, dtype=np.int64)
    out_t = np.empty(cap, dtype=np.float64)
    buf = np.empty(64, dtype=np.float64)
    n = 0
    for i in range(n_routes):
        for j in range(i + 1, n_routes):
            c, t, buf = _pair(i, j, node_off, lower, upper, edge_off, edge_id, edge_len, edge_order, buf)
            if c == 0:
                continue
            if n == cap:
                cap *= 2
                ni = np.empty(cap, dtype=np.int64)
                nj = np.empty(cap, dtype=np.int64)
                nc = np.empty(cap, dtype=np.int64)
                nt = np.empty(cap, dtype=np.float64)
                ni[:n] = out_i[:n]
                nj[:n] = out_j[:n]
                nc[:n] = out_c[:n]
                nt[:n] = out_t[:n]
                out_i, out_j, out_c, out_t = ni, nj, nc, nt
            out_i[n] = i
            out_j[n] = j
            out_c[n] = c
            out_t[n] = t
            n += 1
    return out_i[:n].copy(), out_j[:n].copy(), out_c[:n].copy(), out_t[:n].copy()
