"""Compare the numba and numpy kernel backends on a synthetic K=1000 fleet.

    python3 benchmarks/bench_backends.py [--K 1000] [--seed 1] [--reps 5]

Each kernel is called once to warm up (JIT compile), then timed ``reps``
times; the median is reported per backend, and outputs are cross-checked.
"""

import argparse
import statistics
import time

import numpy as np

from platoon_cull import kernels
from platoon_cull.assignments import Fleet
from platoon_cull.features import alpha_vector
from platoon_cull.scenario import build_scenario, reference_scenario_config


def timed(fn, reps):
    out = fn()
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        samples.append((time.perf_counter() - t0) * 1e3)
    return out, statistics.median(samples)


def canonical(pairs):
    """Sweep output order is backend-specific; compare pairs sorted."""
    i, j = pairs
    order = np.lexsort((j, i))
    return i[order], j[order]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--K", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args(argv)

    impls = [m for m in (kernels.numba_impl, kernels.numpy_impl) if m is not None]
    if len(impls) < 2:
        print("numba is not installed; only the numpy backend is available")

    sc = build_scenario(reference_scenario_config(args.seed, args.K))
    t = Fleet.build(sc.net, sc.assignments, sc.v_max).table
    p = alpha_vector(np.pi / 4, sc.v_max).p
    lo, hi = kernels.numpy_impl.project_intervals(t.node_off, t.x, t.y, t.lower, t.upper, *p)
    pi, pj = np.triu_indices(len(t), k=1)

    cases = {
        "project_intervals": lambda m: m.project_intervals(t.node_off, t.x, t.y, t.lower, t.upper, *p),
        "sweep_pairs": lambda m: m.sweep_pairs(lo, hi),
        "match_pairs(all)": lambda m: m.match_pairs(pi, pj, *t.kernel_args()),
        "all_matches": lambda m: m.all_matches(*t.kernel_args()),
    }
    print(f"K={len(t)}  nodes={len(t.nodes)}  reps={args.reps}")
    print(f"{'kernel':20s}" + "".join(f"{m.NAME + ' ms':>14s}" for m in impls) + "  agree")
    for name, call in cases.items():
        results = [timed(lambda m=m: call(m), args.reps) for m in impls]
        outs = [canonical(r[0]) if name == "sweep_pairs" else r[0] for r in results]
        agree = all(all(np.array_equal(a, b) for a, b in zip(o, outs[0])) for o in outs[1:])
        print(f"{name:20s}" + "".join(f"{ms:14.2f}" for _, ms in results) + f"  {agree}")


if __name__ == "__main__":
    main()
