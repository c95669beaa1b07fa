"""Command-line entry point: ``platoon-cull {gen,run,truth,bench}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels
from .assignments import Fleet
from .candidates import CandidateSet
from .culling import StagePlan, all_positives, build_classifiers, greedy_order, run_pipeline
from .exact_match import evaluate_pairs, exact_matches
from .features import FeatureConfig, extract_all, reference_feature_config
from .scenario import Scenario, ScenarioConfig, build_scenario, load_scenario

log = logging.getLogger("platoon_cull")

EXIT_USAGE = 2
EXIT_UNSOUND = 3


class SoundnessError(RuntimeError):
    pass


@dataclass
class RunReport:
    scenario: dict
    classifier_positives: dict
    plan: list
    stage_log: list
    final_candidates: int
    ground_truth: int
    verification: dict
    timings_ms: dict = field(default_factory=dict)

    @property
    def false_positives(self) -> int:
        return self.final_candidates - self.ground_truth

    def to_dict(self) -> dict:
        """Deterministic part of the report (no wall-clock values)."""
        return {
            "scenario": self.scenario,
            "classifier_positives": self.classifier_positives,
            "plan": self.plan,
            "stage_log": [[label, count] for label, count in self.stage_log],
            "final_candidates": self.final_candidates,
            "ground_truth": self.ground_truth,
            "false_positives": self.false_positives,
            "verification": self.verification,
        }


class _Timer:
    def __init__(self):
        self.ms = {}

    @contextmanager
    def phase(self, name):
        t0 = time.perf_counter()
        yield
        self.ms[name] = self.ms.get(name, 0.0) + (time.perf_counter() - t0) * 1e3


# -- input resolution -----------------------------------------------------

def _load_inputs(args) -> tuple[Scenario, ScenarioConfig | None]:
    if args.scenario:
        cfg = ScenarioConfig.load(args.scenario)
        changes = {}
        if args.seed is not None:
            changes["seed"] = args.seed
        if args.K is not None:
            changes["K"] = args.K
        if changes:
            cfg = cfg.replace(**changes)
        return build_scenario(cfg), cfg
    if args.network and args.assignments:
        return load_scenario(args.network, args.assignments), None
    raise ValueError("give --scenario, or both --network and --assignments")


def _resolve_l_min(args, cfg, features):
    if args.l_min_km is not None:
        return float(args.l_min_km)
    if cfg is not None:
        return cfg.l_min_km
    if features is not None and features.orientation is not None:
        return features.orientation["l_min_km"]
    return 0.0


def _feature_config(args, cfg):
    features = FeatureConfig.load(args.features) if getattr(args, "features", None) else None
    l_min = _resolve_l_min(args, cfg, features)
    if features is None:
        features = reference_feature_config(l_min=l_min)
    elif args.l_min_km is not None:
        features = features.with_l_min(l_min)
    if features.orientation is not None and features.orientation["l_min_km"] > l_min:
        raise ValueError(
            f"orientation l_min ({features.orientation['l_min_km']} km) exceeds the matching l_min "
            f"({l_min} km); the orientation classifier would not be sound"
        )
    return features, l_min


def _scenario_digest(scenario: Scenario, fleet: Fleet, cfg, l_min):
    return {
        "seed": None if cfg is None else cfg.seed,
        "K": fleet.n,
        "feasible": int(fleet.feasible.sum()),
        "network": {
            "coordinate_mode": scenario.net.coordinate_mode,
            "nodes": scenario.net.node_count,
            "edges": scenario.net.edge_count,
        },
        "v_max_kmh": scenario.v_max,
        "l_min_km": l_min,
    }


# -- writers --------------------------------------------------------------

def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _pair_rows(i, j, overlap):
    return [(int(a), int(b), f"{float(o):.6f}") for a, b, o in zip(i, j, overlap)]


def _write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


# -- commands -------------------------------------------------------------

def cmd_gen(args) -> int:
    if not args.scenario:
        raise ValueError("gen needs --scenario")
    scenario, cfg = _load_inputs(args)
    out = Path(args.out_dir)
    paths = scenario.save(out)
    _write_json(out / "scenario.json", cfg.to_dict())
    reference_feature_config(l_min=cfg.l_min_km).save(out / "features.json")
    log.info("wrote %s, %s (%d assignments)", paths["network"], paths["assignments"], len(scenario.assignments))
    return 0


def execute_run(scenario, cfg, features, l_min, plan_arg="greedy", stages=6, verify=None, sample_size=10_000):
    """Features, culling, exact check of survivors and optional soundness check."""
    timer = _Timer()
    with timer.phase("bounds"):
        fleet = Fleet.build(scenario.net, scenario.assignments, scenario.v_max)
    with timer.phase("features"):
        fs = extract_all(scenario.net, fleet.table, features, scenario.v_max)
        classifiers = build_classifiers(fs)
    with timer.phase("classifier_positives"):
        positives = all_positives(classifiers, fs)
    with timer.phase("plan"):
        if plan_arg == "greedy":
            plan = greedy_order(classifiers, fs, stages, positives) if classifiers else StagePlan(())
        else:
            plan = StagePlan.load(plan_arg)
    with timer.phase("pipeline"):
        final = run_pipeline(plan, classifiers, fs, positives)
    with timer.phase("exact_survivors"):
        i, j = final.pairs()
        lam, overlap = evaluate_pairs(fleet.table, i, j, l_min)
    true_i, true_j, true_overlap = i[lam], j[lam], overlap[lam]
    truth_count = int(lam.sum())

    verification = {"mode": verify or "survivors", "checked_negatives": 0, "violations": 0}
    violations = []
    with timer.phase("verify"):
        if verify == "full":
            truth = exact_matches(fleet.table, l_min)
            tset = CandidateSet.from_pairs(truth.i, truth.j, fleet.n)
            missing = tset.difference(final)
            violations = list(missing)[:10]
            verification["checked_negatives"] = len(CandidateSet.all_pairs(fleet.feasible_ids, fleet.n)) - len(final)
            verification["violations"] = len(missing)
            truth_count = len(tset)
        elif verify == "sample":
            culled = CandidateSet.all_pairs(fleet.feasible_ids, fleet.n).difference(final)
            rng = np.random.default_rng([0 if cfg is None else cfg.seed, 2])
            take = min(sample_size, len(culled))
            keys = np.sort(rng.choice(culled.keys, size=take, replace=False)) if take else culled.keys[:0]
            si, sj = keys // fleet.n, keys % fleet.n
            bad, _ = evaluate_pairs(fleet.table, si, sj, l_min)
            verification["checked_negatives"] = int(take)
            verification["violations"] = int(bad.sum())
            violations = list(zip(si[bad].tolist(), sj[bad].tolist()))[:10]

    report = RunReport(
        scenario=_scenario_digest(scenario, fleet, cfg, l_min),
        classifier_positives={label: len(p) for label, p in positives.items()},
        plan=list(plan.stages),
        stage_log=final.stage_log,
        final_candidates=len(final),
        ground_truth=truth_count,
        verification=verification,
        timings_ms=timer.ms,
    )
    return report, (true_i, true_j, true_overlap), violations


def cmd_run(args) -> int:
    scenario, cfg = _load_inputs(args)
    features, l_min = _feature_config(args, cfg)
    report, (ti, tj, to), violations = execute_run(
        scenario, cfg, features, l_min, args.plan, args.stages, args.verify, args.verify_sample
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "report.json", report.to_dict())
    _write_json(out / "plan.json", {"stages": report.plan})
    _write_csv(out / "stage_log.csv", ["stage", "label", "survivors"],
               [(k, label, n) for k, (label, n) in enumerate(report.stage_log)])
    _write_csv(out / "positives.csv", ["label", "positives"], sorted(report.classifier_positives.items()))
    _write_csv(out / "pairs.csv", ["i", "j", "overlap_km"], _pair_rows(ti, tj, to))
    _write_json(out / "timings.json", {"backend": kernels.BACKEND,
                                       "phases_ms": {k: round(v, 3) for k, v in report.timings_ms.items()}})
    print(f"{report.stage_log[0][1]} pairs -> {report.final_candidates} candidates -> "
          f"{report.ground_truth} platooning pairs ({report.false_positives} false positives)")
    if report.verification["violations"]:
        print(f"SOUNDNESS VIOLATION: {report.verification['violations']} platooning pairs were culled, "
              f"e.g. {violations}", file=sys.stderr)
        return EXIT_UNSOUND
    return 0


def cmd_truth(args) -> int:
    scenario, cfg = _load_inputs(args)
    l_min = _resolve_l_min(args, cfg, None)
    fleet = Fleet.build(scenario.net, scenario.assignments, scenario.v_max)
    m = exact_matches(fleet.table, l_min)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "truth.csv", ["i", "j", "overlap_km"], _pair_rows(m.i, m.j, m.overlap))
    print(f"{len(m)} platooning pairs")
    return 0


def bench_phases(scenario, features, l_min, reps):
    """Median/min wall-clock of every phase over ``reps`` repetitions (after one warm-up)."""
    samples = {}

    def once(record):
        timer = _Timer()
        with timer.phase("bounds"):
            fleet = Fleet.build(scenario.net, scenario.assignments, scenario.v_max)
        with timer.phase("features"):
            fs = extract_all(scenario.net, fleet.table, features, scenario.v_max)
        with timer.phase("culling"):
            classifiers = build_classifiers(fs)
            final = run_pipeline(StagePlan(tuple(classifiers)), classifiers, fs)
        with timer.phase("exact_survivors"):
            i, j = final.pairs()
            evaluate_pairs(fleet.table, i, j, l_min)
        with timer.phase("exact_all_pairs"):
            every = CandidateSet.all_pairs(fleet.feasible_ids, fleet.n)
            i, j = every.pairs()
            evaluate_pairs(fleet.table, i, j, l_min)
        if record:
            for k, v in timer.ms.items():
                samples.setdefault(k, []).append(v)

    once(False)
    for _ in range(reps):
        once(True)
    return [(phase, reps, statistics.median(v), min(v)) for phase, v in samples.items()]


def cmd_bench(args) -> int:
    scenario, cfg = _load_inputs(args)
    features, l_min = _feature_config(args, cfg)
    if args.reps < 1:
        raise ValueError("--reps must be at least 1")
    rows = bench_phases(scenario, features, l_min, args.reps)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "bench.csv", ["phase", "reps", "median_ms", "min_ms"],
               [(p, r, f"{med:.6f}", f"{mn:.6f}") for p, r, med, mn in rows])
    for p, r, med, mn in rows:
        print(f"{p:16s} median {med:10.3f} ms  min {mn:10.3f} ms  ({kernels.BACKEND})")
    return 0


# -- parser ---------------------------------------------------------------

def _add_inputs(p):
    p.add_argument("--scenario", help="scenario config JSON (generates network and assignments)")
    p.add_argument("--network", help="network JSON (with --assignments)")
    p.add_argument("--assignments", help="assignment JSON (with --network)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--K", type=int, help="override the scenario assignment count")
    p.add_argument("--l-min-km", type=float, dest="l_min_km", help="minimum platooning overlap in km")
    p.add_argument("--out-dir", default=".", help="directory for output files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="platoon-cull", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate network and assignment files from a scenario config")
    _add_inputs(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="cull, verify survivors and report")
    _add_inputs(p)
    p.add_argument("--features", help="feature config JSON (default: the 13 projections + orientation set)")
    p.add_argument("--plan", default="greedy", help="'greedy' or a plan JSON file")
    p.add_argument("--stages", type=int, default=6, help="number of greedy stages (default 6)")
    p.add_argument("--verify", nargs="?", const="sample", choices=["sample", "full"],
                   help="check culled pairs: a random sample (default) or all of them (=full)")
    p.add_argument("--verify-sample", type=int, default=10_000, help="culled pairs sampled by --verify")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("truth", help="exhaustive exact matching of all pairs")
    _add_inputs(p)
    p.set_defaults(func=cmd_truth)

    p = sub.add_parser("bench", help="per-phase timings")
    _add_inputs(p)
    p.add_argument("--features", help="feature config JSON")
    p.add_argument("--reps", type=int, default=5)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
