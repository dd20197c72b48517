"""Command-line interface: design, sweep, diagnose, analyze, simulate.

Exit codes: 0 ok, 2 validation, 3 I/O, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from bmwdesign.analysis import (
    ate_difference_in_means,
    ate_regression_adjusted,
    compare_designs,
    paired_test,
)
from bmwdesign.dataset import SubjectTable, load_csv, validate_for_design
from bmwdesign.design import (
    DEFAULT_GRID,
    AssignmentVector,
    derive_seed,
    draw_balanced_assignment,
    run_bmw,
    sweep_M,
)
from bmwdesign.diagnostics import (
    DEFAULT_DRIFT_THRESHOLD,
    BalanceTable,
    balance_table,
    kde,
    post_experiment_balance_check,
    refit_scores,
)
from bmwdesign.errors import DegenerateSampleError, DesignValidationError, NumericFailure
from bmwdesign.propensity import FitConfig
from bmwdesign.report import to_csv, to_json, write_all
from bmwdesign.scaling import apply_minmax, fit_minmax, scale_values
from bmwdesign.simbench import FLEET_CORRELATIONS, SyntheticSpec, run_benchmark

log = logging.getLogger("bmwdesign")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
SEED_ENV = "BMW_SEED"
KDE_POINTS = 256


class UsageError(ValueError):
    """Bad command-line values; reported with exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    input_path: str
    features: tuple[str, ...]
    target: Optional[str]
    M: int
    master_seed: int
    epsilon: float
    ridge: float
    smd_threshold: float
    out_dir: Path

    def __post_init__(self):
        if self.M < 1:
            raise UsageError("--M must be >= 1")
        if not 0 < self.epsilon <= 1:
            raise UsageError("--epsilon must lie in (0, 1]")
        if not self.ridge > 0:
            raise UsageError("--ridge must be > 0")
        if not self.smd_threshold > 0:
            raise UsageError("--smd-threshold must be > 0")
        if not 0 <= self.master_seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")

    def echo(self) -> dict:
        # no output paths or worker counts: reports must not depend on them
        return {
            "input": self.input_path,
            "features": list(self.features),
            "target": self.target,
            "M": self.M,
            "seed": self.master_seed,
            "epsilon": self.epsilon,
            "ridge": self.ridge,
            "smd_threshold": self.smd_threshold,
        }


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _split_list(text: Optional[str]) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()] if text else []


def _parse_grid(text: Optional[str]) -> list[int]:
    if not text:
        return list(DEFAULT_GRID)
    try:
        return [int(v) for v in _split_list(text)]
    except ValueError:
        raise UsageError(f"--grid must be a comma list of integers, got {text!r}") from None


def _config(args, features: Sequence[str]) -> RunConfig:
    seed = args.seed if args.seed is not None else _default_seed()
    return RunConfig(
        input_path=args.input,
        features=tuple(features),
        target=args.target,
        M=getattr(args, "M", 1),
        master_seed=seed,
        epsilon=getattr(args, "epsilon", 0.01),
        ridge=args.ridge,
        smd_threshold=getattr(args, "smd_threshold", DEFAULT_DRIFT_THRESHOLD),
        out_dir=Path(args.out_dir),
    )


def _load(path: str, target: Optional[str]) -> SubjectTable:
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return load_csv(path, target)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_and_validate(args):
    table = _load(args.input, args.target)
    features = _split_list(args.features) or list(table.feature_names)
    cfg = _config(args, features)
    report = validate_for_design(table, cfg.features, cfg.target)
    report.raise_for_errors()
    for issue in report.warnings:
        log.warning("%s", issue)
    return table, cfg, report


def _read_assignment(path: str, table: SubjectTable) -> AssignmentVector:
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "id" not in rows[0] or "group" not in rows[0]:
        raise UsageError(f"{path}: expected columns id,group")
    groups = {}
    for row in rows:
        sid, grp = row["id"].strip(), row["group"].strip().upper()
        if grp not in ("A", "B"):
            raise UsageError(f"{path}: group must be A or B, got {grp!r} for {sid!r}")
        if sid in groups:
            raise UsageError(f"{path}: duplicate id {sid!r}")
        groups[sid] = grp
    known = set(table.ids)
    unknown = sorted(set(groups) - known)
    if unknown:
        raise UsageError(f"{path}: unknown ids {unknown[:10]}")
    missing = [sid for sid in table.ids if sid not in groups]
    if missing:
        raise UsageError(f"{path}: ids missing from assignment {missing[:10]}")
    labels = np.array([1 if groups[sid] == "B" else 0 for sid in table.ids])
    n_b = int(labels.sum())
    if n_b * 2 != labels.size:
        raise UsageError(f"{path}: unbalanced groups ({labels.size - n_b} A vs {n_b} B)")
    return AssignmentVector(labels)


def _read_values(path: str, column: str) -> dict[str, float]:
    if not Path(path).is_file():
        raise FileNotFoundError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or "id" not in rows[0] or column not in rows[0]:
        raise UsageError(f"{path}: expected columns id,{column}")
    out = {}
    for row in rows:
        try:
            out[row["id"].strip()] = float(row[column])
        except ValueError:
            raise UsageError(f"{path}: non-numeric {column} for {row['id']!r}") from None
    return out


def _balance_csv(table: BalanceTable) -> str:
    return to_csv(
        ["name", "control_mean", "treatment_mean", "control_variance", "treatment_variance", "smd"],
        (
            [r.name, r.control_mean, r.treatment_mean, r.control_variance, r.treatment_variance,
             r.standardized_mean_difference]
            for r in table.rows
        ),
    )


def _kde_curves(table: SubjectTable, partitions: dict[str, AssignmentVector]):
    """Target KDE per partition and group, on min-max scaled target values."""
    if table.target_name is None:
        return [], None
    y = table.target_values()
    if not np.all(np.isfinite(y)) or y.max() == y.min():
        log.warning("target column missing values or constant; KDE skipped")
        return [], None
    scaled = scale_values(y, float(y.min()), float(y.max()))
    curves = []
    for name, assignment in partitions.items():
        for label, group in ((0, "A"), (1, "B")):
            try:
                curves.append((name, kde(scaled[assignment.labels == label], KDE_POINTS, group)))
            except DegenerateSampleError as exc:
                log.warning("KDE skipped for %s/%s: %s", name, group, exc)
    rows = (
        [name, c.group_label, float(x), float(d)]
        for name, c in curves
        for x, d in zip(c.grid, c.density)
    )
    summary = [
        {
            "partition": name,
            "group": c.group_label,
            "bandwidth": c.bandwidth,
            "integral": c.integral(),
            "points": int(c.grid.size),
        }
        for name, c in curves
    ]
    return summary, to_csv(["partition", "group", "x", "density"], rows)


def cmd_design(args) -> int:
    table, cfg, report = _load_and_validate(args)
    outcome = run_bmw(
        table, cfg.features, cfg.M, cfg.master_seed, FitConfig(ridge=cfg.ridge), workers=args.workers
    )
    best = outcome.best
    bal = balance_table(table, cfg.features, best.assignment, best.fit, outcome.scaling)
    random_split = draw_balanced_assignment(table.n, derive_seed(cfg.master_seed, 1))
    x = apply_minmax(outcome.scaling, table)
    random_fit = refit_scores(x, random_split, FitConfig(ridge=cfg.ridge))
    random_bal = balance_table(table, cfg.features, random_split, random_fit, outcome.scaling)
    kde_summary, kde_csv = _kde_curves(table, {"random": random_split, "bmw": best.assignment})

    ids = table.ids
    doc = {
        "delta_k": best.delta_k,
        "best_repetition": best.m,
        "M": outcome.M,
        "seed": outcome.master_seed,
        "n_subjects": table.n,
        "n_per_group": table.n // 2,
        "features": list(outcome.scaling.retained),
        "excluded_features": list(outcome.scaling.excluded_features),
        "pairs": best.pairing.to_list(),
        "propensity": best.fit.to_dict(),
        "scores": {sid: float(s) for sid, s in zip(ids, best.fit.scores)},
        "balance_table": bal.to_list(),
        "random_split_balance_table": random_bal.to_list(),
        "kde": kde_summary,
        "trace": [[m, v] for m, v in outcome.trace],
        "nonconverged_fits": outcome.nonconverged,
        "warnings": [str(w) for w in report.warnings],
        "config": cfg.echo(),
    }
    out = cfg.out_dir
    files = {
        out / "assignment.csv": to_csv(["id", "group"], zip(ids, best.assignment.groups())),
        out / "design_report.json": to_json(doc),
        out / "balance.csv": _balance_csv(bal),
    }
    if kde_csv is not None:
        files[out / "kde.csv"] = kde_csv
    write_all(files)
    print(f"delta_k={best.delta_k:.6g} (repetition {best.m} of {outcome.M}); wrote {out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    table, cfg, _ = _load_and_validate(args)
    grid = _parse_grid(args.grid)
    try:
        result = sweep_M(
            table, cfg.features, grid, cfg.master_seed, FitConfig(ridge=cfg.ridge),
            cfg.epsilon, workers=args.workers,
        )
    except ValueError as exc:
        if isinstance(exc, DesignValidationError):
            raise
        raise UsageError(str(exc)) from None
    out = cfg.out_dir
    write_all(
        {
            out / "sweep.csv": to_csv(["M", "min_delta_k"], result.points),
            out / "sweep.json": to_json(
                {
                    "points": [{"M": m, "min_delta_k": v} for m, v in result.points],
                    "elbow": result.elbow,
                    "epsilon": result.epsilon,
                    "seed": cfg.master_seed,
                    "config": cfg.echo(),
                }
            ),
        }
    )
    print(f"elbow={result.elbow}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    table, cfg, _ = _load_and_validate(args)
    assignment = _read_assignment(args.assignment, table)
    params = fit_minmax(table, cfg.features)
    fit = refit_scores(apply_minmax(params, table), assignment, FitConfig(ridge=cfg.ridge))
    bal = balance_table(table, cfg.features, assignment, fit, params)
    kde_summary, kde_csv = _kde_curves(table, {"bmw": assignment})
    doc = {"balance_table": bal.to_list(), "kde": kde_summary, "config": cfg.echo()}
    out = cfg.out_dir
    files = {out / "balance.csv": _balance_csv(bal)}

    if args.experiment:
        exp = _load(args.experiment, args.target)
        if exp.ids != table.ids:
            if sorted(exp.ids) != sorted(table.ids):
                raise UsageError("experiment table ids differ from the observation table")
            order = {sid: k for k, sid in enumerate(exp.ids)}
            exp = SubjectTable(
                tuple(exp.subjects[order[sid]] for sid in table.ids), exp.feature_names, exp.target_name
            )
        try:
            post = post_experiment_balance_check(
                params, exp, assignment, cfg.features, fit, cfg.smd_threshold
            )
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        doc["post_experiment"] = {
            "balance_table": post.to_list(),
            "drift_warnings": list(post.drift_warnings),
            "smd_threshold": cfg.smd_threshold,
        }
        files[out / "post_balance.csv"] = _balance_csv(post)
        for w in post.drift_warnings:
            log.warning("%s", w)
    if kde_csv is not None:
        files[out / "kde.csv"] = kde_csv
    files[out / "diagnostics.json"] = to_json(doc)
    write_all(files)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    if not args.target:
        raise UsageError("analyze needs --target")
    table = _load(args.input, args.target)
    assignment = _read_assignment(args.assignment, table)
    y = table.target_values()
    if not np.all(np.isfinite(y)):
        raise UsageError("target has missing values")
    labels = assignment.labels
    plain = ate_difference_in_means(y[labels == 0], y[labels == 1])
    doc = {"difference_in_means": plain.to_dict()}

    features = _split_list(args.features)
    if features:
        report = validate_for_design(table, features, args.target)
        report.raise_for_errors()
        doc["regression_adjusted"] = ate_regression_adjusted(table, features, assignment, y).to_dict()

    if args.before or args.after:
        if not (args.before and args.after):
            raise UsageError("--before and --after must be given together")
        try:
            paired = paired_test(_read_values(args.before, args.target), _read_values(args.after, args.target))
        except KeyError as exc:
            raise UsageError(str(exc)) from None
        doc["paired"] = paired.to_dict()
        doc["comparison"] = compare_designs(plain, paired).to_dict()

    seed = args.seed if args.seed is not None else _default_seed()
    doc["config"] = {"input": args.input, "target": args.target, "features": features, "seed": seed}
    out = Path(args.out_dir)
    write_all({out / "effect_report.json": to_json(doc)})
    print(f"ate={plain.ate:.6g}; wrote {out / 'effect_report.json'}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    corr = tuple(float(v) for v in _split_list(args.correlations)) if args.correlations else FLEET_CORRELATIONS
    seed = args.seed if args.seed is not None else _default_seed()
    try:
        spec = SyntheticSpec(
            N=args.N,
            i=len(corr),
            feature_target_correlations=corr,
            noise_sd=args.noise_sd,
            true_effect=args.effect,
            seed=seed,
            seasonal_drift=args.drift,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.replications < 2:
        raise UsageError("--replications must be >= 2")
    if args.M < 1:
        raise UsageError("--M must be >= 1")
    result, rows = run_benchmark(
        spec, args.replications, args.M, seed, FitConfig(ridge=args.ridge),
        workers=args.workers, return_traces=True,
    )
    doc = result.to_dict()
    doc.update(
        {
            "M": args.M,
            "seed": seed,
            "spec": {
                "N": spec.N,
                "i": spec.i,
                "feature_target_correlations": list(spec.feature_target_correlations),
                "noise_sd": spec.noise_sd,
                "true_effect": spec.true_effect,
                "seasonal_drift": spec.seasonal_drift,
                "covariate_r2": spec.covariate_r2(),
            },
        }
    )
    out = Path(args.out_dir)
    files = {out / "bench.json": to_json(doc)}
    if args.traces:
        keys = ["replication", "ate_random", "ate_bmw", "ate_paired", "delta_k"]
        files[out / "bench_traces.csv"] = to_csv(keys, ([row[k] for k in keys] for row in rows))
    write_all(files)
    print(
        f"sd reduction {result.sd_reduction_pct}% vs random; "
        f"MSE improvement {result.mse_improvement_pct}% vs paired; wrote {out}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bmw", description="Balanced A/B group design for small subject pools."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, table=True):
        if table:
            p.add_argument("--input", required=True, help="subject CSV (first column id)")
            p.add_argument("--features", help="comma-separated feature columns (default: all)")
            p.add_argument("--target", help="target column, never used as a feature")
        p.add_argument("--seed", type=int, default=None, help=f"master seed (fallback ${SEED_ENV}, then 0)")
        p.add_argument("--ridge", type=float, default=1e-6, help="logistic ridge penalty")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--workers", type=int, default=1, help="threads for repetitions")

    p = sub.add_parser("design", help="choose the most balanced A/B partition")
    common(p)
    p.add_argument("--M", type=int, default=1000, help="repetitions")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("sweep", help="minimum total distance as a function of M")
    common(p)
    p.add_argument("--grid", help="comma-separated increasing M values (default 1,10,20,...,1000)")
    p.add_argument("--epsilon", type=float, default=0.01, help="elbow improvement threshold")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("diagnose", help="balance table and target KDE for an assignment")
    common(p)
    p.add_argument("--assignment", required=True, help="CSV with id,group (A|B)")
    p.add_argument("--experiment", help="experiment-period subject CSV for drift checks")
    p.add_argument("--smd-threshold", type=float, default=DEFAULT_DRIFT_THRESHOLD)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("analyze", help="treatment-effect estimates")
    common(p)
    p.add_argument("--assignment", required=True, help="CSV with id,group (A|B)")
    p.add_argument("--before", help="CSV with id,<target> before treatment")
    p.add_argument("--after", help="CSV with id,<target> after treatment")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte-Carlo benchmark on synthetic subjects")
    common(p, table=False)
    p.add_argument("--N", type=int, default=28)
    p.add_argument("--correlations", help="comma-separated feature/target correlations")
    p.add_argument("--noise-sd", type=float, default=0.1)
    p.add_argument("--effect", type=float, default=-0.2)
    p.add_argument("--drift", type=float, default=0.0, help="seasonal drift in the experiment period")
    p.add_argument("--replications", type=int, default=200)
    p.add_argument("--M", type=int, default=500)
    p.add_argument("--traces", action="store_true", help="also write per-replication CSV")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    warnings.simplefilter("default")
    try:
        return args.func(args)
    except DesignValidationError as exc:
        print("validation failed:", file=sys.stderr)
        for issue in exc.report.errors:
            print(f"  error {issue}", file=sys.stderr)
        for issue in exc.report.warnings:
            print(f"  warning {issue}", file=sys.stderr)
        return EXIT_VALIDATION
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericFailure as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
