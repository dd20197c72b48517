"""Acceptance criteria for the matched design, one test per criterion.

Each test prints a single ``[PASS]``/``[FAIL]`` line (also collected into the
"acceptance criteria" section of the pytest summary) and then asserts.
"""

import json
import time

import jsonschema
import numpy as np
from scipy.stats import binomtest

from bmwdesign import schemas
from bmwdesign.cli import main
from bmwdesign.design import DEFAULT_GRID, derive_seed, draw_balanced_assignment, run_bmw, sweep_M
from bmwdesign.diagnostics import PROPENSITY_ROW, balance_table, refit_scores
from bmwdesign.matching import greedy_match, optimal_match_oracle
from bmwdesign.propensity import FitConfig, fit_logistic, penalized_gradient, penalized_loglik
from bmwdesign.scaling import apply_minmax
from bmwdesign.simbench import SyntheticSpec, generate, run_benchmark

from conftest import record_criterion
from test_propensity import TINY_DATASETS

FEATURES = SyntheticSpec().feature_names


def test_criterion_1_monotone_m_curve():
    data = generate(SyntheticSpec(seed=0))
    start = time.perf_counter()
    sweep = sweep_M(data.table, FEATURES, DEFAULT_GRID, master_seed=0)
    elapsed = time.perf_counter() - start
    values = [v for _, v in sweep.points]
    monotone = all(b <= a for a, b in zip(values, values[1:]))
    by_m = dict(sweep.points)
    total = by_m[1] - by_m[1000]
    late = by_m[500] - by_m[1000]
    frac = late / total if total > 0 else 0.0
    ok = monotone and frac < 0.20 and elapsed < 60
    record_criterion(
        "1 monotone M-curve",
        ok,
        f"non-increasing={monotone}, last-half share={frac:.3f} (<0.20), elbow={sweep.elbow}, {elapsed:.1f}s (<60s)",
    )
    assert monotone
    assert frac < 0.20
    assert elapsed < 60


def test_criterion_2_balance_improvement():
    seeds = range(100)
    wins = 0
    close_scores = 0
    gaps = []
    for s in seeds:
        table = generate(SyntheticSpec(seed=s)).table
        outcome = run_bmw(table, FEATURES, M=200, master_seed=s)
        best = outcome.best
        bmw_bal = balance_table(table, FEATURES, best.assignment, best.fit, outcome.scaling)
        split = draw_balanced_assignment(table.n, derive_seed(s, 0))
        rnd_bal = balance_table(table, FEATURES, split, params=outcome.scaling)
        wins += bmw_bal.mean_abs_smd() < rnd_bal.mean_abs_smd()
        row = bmw_bal[PROPENSITY_ROW]
        gap = abs(row.treatment_mean - row.control_mean)
        gaps.append(gap)
        close_scores += gap < 0.05
    p = binomtest(wins, len(seeds), 0.5, alternative="greater").pvalue
    close_rate = close_scores / len(seeds)
    ok = p < 0.01 and close_rate >= 0.90
    record_criterion(
        "2 balance improvement",
        ok,
        f"BMW better in {wins}/{len(seeds)} seeds, sign test p={p:.2e} (<0.01); "
        f"propensity gap <0.05 in {close_rate:.0%} (>=90%), median gap {np.median(gaps):.4f}",
    )
    assert p < 0.01
    assert close_rate >= 0.90


def test_criterion_3_variance_reduction():
    spec = SyntheticSpec(seed=0)
    r2 = spec.covariate_r2()
    start = time.perf_counter()
    result = run_benchmark(spec, replications=200, M=500, master_seed=0, workers=4)
    elapsed = time.perf_counter() - start
    pct = result.sd_reduction_pct
    ok = result.sd_ate_bmw < result.sd_ate_random and pct >= 10 and elapsed < 600
    record_criterion(
        "3 variance reduction",
        ok,
        f"sd random={result.sd_ate_random:.4f}, sd bmw={result.sd_ate_bmw:.4f}, "
        f"reduction={pct:.1f}% (>=10%), covariate R^2={r2:.3f}, "
        f"{elapsed:.0f}s (<600s)",
    )
    assert 0.40 <= r2 <= 0.55
    assert result.sd_ate_bmw < result.sd_ate_random
    assert pct >= 10
    assert elapsed < 600


def test_criterion_4_mse_ordering_under_drift():
    spec = SyntheticSpec(seed=0, seasonal_drift=0.5)
    result = run_benchmark(spec, replications=200, M=100, master_seed=1, workers=4)
    pct = result.mse_improvement_pct
    ok = result.mse_bmw < result.mse_paired and pct is not None and pct > 0
    record_criterion(
        "4 MSE ordering under drift",
        ok,
        f"drift=0.5: mse bmw={result.mse_bmw:.4f}, mse paired={result.mse_paired:.4f}, "
        f"improvement={pct:.1f}% (>0)",
    )
    assert result.mse_bmw < result.mse_paired
    assert pct is not None and pct > 0


def test_criterion_5_matching_oracle():
    rng = np.random.default_rng(2024)
    ratios = []
    never_below = True
    exact_single = True
    for _ in range(1000):
        k = int(rng.integers(1, 6))
        c = [(f"c{j}", float(v)) for j, v in enumerate(rng.random(k))]
        t = [(f"t{j}", float(v)) for j, v in enumerate(rng.random(k))]
        greedy = greedy_match(c, t).total_distance
        best = optimal_match_oracle(c, t).total_distance
        never_below &= greedy >= best - 1e-12
        if k == 1:
            exact_single &= greedy == best
        if best > 0:
            ratios.append(greedy / best)
    mean_ratio = float(np.mean(ratios))
    ok = never_below and exact_single and mean_ratio <= 1.25
    record_criterion(
        "5 matching oracle",
        ok,
        f"greedy>=optimal always={never_below}, exact at N/2=1={exact_single}, "
        f"mean ratio={mean_ratio:.4f} (<=1.25)",
    )
    assert never_below
    assert exact_single
    assert mean_ratio <= 1.25


def test_criterion_6_logistic_correctness():
    worst_coef = 0.0
    for x, y, (b0, b1) in TINY_DATASETS:
        fit = fit_logistic(np.array(x, dtype=float), np.array(y))
        worst_coef = max(worst_coef, abs(fit.intercept - b0), abs(fit.coefficients[0] - b1))

    rng = np.random.default_rng(6)
    x = rng.random((28, 6))
    y = rng.permutation([0] * 14 + [1] * 14).astype(float)
    h = 1e-5
    worst_fd = 0.0
    for _ in range(50):
        theta = rng.normal(scale=1.5, size=7)
        g = penalized_gradient(theta, x, y, 1e-6)
        fd = np.array([
            (penalized_loglik(theta + h * e, x, y, 1e-6) - penalized_loglik(theta - h * e, x, y, 1e-6)) / (2 * h)
            for e in np.eye(7)
        ])
        worst_fd = max(worst_fd, np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8))

    worst_norm = 0.0
    for s in range(20):
        table = generate(SyntheticSpec(seed=s)).table
        outcome = run_bmw(table, FEATURES, M=5, master_seed=s)
        scaled = apply_minmax(outcome.scaling, table)
        fit = refit_scores(scaled, outcome.best.assignment, FitConfig())
        worst_norm = max(worst_norm, fit.final_gradient_norm)

    ok = worst_coef < 1e-3 and worst_fd < 1e-4 and worst_norm <= 1e-6
    record_criterion(
        "6 logistic correctness",
        ok,
        f"max oracle error={worst_coef:.2e} (<1e-3), max FD rel error={worst_fd:.2e} (<1e-4), "
        f"max converged grad norm={worst_norm:.2e} (<=1e-6)",
    )
    assert worst_coef < 1e-3
    assert worst_fd < 1e-4
    assert worst_norm <= 1e-6


OUTPUT_FILES = ("assignment.csv", "design_report.json", "balance.csv", "kde.csv")


def _design(sample_csv, out, workers):
    return main([
        "design", "--input", str(sample_csv), "--target", "y", "--M", "1000", "--seed", "7",
        "--workers", str(workers), "--out-dir", str(out),
    ])


def test_criterion_7_determinism(sample_csv, tmp_path):
    codes = [_design(sample_csv, tmp_path / name, w) for name, w in (("a", 1), ("b", 1), ("c", 4))]
    same_runs = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes() for f in OUTPUT_FILES)
    same_modes = all((tmp_path / "a" / f).read_bytes() == (tmp_path / "c" / f).read_bytes() for f in OUTPUT_FILES)
    ok = codes == [0, 0, 0] and same_runs and same_modes
    record_criterion(
        "7 determinism",
        ok,
        f"repeat run identical={same_runs}, serial vs 4 workers identical={same_modes}",
    )
    assert codes == [0, 0, 0]
    assert same_runs and same_modes


def test_criterion_8_end_to_end(sample_csv, tmp_path):
    assert _design(sample_csv, tmp_path, 1) == 0
    groups = [line.split(",")[1] for line in (tmp_path / "assignment.csv").read_text().splitlines()[1:]]
    n_a, n_b = groups.count("A"), groups.count("B")

    doc = json.loads((tmp_path / "design_report.json").read_text())
    try:
        jsonschema.validate(doc, schemas.DESIGN_REPORT)
        schema_ok = True
    except jsonschema.ValidationError:
        schema_ok = False
    names = [row["name"] for row in doc["balance_table"]]
    table_ok = names[-1] == PROPENSITY_ROW and names[:-1] == doc["features"]
    pairs_ok = len(doc["pairs"]) == 14 and abs(sum(p["delta"] for p in doc["pairs"]) - doc["delta_k"]) < 1e-9

    curves = {}
    for line in (tmp_path / "kde.csv").read_text().splitlines()[1:]:
        part, group, x, d = line.split(",")
        curves.setdefault((part, group), []).append((float(x), float(d)))
    integrals = {key: float(np.trapezoid([d for _, d in pts], [x for x, _ in pts])) for key, pts in curves.items()}
    kde_ok = len(integrals) == 4 and all(abs(v - 1) <= 1e-3 for v in integrals.values())

    ok = (n_a, n_b) == (14, 14) and schema_ok and table_ok and pairs_ok and kde_ok
    record_criterion(
        "8 end-to-end CLI",
        ok,
        f"A/B={n_a}/{n_b}, schema valid={schema_ok}, delta_k={doc['delta_k']:.4f} over {len(doc['pairs'])} pairs, "
        f"balance rows={len(names)} incl. propensity={table_ok}, "
        f"KDE integrals in [{min(integrals.values()):.5f}, {max(integrals.values()):.5f}]",
    )
    assert (n_a, n_b) == (14, 14)
    assert schema_ok and table_ok and pairs_ok
    assert kde_ok
