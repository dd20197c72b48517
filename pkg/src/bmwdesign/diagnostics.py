"""Balance diagnostics for a chosen partition.

Everything is computed on min-max scaled values: per-group means and sample
variances (n - 1 denominator) for each feature and for the propensity score,
the standardized mean difference, and Gaussian KDE curves of the target.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from bmwdesign.errors import DegenerateSampleError
from bmwdesign.propensity import FitConfig, PropensityFit, fit_logistic, predict_scores
from bmwdesign.scaling import ScalingParams, apply_minmax, fit_minmax

PROPENSITY_ROW = "propensity_score"
DEFAULT_DRIFT_THRESHOLD = 0.25


@dataclass(frozen=True)
class BalanceRow:
    name: str
    control_mean: float
    treatment_mean: float
    control_variance: float
    treatment_variance: float
    standardized_mean_difference: float

    def to_dict(self) -> dict:
        smd = self.standardized_mean_difference
        return {
            "name": self.name,
            "control_mean": self.control_mean,
            "treatment_mean": self.treatment_mean,
            "control_variance": self.control_variance,
            "treatment_variance": self.treatment_variance,
            "smd": smd if math.isfinite(smd) else None,
        }


@dataclass(frozen=True)
class BalanceTable:
    rows: tuple[BalanceRow, ...]
    drift_warnings: tuple[str, ...] = field(default=())

    def __getitem__(self, name: str) -> BalanceRow:
        for row in self.rows:
            if row.name == name:
                return row
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [r.name for r in self.rows]

    def feature_rows(self) -> list[BalanceRow]:
        return [r for r in self.rows if r.name != PROPENSITY_ROW]

    def mean_abs_smd(self) -> float:
        """Mean |SMD| over feature rows (propensity row excluded)."""
        vals = [abs(r.standardized_mean_difference) for r in self.feature_rows()]
        return float(np.mean(vals)) if vals else 0.0

    def to_list(self) -> list[dict]:
        return [r.to_dict() for r in self.rows]


def smd(control, treatment) -> float:
    """``(mean_T - mean_C) / sqrt((var_T + var_C) / 2)`` with n - 1 variances.

    Zero pooled variance gives 0 when the means agree and a signed infinity
    otherwise.
    """
    c = np.asarray(control, dtype=float)
    t = np.asarray(treatment, dtype=float)
    diff = t.mean() - c.mean()
    pooled = math.sqrt((_var(t) + _var(c)) / 2.0)
    if pooled > 0:
        return float(diff / pooled)
    if diff == 0:
        return 0.0
    return math.copysign(math.inf, diff)


def _var(x: np.ndarray) -> float:
    return float(np.var(x, ddof=1)) if x.size > 1 else 0.0


def _row(name, c, t) -> BalanceRow:
    return BalanceRow(
        name,
        float(np.mean(c)),
        float(np.mean(t)),
        _var(c),
        _var(t),
        smd(c, t),
    )


def _labels(assignment) -> np.ndarray:
    labels = np.asarray(getattr(assignment, "labels", assignment))
    if labels.sum() * 2 != labels.size:
        raise ValueError("assignment is not balanced")
    return labels


def _rows(scaled, names, labels, scores) -> list[BalanceRow]:
    c, t = labels == 0, labels == 1
    rows = [_row(name, scaled[c, j], scaled[t, j]) for j, name in enumerate(names)]
    if scores is not None:
        scores = np.asarray(scores, dtype=float)
        rows.append(_row(PROPENSITY_ROW, scores[c], scores[t]))
    return rows


def balance_table(
    table,
    features: Sequence[str],
    assignment,
    fit: Optional[PropensityFit] = None,
    params: Optional[ScalingParams] = None,
) -> BalanceTable:
    """Balance summary: one row per retained feature plus the
    propensity score row when ``fit`` is given."""
    labels = _labels(assignment)
    params = params or fit_minmax(table, features)
    scaled = apply_minmax(params, table)
    scores = None if fit is None else fit.scores
    return BalanceTable(tuple(_rows(scaled, params.retained, labels, scores)))


def post_experiment_balance_check(
    pre_params: ScalingParams,
    experiment_table,
    assignment,
    features: Sequence[str],
    fit: Optional[PropensityFit] = None,
    threshold: float = DEFAULT_DRIFT_THRESHOLD,
) -> BalanceTable:
    """Rescale experiment-period features with the pre-experiment ranges and
    flag every feature whose |SMD| exceeds ``threshold``."""
    missing = [f for f in features if f not in experiment_table.feature_names]
    if missing:
        raise KeyError(f"experiment table lacks features {missing}")
    labels = _labels(assignment)
    if labels.size != experiment_table.n:
        raise ValueError("assignment length does not match experiment table")
    retained = [f for f in features if f in pre_params.retained]
    sub = ScalingParams(
        tuple(retained),
        tuple(pre_params.mins[pre_params.retained.index(f)] for f in retained),
        tuple(pre_params.maxs[pre_params.retained.index(f)] for f in retained),
    )
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        scaled = apply_minmax(sub, experiment_table)
    scores = None
    if fit is not None and fit.coefficients.size == len(retained):
        scores = predict_scores(fit, scaled)
    rows = _rows(scaled, retained, labels, scores)
    drift = tuple(
        f"feature {r.name!r} drifted: |SMD| = {abs(r.standardized_mean_difference):.3f} > {threshold}"
        for r in rows
        if r.name != PROPENSITY_ROW and abs(r.standardized_mean_difference) > threshold
    )
    return BalanceTable(tuple(rows), drift)


def refit_scores(scaled, assignment, config: FitConfig | None = None) -> PropensityFit:
    """Propensity fit for an externally supplied assignment."""
    return fit_logistic(scaled, _labels(assignment), config)


@dataclass(frozen=True)
class KdeCurve:
    grid: np.ndarray
    density: np.ndarray
    bandwidth: float
    group_label: str = ""

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.grid))


def silverman_bandwidth(values) -> float:
    """``0.9 * min(sd, IQR / 1.34) * n ** (-1/5)``; falls back to sd when IQR is 0."""
    x = np.asarray(values, dtype=float)
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34)
    if spread <= 0:
        spread = sd
    return 0.9 * spread * x.size ** (-0.2)


def kde(values, grid_size: int = 512, group_label: str = "") -> KdeCurve:
    """Gaussian KDE on an even grid over ``[min - 3h, max + 3h]``."""
    x = np.sort(np.asarray(values, dtype=float))
    if x.size < 2:
        raise DegenerateSampleError("KDE needs at least two values")
    if not np.all(np.isfinite(x)):
        raise ValueError("KDE values must be finite")
    if x[0] == x[-1]:
        raise DegenerateSampleError("degenerate sample: all values identical")
    if grid_size < 2:
        raise ValueError("grid_size must be >= 2")
    h = silverman_bandwidth(x)
    grid = np.linspace(x[0] - 3 * h, x[-1] + 3 * h, grid_size)
    z = (grid[:, None] - x[None, :]) / h
    density = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * h * math.sqrt(2 * math.pi))
    return KdeCurve(grid, density, float(h), group_label)
