"""Post-experiment treatment-effect estimation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Mapping, Optional, Sequence

import numpy as np

from bmwdesign.errors import NumericFailure
from bmwdesign.scaling import apply_minmax, fit_minmax

OLS_RIDGE = 1e-10
# a paired sd below this is floating-point noise, not spread
SD_FLOOR = 1e-12


class EffectMethod(str, Enum):
    DIFFERENCE_IN_MEANS = "difference_in_means"
    REGRESSION_ADJUSTED = "regression_adjusted"
    PAIRED = "paired"


@dataclass(frozen=True)
class EffectEstimate:
    ate: float
    std_dev_control: float
    std_dev_treatment: float
    pooled_std_dev: float
    method: EffectMethod
    n_per_group: int

    def to_dict(self) -> dict:
        return {
            "method": self.method.value,
            "ate": self.ate,
            "sd_control": self.std_dev_control,
            "sd_treatment": self.std_dev_treatment,
            "pooled_sd": self.pooled_std_dev,
            "n_per_group": self.n_per_group,
        }


@dataclass(frozen=True)
class ComparisonReport:
    matched_ate: float
    paired_ate: float
    matched_sd: float
    paired_sd: float
    sd_reduction_pct: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _sd(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1)) if x.size > 1 else 0.0


def ate_difference_in_means(targets_control, targets_treatment) -> EffectEstimate:
    """``mean(treatment) - mean(control)`` with n - 1 group standard deviations."""
    c = np.asarray(targets_control, dtype=float)
    t = np.asarray(targets_treatment, dtype=float)
    if c.size == 0 or t.size == 0:
        raise ValueError("both groups need at least one value")
    sd_c, sd_t = _sd(c), _sd(t)
    return EffectEstimate(
        ate=float(t.mean() - c.mean()),
        std_dev_control=sd_c,
        std_dev_treatment=sd_t,
        pooled_std_dev=math.sqrt((sd_c**2 + sd_t**2) / 2.0),
        method=EffectMethod.DIFFERENCE_IN_MEANS,
        n_per_group=int(min(c.size, t.size)),
    )


def ols_treatment_effect(targets, labels, covariates) -> tuple[float, float]:
    """Coefficient of the treatment indicator in ``Y ~ 1 + tau + covariates``
    and its standard error.

    Normal equations with a tiny ridge on every non-intercept column.
    """
    y = np.asarray(targets, dtype=float)
    tau = np.asarray(labels, dtype=float)
    z = np.asarray(covariates, dtype=float).reshape(y.size, -1)
    design = np.column_stack([np.ones_like(y), tau, z])
    n, k = design.shape
    gram = design.T @ design
    gram[np.arange(1, k), np.arange(1, k)] += OLS_RIDGE
    try:
        inv = np.linalg.inv(gram)
    except np.linalg.LinAlgError:
        raise NumericFailure("rank-deficient regression design") from None
    coef = inv @ (design.T @ y)
    if not np.all(np.isfinite(coef)):
        raise NumericFailure("rank-deficient regression design")
    resid = y - design @ coef
    dof = n - k
    sigma2 = float(resid @ resid) / dof if dof > 0 else math.nan
    se = math.sqrt(max(sigma2 * inv[1, 1], 0.0)) if dof > 0 else math.nan
    return float(coef[1]), se


def ate_regression_adjusted(table, features: Sequence[str], assignment, targets) -> EffectEstimate:
    """Covariate-adjusted ATE: OLS of the target on treatment plus scaled features.

    ``pooled_std_dev`` carries the standard error of the treatment coefficient.
    """
    labels = np.asarray(getattr(assignment, "labels", assignment))
    y = np.asarray(targets, dtype=float)
    if y.size != table.n or labels.size != table.n:
        raise ValueError("targets and assignment must cover every subject")
    if not np.all(np.isfinite(y)):
        raise ValueError("targets must be finite for every subject")
    params = fit_minmax(table, features)
    z = apply_minmax(params, table)
    ate, se = ols_treatment_effect(y, labels, z)
    c, t = y[labels == 0], y[labels == 1]
    return EffectEstimate(
        ate=ate,
        std_dev_control=_sd(c),
        std_dev_treatment=_sd(t),
        pooled_std_dev=se,
        method=EffectMethod.REGRESSION_ADJUSTED,
        n_per_group=int(min(c.size, t.size)),
    )


def paired_test(before: Mapping[str, float], after: Mapping[str, float]) -> EffectEstimate:
    """Mean and sd of per-subject ``after - before`` differences."""
    if set(before) != set(after):
        raise KeyError("before and after must contain the same subject ids")
    if not before:
        raise ValueError("no subjects to compare")
    keys = sorted(before)
    b = np.array([before[k] for k in keys], dtype=float)
    a = np.array([after[k] for k in keys], dtype=float)
    d = a - b
    return EffectEstimate(
        ate=float(d.mean()),
        std_dev_control=_sd(b),
        std_dev_treatment=_sd(a),
        pooled_std_dev=_sd(d),
        method=EffectMethod.PAIRED,
        n_per_group=len(keys),
    )


def compare_designs(matched: EffectEstimate, paired: EffectEstimate) -> ComparisonReport:
    """Percent sd reduction of the matched design relative to the paired test.

    ``sd_reduction_pct`` is ``None`` when the paired sd is zero (or round-off).
    """
    if paired.pooled_std_dev > SD_FLOOR:
        pct = 100.0 * (1.0 - matched.pooled_std_dev / paired.pooled_std_dev)
    else:
        pct = None
    return ComparisonReport(
        matched_ate=matched.ate,
        paired_ate=paired.ate,
        matched_sd=matched.pooled_std_dev,
        paired_sd=paired.pooled_std_dev,
        sd_reduction_pct=pct,
    )
