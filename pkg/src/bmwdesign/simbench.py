"""Synthetic subject pools with known potential outcomes, and a Monte-Carlo
comparison of random splits, the matched design and before/after paired tests.

Generator: a latent standard normal ``u`` drives everything. Feature ``j`` is
``r_j * u + sqrt(1 - r_j**2) * eps_j`` and the baseline outcome is
``Y0 = u + noise_sd * e``, so ``corr(X_j, Y0) = r_j / sqrt(1 + noise_sd**2)``.
The treated outcome is ``Y1 = Y0 + true_effect``. A seasonal drift, when set,
is added to every outcome measured in the experiment period: it cancels in a
concurrent A/B comparison but biases a before/after comparison.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

import numpy as np

from bmwdesign.dataset import SubjectTable
from bmwdesign.design import derive_seed, draw_balanced_assignment, run_bmw
from bmwdesign.propensity import FitConfig

# default feature/target correlation profile: six features of a small vehicle fleet
FLEET_CORRELATIONS = (-0.32, -0.37, 0.30, 0.35, 0.26, 0.47)
TARGET_NAME = "y"


@dataclass(frozen=True)
class SyntheticSpec:
    N: int = 28
    i: int = 6
    feature_target_correlations: tuple[float, ...] = FLEET_CORRELATIONS
    noise_sd: float = 0.1
    true_effect: float = -0.2
    seed: int = 0
    seasonal_drift: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "feature_target_correlations", tuple(float(r) for r in self.feature_target_correlations)
        )
        if self.N % 2 or self.N < 4:
            raise ValueError("N must be even and at least 4")
        if len(self.feature_target_correlations) != self.i:
            raise ValueError("need one correlation per feature")
        if any(not -1 < r < 1 for r in self.feature_target_correlations):
            raise ValueError("correlations must lie strictly inside (-1, 1)")
        if not self.noise_sd > 0:
            raise ValueError("noise_sd must be > 0")

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(f"feature_{j}" for j in range(self.i))

    def expected_correlations(self) -> np.ndarray:
        return np.array(self.feature_target_correlations) / math.sqrt(1 + self.noise_sd**2)

    def covariate_r2(self) -> float:
        """Population R^2 of Y0 on the features (one-factor closed form)."""
        r = np.array(self.feature_target_correlations)
        s = float(np.sum(r**2 / (1 - r**2)))
        return s / (1 + s) / (1 + self.noise_sd**2)


@dataclass(frozen=True)
class SyntheticData:
    table: SubjectTable
    y0: np.ndarray
    y1: np.ndarray
    seasonal_drift: float = 0.0

    def observed(self, labels) -> np.ndarray:
        """Experiment-period outcomes under an A/B assignment."""
        labels = np.asarray(getattr(labels, "labels", labels))
        return np.where(labels == 1, self.y1, self.y0) + self.seasonal_drift

    def paired_estimate(self) -> float:
        """Before/after estimate on every subject switched to treatment."""
        return float(np.mean(self.y1 + self.seasonal_drift - self.y0))


def generate(spec: SyntheticSpec) -> SyntheticData:
    rng = np.random.default_rng(spec.seed)
    r = np.array(spec.feature_target_correlations)
    u = rng.standard_normal(spec.N)
    eps = rng.standard_normal((spec.N, spec.i))
    x = u[:, None] * r[None, :] + np.sqrt(1 - r**2)[None, :] * eps
    y0 = u + spec.noise_sd * rng.standard_normal(spec.N)
    y1 = y0 + spec.true_effect
    ids = [f"S{n:04d}" for n in range(spec.N)]
    table = SubjectTable.from_arrays(ids, x, spec.feature_names, y0, TARGET_NAME)
    return SyntheticData(table, y0, y1, spec.seasonal_drift)


@dataclass(frozen=True)
class BenchResult:
    replications: int
    true_effect: float
    mean_ate_random: float
    mean_ate_bmw: float
    mean_ate_paired: float
    sd_ate_random: float
    sd_ate_bmw: float
    sd_ate_paired: float
    mse_random: float
    mse_bmw: float
    mse_paired: float
    sd_reduction_pct: Optional[float]
    mse_improvement_pct: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _diff_in_means(y, labels) -> float:
    return float(y[labels == 1].mean() - y[labels == 0].mean())


def _replication(spec, r, M, master_seed, config):
    rep_seed = derive_seed(master_seed, r)
    data = generate(replace(spec, seed=derive_seed(rep_seed, 0)))
    n = spec.N
    random_split = draw_balanced_assignment(n, derive_seed(rep_seed, 1)).labels
    outcome = run_bmw(data.table, spec.feature_names, M, derive_seed(rep_seed, 2), config)
    chosen = outcome.best.assignment.labels
    return {
        "replication": r,
        "ate_random": _diff_in_means(data.observed(random_split), random_split),
        "ate_bmw": _diff_in_means(data.observed(chosen), chosen),
        "ate_paired": data.paired_estimate(),
        "delta_k": outcome.delta_k,
    }


def _pct(new: float, old: float) -> Optional[float]:
    # a baseline at round-off level means the ratio is undefined, not huge
    return 100.0 * (1.0 - new / old) if old > 1e-15 else None


def summarize(rows: Sequence[dict], true_effect: float) -> BenchResult:
    est = {k: np.array([row[f"ate_{k}"] for row in rows]) for k in ("random", "bmw", "paired")}
    sd = {k: float(np.std(v)) for k, v in est.items()}
    mse = {k: float(np.mean((v - true_effect) ** 2)) for k, v in est.items()}
    return BenchResult(
        replications=len(rows),
        true_effect=true_effect,
        mean_ate_random=float(est["random"].mean()),
        mean_ate_bmw=float(est["bmw"].mean()),
        mean_ate_paired=float(est["paired"].mean()),
        sd_ate_random=sd["random"],
        sd_ate_bmw=sd["bmw"],
        sd_ate_paired=sd["paired"],
        mse_random=mse["random"],
        mse_bmw=mse["bmw"],
        mse_paired=mse["paired"],
        sd_reduction_pct=_pct(sd["bmw"], sd["random"]),
        mse_improvement_pct=_pct(mse["bmw"], mse["paired"]),
    )


def run_benchmark(
    spec: SyntheticSpec,
    replications: int = 200,
    M: int = 500,
    master_seed: int = 0,
    fit_config: FitConfig | None = None,
    workers: int = 1,
    return_traces: bool = False,
):
    """Monte-Carlo comparison of the three estimators against the known effect.

    Standard deviations are population (ddof=0) over replications so that
    ``sd**2 + bias**2 == mse`` holds exactly. Returns the :class:`BenchResult`,
    or ``(result, per_replication_rows)`` with ``return_traces``.
    """
    if replications < 2:
        raise ValueError("replications must be >= 2")
    config = fit_config or FitConfig()
    reps = range(1, replications + 1)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda r: _replication(spec, r, M, master_seed, config), reps))
    else:
        rows = [_replication(spec, r, M, master_seed, config) for r in reps]
    result = summarize(rows, spec.true_effect)
    return (result, rows) if return_traces else result
