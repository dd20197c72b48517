"""The repeated-randomization balanced design and its M sweep.

Each repetition ``m`` draws a fresh balanced assignment from a stream seeded
with ``derive_seed(master_seed, m)``, fits the propensity model on the scaled
features against those labels, greedily matches control to treatment scores
and records the total distance. The repetition with the smallest total
distance wins (ties go to the smallest ``m``). Because every repetition owns
its seed and the reduction is ordered by ``(delta_k, m)``, serial and
threaded runs give identical results.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from bmwdesign.dataset import SubjectTable, validate_for_design
from bmwdesign.matching import MatchPairing, _as_pairing, greedy_pairs
from bmwdesign.propensity import FitConfig, PropensityFit, fit_logistic
from bmwdesign.scaling import ScalingParams, apply_minmax, fit_minmax

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1
DEFAULT_GRID = (1, *range(10, 1001, 10))


def derive_seed(master_seed: int, m: int) -> int:
    """SplitMix64 finalizer applied to ``master_seed + (m + 1) * golden_gamma``."""
    z = (int(master_seed) + (int(m) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class AssignmentVector:
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int8)
        if labels.ndim != 1 or labels.size % 2 or not np.all((labels == 0) | (labels == 1)):
            raise ValueError("labels must be an even-length 0/1 vector")
        if int(labels.sum()) != labels.size // 2:
            raise ValueError("assignment must put exactly N/2 subjects in each group")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def treatment(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 1)

    @property
    def control(self) -> np.ndarray:
        return np.flatnonzero(self.labels == 0)

    def groups(self) -> list[str]:
        """Group letters per subject: ``A`` for control, ``B`` for treatment."""
        return ["B" if v else "A" for v in self.labels.tolist()]

    def __eq__(self, other):
        return isinstance(other, AssignmentVector) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())


def draw_balanced_assignment(n: int, stream_seed: int) -> AssignmentVector:
    """Uniform balanced assignment: seeded shuffle of a half-ones vector."""
    if n % 2 or n < 2:
        raise ValueError(f"N must be a positive even number, got {n}")
    base = np.zeros(n, dtype=np.int8)
    base[: n // 2] = 1
    rng = np.random.default_rng(stream_seed)
    return AssignmentVector(rng.permutation(base))


@dataclass(frozen=True)
class RepetitionRecord:
    m: int
    delta_k: float
    assignment: AssignmentVector
    pairing: MatchPairing
    fit_converged: bool
    fit: Optional[PropensityFit] = None


@dataclass(frozen=True)
class DesignOutcome:
    best: RepetitionRecord
    trace: tuple[tuple[int, float], ...]
    M: int
    master_seed: int
    features: tuple[str, ...]
    scaling: ScalingParams
    nonconverged: int = 0

    @property
    def delta_k(self) -> float:
        return self.best.delta_k


def _prepare(table: SubjectTable, features: Sequence[str]):
    report = validate_for_design(table, features)
    report.raise_for_errors()
    for issue in report.warnings:
        log.warning("%s", issue)
    params = fit_minmax(table, features)
    return report, params, apply_minmax(params, table)


def _one_repetition(x, n, master_seed, m, config):
    assignment = draw_balanced_assignment(n, derive_seed(master_seed, m))
    fit = fit_logistic(x, assignment.labels, config)
    c_idx, t_idx = assignment.control, assignment.treatment
    match, deltas = greedy_pairs(fit.scores[c_idx], fit.scores[t_idx])
    return float(deltas.sum()), assignment, fit, match, deltas


def _run_stream(x, n, master_seed, M, config, workers):
    """Total distances for repetitions 1..M, plus the winning repetition's details."""
    def chunk(lo, hi):
        totals = np.empty(hi - lo)
        best = None
        bad = 0
        for m in range(lo, hi):
            dk, assignment, fit, match, deltas = _one_repetition(x, n, master_seed, m, config)
            totals[m - lo] = dk
            bad += not fit.converged
            if best is None or dk < best[0]:
                best = (dk, m, assignment, fit, match, deltas)
        return lo, totals, best, bad

    if workers and workers > 1 and M > 1:
        bounds = np.linspace(1, M + 1, min(workers, M) + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: chunk(*b), zip(bounds[:-1], bounds[1:])))
    else:
        parts = [chunk(1, M + 1)]

    totals = np.concatenate([p[1] for p in sorted(parts, key=lambda p: p[0])])
    best = min((p[2] for p in parts), key=lambda b: (b[0], b[1]))
    return totals, best, sum(p[3] for p in parts)


def run_bmw(
    table: SubjectTable,
    features: Sequence[str],
    M: int = 1000,
    master_seed: int = 0,
    fit_config: FitConfig | None = None,
    workers: int = 1,
) -> DesignOutcome:
    """Run ``M`` repetitions and keep the one with the smallest total distance."""
    if M < 1:
        raise ValueError("M must be >= 1")
    features = tuple(features)
    config = fit_config or FitConfig()
    _, params, x = _prepare(table, features)
    totals, best, bad = _run_stream(x, table.n, master_seed, M, config, workers)
    if bad:
        log.info("%d of %d propensity fits did not converge", bad, M)

    dk, m, assignment, fit, match, deltas = best
    ids = table.ids
    c_ids = [ids[i] for i in assignment.control]
    t_ids = [ids[i] for i in assignment.treatment]
    pairing = _as_pairing(c_ids, t_ids, match, deltas)
    record = RepetitionRecord(m, dk, assignment, pairing, fit.converged, fit)
    running = np.minimum.accumulate(totals)
    trace = tuple((i + 1, float(v)) for i, v in enumerate(running))
    return DesignOutcome(record, trace, M, int(master_seed), features, params, bad)


@dataclass(frozen=True)
class SweepResult:
    points: tuple[tuple[int, float], ...]
    elbow: Optional[int]
    epsilon: float


def find_elbow(points: Sequence[tuple[int, float]], epsilon: float = 0.01) -> Optional[int]:
    """Smallest grid M from which every step's improvement, relative to the
    first grid value, stays below ``epsilon``. ``None`` if the curve never
    settles."""
    if not points:
        raise ValueError("empty grid")
    if len(points) == 1:
        return points[0][0]
    base = points[0][1]
    elbow = None
    for (_, prev), (M, cur) in zip(points[:-1], points[1:]):
        rel = (prev - cur) / base if base > 0 else 0.0
        if rel < epsilon:
            if elbow is None:
                elbow = M
        else:
            elbow = None
    return elbow


def sweep_M(
    table: SubjectTable,
    features: Sequence[str],
    grid: Sequence[int] = DEFAULT_GRID,
    master_seed: int = 0,
    fit_config: FitConfig | None = None,
    epsilon: float = 0.01,
    workers: int = 1,
) -> SweepResult:
    """Running minimum of one repetition stream read off at each grid point."""
    grid = [int(g) for g in grid]
    if not grid:
        raise ValueError("empty grid")
    if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing positive integers")
    outcome = run_bmw(table, features, grid[-1], master_seed, fit_config, workers)
    running = dict(outcome.trace)
    points = tuple((M, running[M]) for M in grid)
    return SweepResult(points, find_elbow(points, epsilon), epsilon)
