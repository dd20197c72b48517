"""One-to-one matching of control to treatment subjects on propensity scores.

Pair distance is ``|rho_control - rho_treatment|``; the total distance of a
pairing is the sum over its pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

ORACLE_MAX_SIZE = 10


@dataclass(frozen=True)
class MatchPairing:
    pairs: tuple[tuple[str, str, float], ...]
    total_distance: float

    def to_list(self) -> list[dict]:
        return [{"control_id": c, "treatment_id": t, "delta": d} for c, t, d in self.pairs]


def _split(scores: Sequence[tuple[str, float]]):
    ids = [str(s[0]) for s in scores]
    values = np.array([float(s[1]) for s in scores], dtype=float)
    return ids, values


def greedy_pairs(control: np.ndarray, treatment: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index form of :func:`greedy_match`.

    Returns ``(treatment_index_for_control, distance_for_control)``.
    """
    k = control.shape[0]
    dist = np.abs(control[:, None] - treatment[None, :])
    # stable sort on row-major flattening breaks ties by (control, treatment) index
    order = np.argsort(dist, axis=None, kind="stable")
    rows, cols = np.divmod(order, k)
    used_c = np.zeros(k, dtype=bool)
    used_t = np.zeros(k, dtype=bool)
    match = np.empty(k, dtype=np.intp)
    matched = 0
    for r, c in zip(rows.tolist(), cols.tolist()):
        if used_c[r] or used_t[c]:
            continue
        used_c[r] = used_t[c] = True
        match[r] = c
        matched += 1
        if matched == k:
            break
    return match, dist[np.arange(k), match]


def _as_pairing(c_ids, t_ids, match, deltas) -> MatchPairing:
    pairs = tuple((c_ids[r], t_ids[int(match[r])], float(deltas[r])) for r in range(len(c_ids)))
    return MatchPairing(pairs, float(np.sum(deltas)))


def _check(c_vals, t_vals):
    if c_vals.shape[0] != t_vals.shape[0]:
        raise ValueError(
            f"control and treatment sizes differ ({c_vals.shape[0]} vs {t_vals.shape[0]})"
        )
    if c_vals.shape[0] == 0:
        raise ValueError("nothing to match")


def greedy_match(control_scores, treatment_scores) -> MatchPairing:
    """Greedy full matching without replacement.

    Repeatedly takes the globally smallest remaining control/treatment
    distance and removes both subjects, until everyone is matched.
    """
    c_ids, c_vals = _split(control_scores)
    t_ids, t_vals = _split(treatment_scores)
    _check(c_vals, t_vals)
    match, deltas = greedy_pairs(c_vals, t_vals)
    return _as_pairing(c_ids, t_ids, match, deltas)


def optimal_match_oracle(control_scores, treatment_scores) -> MatchPairing:
    """Exhaustive minimum-total-distance bijection; test harness only (size <= 10)."""
    c_ids, c_vals = _split(control_scores)
    t_ids, t_vals = _split(treatment_scores)
    _check(c_vals, t_vals)
    k = c_vals.shape[0]
    if k > ORACLE_MAX_SIZE:
        raise ValueError(f"oracle limited to {ORACLE_MAX_SIZE} subjects per group, got {k}")
    dist = np.abs(c_vals[:, None] - t_vals[None, :]).tolist()
    rows = range(k)
    best, best_perm = None, None
    for perm in itertools.permutations(rows):
        total = sum(dist[r][perm[r]] for r in rows)
        if best is None or total < best:
            best, best_perm = total, perm
    match = np.array(best_perm)
    deltas = np.array([dist[r][best_perm[r]] for r in rows])
    return _as_pairing(c_ids, t_ids, match, deltas)
