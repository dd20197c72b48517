"""Min-max scaling of feature columns to [0, 1]."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ScalingClampWarning(UserWarning):
    """Values fell outside the fitted range and were clamped into [0, 1]."""


@dataclass(frozen=True)
class ScalingParams:
    features: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]
    excluded_features: tuple[str, ...] = ()

    def __post_init__(self):
        for name, lo, hi in zip(self.features, self.mins, self.maxs):
            if not hi > lo:
                raise ValueError(f"retained feature {name!r} needs max > min")

    @property
    def retained(self) -> tuple[str, ...]:
        return self.features

    def to_dict(self) -> dict:
        return {
            "features": list(self.features),
            "min": list(self.mins),
            "max": list(self.maxs),
            "excluded_features": list(self.excluded_features),
        }


def fit_minmax(table, features: Sequence[str]) -> ScalingParams:
    """Record per-column min and max; zero-range columns go to ``excluded_features``."""
    block = table.columns(list(features))
    keep, mins, maxs, dropped = [], [], [], []
    for j, name in enumerate(features):
        lo, hi = float(block[:, j].min()), float(block[:, j].max())
        if hi > lo:
            keep.append(name)
            mins.append(lo)
            maxs.append(hi)
        else:
            dropped.append(name)
    return ScalingParams(tuple(keep), tuple(mins), tuple(maxs), tuple(dropped))


def scale_values(values, lo: float, hi: float, *, warn_name: str | None = None) -> np.ndarray:
    """Map ``values`` through ``(v - lo) / (hi - lo)`` and clamp into [0, 1]."""
    out = (np.asarray(values, dtype=float) - lo) / (hi - lo)
    outside = (out < 0.0) | (out > 1.0)
    if outside.any():
        warnings.warn(
            f"{int(outside.sum())} value(s) of {warn_name or 'column'} outside fitted range "
            f"[{lo}, {hi}] clamped",
            ScalingClampWarning,
            stacklevel=3,
        )
        out = np.clip(out, 0.0, 1.0)
    return out


def apply_minmax(params: ScalingParams, table) -> np.ndarray:
    """Scaled N x len(params.retained) matrix; excluded features are dropped."""
    block = table.columns(list(params.features))
    out = np.empty_like(block, dtype=float)
    for j, (name, lo, hi) in enumerate(zip(params.features, params.mins, params.maxs)):
        out[:, j] = scale_values(block[:, j], lo, hi, warn_name=repr(name))
    return out
