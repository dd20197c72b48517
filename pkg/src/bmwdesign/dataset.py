"""Subject table, CSV ingestion and pre-design validation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from bmwdesign.errors import DesignValidationError

MIN_SUBJECTS = 4


@dataclass(frozen=True)
class SubjectRecord:
    id: str
    features: tuple[float, ...]
    target: Optional[float] = None


@dataclass(frozen=True)
class SubjectTable:
    """Immutable N x i table of pre-experiment features with optional target.

    Structural invariants (unique non-empty ids, row widths, target kept out of
    the feature columns) are enforced here. Value-level problems such as
    missing entries or too few subjects are reported by
    :func:`validate_for_design` so that callers get one complete report.
    """

    subjects: tuple[SubjectRecord, ...]
    feature_names: tuple[str, ...]
    target_name: Optional[str] = None
    _matrix: np.ndarray = field(init=False, repr=False, compare=False)
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if len(set(self.feature_names)) != len(self.feature_names):
            raise ValueError("duplicate feature names")
        if self.target_name is not None and self.target_name in self.feature_names:
            raise ValueError(f"target {self.target_name!r} is also a feature column")
        seen = set()
        width = len(self.feature_names)
        for rec in self.subjects:
            if not isinstance(rec.id, str) or not rec.id.strip():
                raise ValueError("subject ids must be non-empty strings")
            if rec.id in seen:
                raise ValueError(f"duplicate subject id {rec.id!r}")
            seen.add(rec.id)
            if len(rec.features) != width:
                raise ValueError(
                    f"subject {rec.id!r} has {len(rec.features)} feature values, expected {width}"
                )
        matrix = np.array([rec.features for rec in self.subjects], dtype=float).reshape(
            len(self.subjects), width
        )
        matrix.setflags(write=False)
        object.__setattr__(self, "_matrix", matrix)
        object.__setattr__(self, "_index", {name: j for j, name in enumerate(self.feature_names)})

    @classmethod
    def from_arrays(cls, ids, features, feature_names, target=None, target_name=None):
        features = np.asarray(features, dtype=float)
        if target is not None and target_name is None:
            target_name = "target"
        records = []
        for n, sid in enumerate(ids):
            t = None if target is None else float(target[n])
            records.append(SubjectRecord(str(sid), tuple(float(v) for v in features[n]), t))
        return cls(tuple(records), tuple(feature_names), target_name)

    @property
    def n(self) -> int:
        return len(self.subjects)

    @property
    def ids(self) -> list[str]:
        return [rec.id for rec in self.subjects]

    def columns(self, names: Sequence[str]) -> np.ndarray:
        """Feature matrix restricted to ``names`` (N x len(names), read-only copy)."""
        try:
            idx = [self._index[name] for name in names]
        except KeyError as exc:
            raise KeyError(f"unknown feature {exc.args[0]!r}") from None
        return self._matrix[:, idx]

    def target_values(self) -> np.ndarray:
        if self.target_name is None:
            raise ValueError("table has no target column")
        return np.array(
            [np.nan if rec.target is None else rec.target for rec in self.subjects], dtype=float
        )

    def with_target(self, values: Iterable[float], target_name: str) -> "SubjectTable":
        recs = tuple(
            SubjectRecord(rec.id, rec.features, float(v)) for rec, v in zip(self.subjects, values)
        )
        return SubjectTable(recs, self.feature_names, target_name)


@dataclass(frozen=True)
class Issue:
    code: str
    message: str

    def __str__(self):
        return f"{self.code}: {self.message}"


@dataclass
class ValidationReport:
    errors: list[Issue] = field(default_factory=list)
    warnings: list[Issue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def raise_for_errors(self):
        if self.errors:
            raise DesignValidationError(self)

    def codes(self) -> set[str]:
        return {i.code for i in self.errors} | {i.code for i in self.warnings}

    def to_dict(self) -> dict:
        return {
            "errors": [{"code": i.code, "message": i.message} for i in self.errors],
            "warnings": [{"code": i.code, "message": i.message} for i in self.warnings],
        }


def validate_for_design(
    table: SubjectTable, chosen_features: Sequence[str], target: Optional[str] = None
) -> ValidationReport:
    """Check that ``table`` can be partitioned on ``chosen_features``.

    Errors: target among the chosen features, odd N, N < 4, unknown or
    duplicated feature names, missing/non-finite values, no features.
    Warnings: constant features (dropped from the propensity model) and a
    feature count of at least N/4.
    """
    report = ValidationReport()
    target = table.target_name if target is None else target
    n = table.n
    chosen = list(chosen_features)

    if not chosen:
        report.errors.append(Issue("no_features", "at least one feature must be chosen"))
    if target is not None and target in chosen:
        report.errors.append(
            Issue(
                "target_in_features",
                f"target in features: {target!r} must not be used in the propensity model",
            )
        )
    dupes = sorted({f for f in chosen if chosen.count(f) > 1})
    if dupes:
        report.errors.append(Issue("duplicate_feature", f"features listed twice: {dupes}"))
    if n % 2:
        report.errors.append(Issue("odd_n", f"N must be even for an N/2 split, got N={n}"))
    if n < MIN_SUBJECTS:
        report.errors.append(
            Issue("too_few_subjects", f"N must be at least {MIN_SUBJECTS}, got N={n}")
        )

    known = [f for f in chosen if f in table.feature_names and f != target]
    unknown = [f for f in chosen if f not in table.feature_names and f != target]
    if unknown:
        report.errors.append(Issue("unknown_feature", f"unknown feature names: {unknown}"))

    if known and n:
        block = table.columns(known)
        bad = ~np.isfinite(block)
        if bad.any():
            rows, cols = np.nonzero(bad)
            where = ", ".join(
                f"{table.subjects[r].id}/{known[c]}" for r, c in list(zip(rows, cols))[:10]
            )
            report.errors.append(
                Issue("non_finite", f"{int(bad.sum())} missing or non-finite values ({where})")
            )
        else:
            for j, name in enumerate(known):
                col = block[:, j]
                if col.max() == col.min():
                    report.warnings.append(
                        Issue(
                            "constant_feature",
                            f"feature {name!r} is constant and is excluded from the propensity model",
                        )
                    )

    if chosen and n and len(chosen) >= n / 4:
        report.warnings.append(
            Issue(
                "many_features",
                f"{len(chosen)} features for N={n} subjects; consider starting with fewer",
            )
        )
    return report


def _parse_float(text: str) -> float:
    text = text.strip()
    if not text:
        return math.nan
    try:
        return float(text)
    except ValueError:
        return math.nan


def load_csv(path, target: Optional[str] = None) -> SubjectTable:
    """Read a subject table: first column ``id``, remaining columns numeric.

    Empty or non-numeric cells load as NaN and are flagged by validation.
    ``target``, when given, must name one of the header columns; it is stored
    separately from the features.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if not header or header[0] != "id":
            raise ValueError(f"{path}: first column must be 'id'")
        columns = header[1:]
        if target is not None and target not in columns:
            raise ValueError(f"{path}: target column {target!r} not found")
        t_idx = columns.index(target) if target is not None else None
        feature_names = tuple(c for k, c in enumerate(columns) if k != t_idx)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = [_parse_float(cell) for cell in row[1:]]
            tval = values[t_idx] if t_idx is not None else None
            feats = tuple(v for k, v in enumerate(values) if k != t_idx)
            records.append(SubjectRecord(row[0].strip(), feats, tval))
    return SubjectTable(tuple(records), feature_names, target)


def write_csv(table: SubjectTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["id", *table.feature_names]
        if table.target_name is not None:
            header.append(table.target_name)
        writer.writerow(header)
        for rec in table.subjects:
            row = [rec.id, *(repr(float(v)) for v in rec.features)]
            if table.target_name is not None:
                row.append(repr(float(rec.target)))
            writer.writerow(row)
