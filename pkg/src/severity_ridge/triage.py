"""Coarse priority groups from severity quantiles."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import ParseError, ValidationError

DEFAULT_LABELS = {1: ("all",), 2: ("low", "high"), 3: ("low", "medium", "high")}
PLAN_HEADER = "threshold,label_below"


class TriageWarning(UserWarning):
    pass


def default_labels(k: int) -> tuple[str, ...]:
    return DEFAULT_LABELS.get(k, tuple(f"group{j + 1}" for j in range(k)))


@dataclass(frozen=True)
class TriagePlan:
    """Bucket ``j`` holds severities in ``(thresholds[j-1], thresholds[j]]``.

    The first bucket is unbounded below and the last unbounded above.
    """

    thresholds: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        t = tuple(float(x) for x in self.thresholds)
        object.__setattr__(self, "thresholds", t)
        object.__setattr__(self, "labels", tuple(self.labels))
        if not all(math.isfinite(x) for x in t):
            raise ValidationError("thresholds must be finite")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValidationError(f"thresholds must be strictly ascending: {t}")
        if len(self.labels) != len(t) + 1:
            raise ValidationError(f"need {len(t) + 1} labels for {len(t)} thresholds, got {len(self.labels)}")

    @property
    def k(self) -> int:
        return len(self.labels)

    def bucket(self, severity) -> np.ndarray | int:
        """Bucket index (0-based) for a scalar or array of severities."""
        s = np.asarray(severity, dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise ValidationError("severity must be finite")
        idx = np.searchsorted(np.asarray(self.thresholds), s, side="left")
        return int(idx) if idx.ndim == 0 else idx

    def assign(self, severity) -> str:
        return self.labels[self.bucket(float(severity))]

    def assign_many(self, severities) -> list[str]:
        return [self.labels[j] for j in np.atleast_1d(self.bucket(severities)).tolist()]


def nearest_rank(sorted_values: np.ndarray, q: float) -> float:
    """Nearest-rank quantile: the value of rank ``ceil(q * n)`` (1-based)."""
    n = sorted_values.shape[0]
    rank = max(1, math.ceil(round(q * n, 9)))
    return float(sorted_values[rank - 1])


def build_plan(severities, k: int = 3, labels=None) -> TriagePlan:
    """Thresholds at the nearest-rank ``j/k`` quantiles, ``j = 1..k-1``.

    Equal quantiles are merged (with a :class:`TriageWarning`), which
    lowers the number of buckets.
    """
    if int(k) != k or k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")
    s = np.asarray(severities, dtype=np.float64).ravel()
    if s.shape[0] == 0:
        raise ValidationError("cannot build a triage plan from no severities")
    if not np.all(np.isfinite(s)):
        raise ValidationError("severities must be finite")
    s = np.sort(s)
    raw = [nearest_rank(s, j / k) for j in range(1, k)]
    thresholds = sorted(set(raw))
    if len(thresholds) < len(raw):
        warnings.warn(f"duplicate quantile thresholds collapsed: k reduced from {k} to {len(thresholds) + 1}",
                      TriageWarning, stacklevel=2)
    k_eff = len(thresholds) + 1
    if labels is None or len(labels) != k_eff:
        labels = default_labels(k_eff)
    return TriagePlan(tuple(thresholds), tuple(labels))


def assign(plan: TriagePlan, severity) -> str:
    return plan.assign(severity)


def dump_plan(plan: TriagePlan) -> str:
    rows = [PLAN_HEADER]
    rows += [f"{t!r},{label}" for t, label in zip(plan.thresholds, plan.labels)]
    rows.append(f"inf,{plan.labels[-1]}")
    return "\n".join(rows) + "\n"


def save_plan(plan: TriagePlan, path) -> None:
    atomic_write_text(path, dump_plan(plan))


def load_plan(path) -> TriagePlan:
    lines = [ln for ln in Path(path).read_text().split("\n") if ln.strip()]
    if not lines or lines[0] != PLAN_HEADER:
        raise ParseError(path, 1, None, f"expected header {PLAN_HEADER!r}")
    thresholds, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        cell, sep, label = line.partition(",")
        if not sep or not label:
            raise ParseError(path, lineno, None, "expected 'threshold,label'")
        try:
            t = float(cell)
        except ValueError:
            raise ParseError(path, lineno, "threshold", f"non-numeric value {cell!r}") from None
        labels.append(label)
        if math.isinf(t) and t > 0:
            if lineno != len(lines):
                raise ParseError(path, lineno, "threshold", "'inf' row must be last")
            break
        thresholds.append(t)
    else:
        raise ParseError(path, len(lines), "threshold", "missing final 'inf' row")
    return TriagePlan(tuple(thresholds), tuple(labels))
