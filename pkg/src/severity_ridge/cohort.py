"""Synthetic infant cohorts: weight tables, severity index, generation and CSV I/O.

A cohort is stored column-wise (:class:`Cohort`) because the default size
is a million rows; it still behaves as a sequence of :class:`LabeledSample`
for code that wants one record at a time.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._io import atomic_write_text
from .errors import ParseError, ValidationError
from .rng import SplitMix64, StreamArray

MAX_AGE = 24
MAX_VIRIONS = 10 ** 10
NOISE_BOUND = 1e-4
DEFAULT_N_SAMPLES = 1_000_000

X_HEADER = "Weight,Age,Virion Count,Gender"
Y_HEADER = "Severity"


class Sex(enum.IntEnum):
    MALE = 0
    FEMALE = 1


@dataclass(frozen=True)
class WeightTables:
    """Sex-specific high/low weight bounds in kg, indexed by age in months."""

    male_high: tuple[float, ...]
    male_low: tuple[float, ...]
    female_high: tuple[float, ...]
    female_low: tuple[float, ...]

    def __post_init__(self):
        for name in ("male_high", "male_low", "female_high", "female_low"):
            seq = tuple(float(w) for w in getattr(self, name))
            object.__setattr__(self, name, seq)
            if len(seq) != MAX_AGE + 1:
                raise ValidationError(f"{name} must have {MAX_AGE + 1} entries, got {len(seq)}")
            if min(seq) <= 0:
                raise ValidationError(f"{name} entries must be positive")
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise ValidationError(f"{name} must be strictly increasing in age")
        for hi, lo, sex in ((self.male_high, self.male_low, "male"),
                            (self.female_high, self.female_low, "female")):
            if any(h <= l for h, l in zip(hi, lo)):
                raise ValidationError(f"{sex} high bound must exceed low bound at every age")

    def bounds(self, sex: int) -> tuple[np.ndarray, np.ndarray]:
        if Sex(sex) is Sex.MALE:
            return np.array(self.male_high), np.array(self.male_low)
        return np.array(self.female_high), np.array(self.female_low)


TABLES = WeightTables(
    male_high=(3.9, 5.1, 6.3, 7.2, 7.9, 8.4, 8.9, 9.3, 9.6, 10.0, 10.3, 10.5,
               10.8, 11.1, 11.3, 11.6, 11.8, 12.0, 12.3, 12.5, 12.7, 13.0, 13.2, 13.4, 13.7),
    male_low=(2.9, 3.9, 4.9, 5.6, 6.2, 6.7, 7.1, 7.4, 7.7, 7.9, 8.2, 8.4, 8.6,
              8.8, 9.0, 9.2, 9.4, 9.6, 9.7, 9.9, 10.1, 10.3, 10.5, 10.6, 10.8),
    female_high=(3.7, 4.8, 5.9, 6.7, 7.3, 7.8, 8.3, 8.7, 9.0, 9.3, 9.6, 9.9, 10.2,
                 10.4, 10.7, 10.9, 11.2, 11.4, 11.6, 11.9, 12.1, 12.4, 12.6, 12.8, 13.1),
    female_low=(2.9, 3.6, 4.5, 5.1, 5.6, 6.1, 6.4, 6.7, 7.0, 7.3, 7.5, 7.7, 7.9,
                8.1, 8.3, 8.5, 8.7, 8.8, 9.0, 9.2, 9.4, 9.6, 9.8, 9.9, 10.1),
)

# (high + low) lookup by [sex, age]; weight is drawn from [0, this)
_WEIGHT_SPAN = np.array([
    np.add(TABLES.male_high, TABLES.male_low),
    np.add(TABLES.female_high, TABLES.female_low),
])


@dataclass(frozen=True)
class PatientRecord:
    age_months: int
    sex: Sex
    weight_kg: float
    virion_count: int

    def __post_init__(self):
        if not 0 <= self.age_months <= MAX_AGE:
            raise ValidationError(f"age_months must be in 0..{MAX_AGE}, got {self.age_months}")
        object.__setattr__(self, "sex", Sex(self.sex))
        if not (math.isfinite(self.weight_kg) and self.weight_kg >= 0):
            raise ValidationError(f"weight_kg must be a finite nonnegative number, got {self.weight_kg}")
        if not 1 <= self.virion_count <= MAX_VIRIONS:
            raise ValidationError(f"virion_count must be in 1..1e10, got {self.virion_count}")


@dataclass(frozen=True)
class LabeledSample:
    record: PatientRecord
    severity_precise: float
    severity_noisy: float


@dataclass(frozen=True)
class GenerationConfig:
    n_samples: int = DEFAULT_N_SAMPLES
    master_seed: int = 42

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValidationError(f"n_samples must be a positive integer, got {self.n_samples}")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ValidationError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")


def _check_age(age) -> None:
    a = np.asarray(age)
    if np.any((a < 0) | (a > MAX_AGE)):
        raise ValidationError(f"age_months must be in 0..{MAX_AGE}")


def acceptable_weight(sex, age_months):
    """Midpoint of the high and low table weights for ``sex`` at ``age_months``.

    Accepts scalars or aligned integer arrays.
    """
    _check_age(age_months)
    span = _WEIGHT_SPAN[np.asarray(sex, dtype=np.int64), np.asarray(age_months, dtype=np.int64)]
    out = span / 2
    return float(out) if np.ndim(out) == 0 else out


def severity_index(age_months, sex, weight_kg, virion_count):
    """Vectorized severity index.

    ``(1 - age/24) * v + |(w* - w) / w*| * v**2`` where ``w*`` is the
    acceptable weight and ``v`` the virion count, in double precision.
    """
    age = np.asarray(age_months, dtype=np.float64)
    w_star = acceptable_weight(sex, age_months)
    v = np.asarray(virion_count, dtype=np.float64)
    age_coeff = 1.0 - age / 24.0
    weight_coeff = np.abs((w_star - np.asarray(weight_kg, dtype=np.float64)) / w_star)
    out = age_coeff * v + weight_coeff * (v * v)
    return float(out) if np.ndim(out) == 0 else out


def severity(record: PatientRecord) -> float:
    return severity_index(record.age_months, int(record.sex), record.weight_kg, record.virion_count)


def apply_variance(value, u):
    """Scale ``value`` by ``1 + u`` with ``|u| <= 1e-4``."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any(np.abs(u_arr) > NOISE_BOUND) or not np.all(np.isfinite(u_arr)):
        raise ValidationError(f"variance draw must lie in [-{NOISE_BOUND}, {NOISE_BOUND}]")
    out = np.asarray(value, dtype=np.float64) * (1.0 + u_arr)
    return float(out) if np.ndim(out) == 0 else out


def sample_record(stream: SplitMix64) -> tuple[PatientRecord, float]:
    """Draw one record and its variance draw from ``stream``.

    Draw order: age, virion count, sex, weight, variance.
    """
    age = stream.randint(0, MAX_AGE)
    virions = stream.randint(1, MAX_VIRIONS)
    sex = stream.randint(0, 1)
    weight = stream.uniform(0.0, float(_WEIGHT_SPAN[sex, age]))
    u = stream.uniform(-NOISE_BOUND, NOISE_BOUND)
    return PatientRecord(age, Sex(sex), weight, virions), u


class Cohort(Sequence):
    """Column-oriented labeled cohort.

    Attributes
    ----------
    age, sex, virion_count : ndarray of int64
    weight, severity_precise, severity_noisy : ndarray of float64
    """

    def __init__(self, age, sex, weight, virion_count, severity_precise, severity_noisy):
        self.age = np.asarray(age, dtype=np.int64)
        self.sex = np.asarray(sex, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.virion_count = np.asarray(virion_count, dtype=np.int64)
        self.severity_precise = np.asarray(severity_precise, dtype=np.float64)
        self.severity_noisy = np.asarray(severity_noisy, dtype=np.float64)
        n = self.age.shape[0]
        for col in (self.sex, self.weight, self.virion_count,
                    self.severity_precise, self.severity_noisy):
            if col.shape != (n,):
                raise ValidationError("cohort columns must be 1-D and equally long")

    @classmethod
    def from_samples(cls, samples) -> "Cohort":
        samples = list(samples)
        return cls(
            [s.record.age_months for s in samples],
            [int(s.record.sex) for s in samples],
            [s.record.weight_kg for s in samples],
            [s.record.virion_count for s in samples],
            [s.severity_precise for s in samples],
            [s.severity_noisy for s in samples],
        )

    def __len__(self) -> int:
        return self.age.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            idx = np.arange(len(self))[i]
            return self.take(idx)
        rec = PatientRecord(int(self.age[i]), Sex(int(self.sex[i])),
                            float(self.weight[i]), int(self.virion_count[i]))
        return LabeledSample(rec, float(self.severity_precise[i]), float(self.severity_noisy[i]))

    def __eq__(self, other):
        if not isinstance(other, Cohort):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self._columns(), other._columns()))

    def _columns(self):
        return (self.age, self.sex, self.weight, self.virion_count,
                self.severity_precise, self.severity_noisy)

    def take(self, indices) -> "Cohort":
        return Cohort(*(c[indices] for c in self._columns()))

    def features(self) -> np.ndarray:
        """Design matrix with columns weight, age, virion count, gender."""
        return np.column_stack([self.weight, self.age, self.virion_count, self.sex]).astype(np.float64)

    def targets(self, kind: str = "noisy") -> np.ndarray:
        if kind == "precise":
            return self.severity_precise
        if kind == "noisy":
            return self.severity_noisy
        raise ValidationError(f"unknown target kind {kind!r}")


def _generate_block(master_seed: int, start: int, stop: int) -> tuple[np.ndarray, ...]:
    streams = StreamArray.for_items(master_seed, start, stop)
    age = streams.randint(0, MAX_AGE)
    virions = streams.randint(1, MAX_VIRIONS)
    sex = streams.randint(0, 1)
    weight = streams.uniform(0.0, _WEIGHT_SPAN[sex, age])
    u = streams.uniform(-NOISE_BOUND, NOISE_BOUND)
    precise = severity_index(age, sex, weight, virions)
    return age, sex, weight, virions, precise, apply_variance(precise, u)


def generate(config: GenerationConfig, workers: int = 1, block_size: int = 65536) -> Cohort:
    """Generate ``config.n_samples`` labeled samples.

    Sample ``i`` comes from its own stream seeded with
    ``master_seed ^ (i * 0x9E3779B97F4A7C15)``, so the output does not depend
    on ``workers`` or ``block_size``.
    """
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    n = config.n_samples
    edges = list(range(0, n, block_size)) + [n]
    spans = list(zip(edges[:-1], edges[1:]))
    if workers == 1:
        blocks = [_generate_block(config.master_seed, a, b) for a, b in spans]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda ab: _generate_block(config.master_seed, *ab), spans))
    return Cohort(*(np.concatenate(cols) for cols in zip(*blocks)))


# ---------------------------------------------------------------------------
# CSV I/O


def _fmt(x: float) -> str:
    # repr is the shortest string that round-trips, at most 17 significant digits
    return repr(float(x))


def write_dataset(cohort: Cohort, x_path, y_precise_path, y_noisy_path) -> None:
    """Write the features and both target columns as three CSV files."""
    if not isinstance(cohort, Cohort):
        cohort = Cohort.from_samples(cohort)
    atomic_write_text(x_path, format_features(cohort.weight, cohort.age, cohort.virion_count, cohort.sex))
    for path, col in ((y_precise_path, cohort.severity_precise), (y_noisy_path, cohort.severity_noisy)):
        atomic_write_text(path, format_targets(col))


def format_features(weight, age, virion_count, sex) -> str:
    lines = [X_HEADER]
    lines.extend(f"{_fmt(w)},{int(a)},{int(v)},{int(s)}"
                 for w, a, v, s in zip(weight.tolist(), age.tolist(), virion_count.tolist(), sex.tolist()))
    return "\n".join(lines) + "\n"


def format_targets(values) -> str:
    return Y_HEADER + "\n" + "".join(_fmt(v) + "\n" for v in np.asarray(values).tolist())


def _read_lines(path) -> list[str]:
    text = Path(path).read_text()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_number(cell: str, kind, path, line: int, column: str):
    try:
        value = kind(cell)
    except ValueError:
        raise ParseError(path, line, column, f"non-numeric value {cell!r}") from None
    if kind is float and not math.isfinite(value):
        raise ParseError(path, line, column, f"non-finite value {cell!r}")
    return value


def read_features(x_path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Parse an X file into (weight, age, virion_count, sex) arrays."""
    lines = _read_lines(x_path)
    if not lines or lines[0] != X_HEADER:
        got = lines[0] if lines else "<empty file>"
        raise ParseError(x_path, 1, None, f"expected header {X_HEADER!r}, got {got!r}")
    names = X_HEADER.split(",")
    kinds = (float, int, int, int)
    cols: list[list] = [[], [], [], []]
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 4:
            raise ParseError(x_path, lineno, None, f"expected 4 columns, got {len(cells)}")
        for j, (cell, kind) in enumerate(zip(cells, kinds)):
            cols[j].append(_parse_number(cell, kind, x_path, lineno, names[j]))
    weight, age, virions, sex = cols
    return (np.array(weight, dtype=np.float64), np.array(age, dtype=np.int64),
            np.array(virions, dtype=np.int64), np.array(sex, dtype=np.int64))


def read_targets(y_path) -> np.ndarray:
    lines = _read_lines(y_path)
    if not lines or lines[0] != Y_HEADER:
        got = lines[0] if lines else "<empty file>"
        raise ParseError(y_path, 1, None, f"expected header {Y_HEADER!r}, got {got!r}")
    vals = []
    for lineno, line in enumerate(lines[1:], start=2):
        if "," in line:
            raise ParseError(y_path, lineno, None, "expected a single column")
        vals.append(_parse_number(line, float, y_path, lineno, Y_HEADER))
    return np.array(vals, dtype=np.float64)


def read_dataset(x_path, y_precise_path, y_noisy_path) -> Cohort:
    weight, age, virions, sex = read_features(x_path)
    ys = {}
    for path in (y_precise_path, y_noisy_path):
        y = read_targets(path)
        if y.shape[0] != age.shape[0]:
            short = min(y.shape[0], age.shape[0])
            raise ParseError(path, short + 2, Y_HEADER,
                             f"row count {y.shape[0]} does not match {x_path} ({age.shape[0]} rows)")
        ys[path] = y
    return Cohort(age, sex, weight, virions, ys[y_precise_path], ys[y_noisy_path])
