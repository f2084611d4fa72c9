"""Train/test splitting, regression metrics and the repeated experiment."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from ._io import atomic_write_text
from .cohort import GenerationConfig, generate
from .errors import DegenerateTargetError, ValidationError
from .rng import SplitMix64
from .ridge import RidgeConfig, RidgeModel, fit

TARGET_KINDS = ("precise", "noisy")
REPORT_HEADER = "seed,mse_precise,nmse_precise,r2_precise,mse_noisy,nmse_noisy,r2_noisy"


@dataclass(frozen=True)
class SplitSpec:
    test_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if not 0.0 < self.test_fraction < 1.0:
            raise ValidationError(f"test_fraction must lie in (0, 1), got {self.test_fraction}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


def shuffled_indices(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates permutation of ``0..n-1`` driven by SplitMix64(seed).

    For ``i = n-1 .. 1`` swap position ``i`` with ``randint(0, i)``.
    """
    perm = np.arange(n, dtype=np.int64)
    if n < 2:
        return perm
    stream = SplitMix64(seed)
    u = (stream.next64_batch(n - 1) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
    upper = np.arange(n - 1, 0, -1, dtype=np.int64)
    span = upper + 1
    js = np.minimum(np.floor(u * span).astype(np.int64), upper)
    out = perm.tolist()
    for i, j in zip(upper.tolist(), js.tolist()):
        out[i], out[j] = out[j], out[i]
    return np.array(out, dtype=np.int64)


def n_test_rows(n_rows: int, test_fraction: float) -> int:
    # round away float noise such as 0.2 * 15 = 3.0000000000000004
    return math.ceil(round(test_fraction * n_rows, 9))


def train_test_split(n_rows: int, spec: SplitSpec | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(train_idx, test_idx)``; the test set is the shuffled prefix."""
    spec = spec or SplitSpec()
    if n_rows < 2:
        raise ValidationError(f"need at least 2 rows to split, got {n_rows}")
    n_test = n_test_rows(n_rows, spec.test_fraction)
    if n_test >= n_rows:
        raise ValidationError(f"test_fraction {spec.test_fraction} leaves no training rows for n={n_rows}")
    perm = shuffled_indices(n_rows, spec.seed)
    return perm[n_test:], perm[:n_test]


def _pair(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.ndim != 1 or y_true.shape != y_pred.shape:
        raise ValidationError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.shape[0] < 1:
        raise ValidationError("metrics need at least one value")
    return y_true, y_pred


def mse(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    d = y_true - y_pred
    return float(np.mean(d * d))


def _ss_tot(y_true) -> float:
    if y_true.shape[0] < 2:
        raise DegenerateTargetError("R² needs at least two targets")
    c = y_true - y_true.mean()
    ss = float(c @ c)
    if ss == 0.0:
        raise DegenerateTargetError("R² is undefined for a constant target")
    return ss


def r2(y_true, y_pred) -> float:
    y_true, y_pred = _pair(y_true, y_pred)
    d = y_true - y_pred
    return 1.0 - float(d @ d) / _ss_tot(y_true)


def nmse(y_true, y_pred) -> float:
    """MSE divided by the (population) variance of ``y_true``; equals ``1 - r2``."""
    y_true, y_pred = _pair(y_true, y_pred)
    d = y_true - y_pred
    return float(d @ d) / _ss_tot(y_true)


@dataclass(frozen=True)
class EvalReport:
    mse: float
    r2: float
    nmse: float
    n_test: int
    target_kind: str


def score(y_true, y_pred, target_kind: str) -> EvalReport:
    if target_kind not in TARGET_KINDS:
        raise ValidationError(f"unknown target kind {target_kind!r}")
    return EvalReport(mse(y_true, y_pred), r2(y_true, y_pred), nmse(y_true, y_pred),
                      int(np.shape(y_true)[0]), target_kind)


def evaluate(model, X_test, y_test_precise, y_test_noisy) -> tuple[EvalReport, EvalReport]:
    """Score one set of predictions against both target versions."""
    y_pred = model.predict(X_test)
    return score(y_test_precise, y_pred, "precise"), score(y_test_noisy, y_pred, "noisy")


@dataclass(frozen=True)
class IterationResult:
    seed: int
    precise: EvalReport
    noisy: EvalReport

    def report(self, kind: str) -> EvalReport:
        return self.precise if kind == "precise" else self.noisy


@dataclass(frozen=True)
class ExperimentReport:
    iterations: tuple[IterationResult, ...]

    def mean(self, metric: str, kind: str = "precise") -> float:
        return float(np.mean([getattr(it.report(kind), metric) for it in self.iterations]))

    @property
    def mean_mse(self) -> float:
        return self.mean("mse")

    @property
    def mean_r2(self) -> float:
        return self.mean("r2")

    @property
    def mean_nmse(self) -> float:
        return self.mean("nmse")


def run_iteration(n_samples: int, seed: int, ridge_config: RidgeConfig | None = None,
                  test_fraction: float = 0.2) -> tuple[IterationResult, RidgeModel]:
    cohort = generate(GenerationConfig(n_samples, seed))
    train, test = train_test_split(len(cohort), SplitSpec(test_fraction, seed))
    X = cohort.features()
    model = fit(X[train], cohort.severity_noisy[train], ridge_config)
    precise, noisy = evaluate(model, X[test], cohort.severity_precise[test], cohort.severity_noisy[test])
    return IterationResult(seed, precise, noisy), model


def run_experiment(n_samples: int = 100_000, iterations: int = 10, base_seed: int = 42,
                   ridge_config: RidgeConfig | None = None, workers: int = 1) -> ExperimentReport:
    """Regenerate, split, train on noisy targets and evaluate, ``iterations`` times.

    Iteration ``k`` uses seed ``base_seed + k`` for both the cohort and the
    split. Results are ordered by ``k`` whatever ``workers`` is.
    """
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    seeds = [base_seed + k for k in range(iterations)]
    run = lambda s: run_iteration(n_samples, s, ridge_config)[0]  # noqa: E731
    if workers == 1:
        results = [run(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, seeds))
    return ExperimentReport(tuple(results))


# ---------------------------------------------------------------------------
# Report emission


def _g(x: float) -> str:
    return repr(float(x))


def report_csv(report: ExperimentReport) -> str:
    rows = [REPORT_HEADER]
    for it in report.iterations:
        p, q = it.precise, it.noisy
        rows.append(",".join([str(it.seed)] + [_g(v) for v in (p.mse, p.nmse, p.r2, q.mse, q.nmse, q.r2)]))
    means = [report.mean(m, k) for k in TARGET_KINDS for m in ("mse", "nmse", "r2")]
    rows.append(",".join(["mean"] + [_g(v) for v in means]))
    return "\n".join(rows) + "\n"


def bar_chart_svg(labels, values, title: str, y_label: str, x_label: str = "iteration (seed)") -> str:
    """Static SVG bar chart, one ``<rect class="bar">`` per value.

    Heights are linear in the value relative to the largest one; negative
    values are drawn with zero height but still labelled.
    """
    values = [float(v) for v in values]
    width, height = 640, 400
    left, right, top, bottom = 80, 20, 50, 70
    plot_w, plot_h = width - left - right, height - top - bottom
    vmax = max([v for v in values if v > 0], default=1.0)
    slot = plot_w / max(len(values), 1)
    bar_w = slot * 0.7
    base_y = top + plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
        f'<title>{escape(title)}</title>',
        f'<text x="{width / 2:.1f}" y="25" text-anchor="middle" font-size="16">{escape(title)}</text>',
        f'<line class="axis" x1="{left}" y1="{top}" x2="{left}" y2="{base_y}" stroke="black"/>',
        f'<line class="axis" x1="{left}" y1="{base_y}" x2="{left + plot_w}" y2="{base_y}" stroke="black"/>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 15}" text-anchor="middle" font-size="12">'
        f'{escape(x_label)}</text>',
        f'<text x="20" y="{top + plot_h / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 20 {top + plot_h / 2:.1f})">{escape(y_label)}</text>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end" font-size="10">{vmax:.4g}</text>',
        f'<text x="{left - 6}" y="{base_y + 4}" text-anchor="end" font-size="10">0</text>',
    ]
    for i, (label, v) in enumerate(zip(labels, values)):
        h = plot_h * max(v, 0.0) / vmax
        x = left + i * slot + (slot - bar_w) / 2
        cx = x + bar_w / 2
        parts.append(f'<rect class="bar" x="{x:.2f}" y="{base_y - h:.2f}" width="{bar_w:.2f}" '
                     f'height="{h:.2f}" fill="#4878a8"/>')
        parts.append(f'<text x="{cx:.2f}" y="{base_y - h - 4:.2f}" text-anchor="middle" '
                     f'font-size="10">{v:.4g}</text>')
        parts.append(f'<text x="{cx:.2f}" y="{base_y + 16}" text-anchor="middle" '
                     f'font-size="10">{escape(str(label))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: ExperimentReport, out_dir) -> dict[str, Path]:
    """Write ``report.csv``, ``mse.svg`` and ``r2.svg`` into ``out_dir``.

    The charts show the precise-target scores of each iteration; the MSE
    chart uses the variance-normalized MSE since raw values are of order 1e38.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = [it.seed for it in report.iterations]
    paths = {"report": out / "report.csv", "mse": out / "mse.svg", "r2": out / "r2.svg"}
    atomic_write_text(paths["report"], report_csv(report))
    atomic_write_text(paths["mse"], bar_chart_svg(
        seeds, [it.precise.nmse for it in report.iterations],
        "MSE Bar Chart", "normalized MSE (MSE / Var), precise targets"))
    atomic_write_text(paths["r2"], bar_chart_svg(
        seeds, [it.precise.r2 for it in report.iterations],
        "Coefficient of Determination Bar Chart", "R², precise targets"))
    return paths
