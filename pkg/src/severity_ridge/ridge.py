"""Bayesian ridge regression fitted by evidence maximization.

The model is ``y = X w + b + eps`` with noise precision ``alpha`` and an
isotropic Gaussian prior of precision ``lambda`` on ``w``. Both precisions
carry Gamma(shape, rate) hyperpriors and are re-estimated by the usual
fixed-point updates of the marginal likelihood.

Fitting works on centered, column-standardized data; the returned model is
expressed in the original feature units.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from ._io import atomic_write_text
from .errors import ParseError, SingularMatrixError, ValidationError

LOG_2PI = math.log(2.0 * math.pi)
MODEL_FORMAT = "severity-ridge-model"
MODEL_VERSION = 1
DEFAULT_BOUNDARIES = (0, 6, 12, 18)


@dataclass(frozen=True)
class RidgeConfig:
    """Hyperprior and solver settings.

    Parameters
    ----------
    alpha_1, alpha_2 : float
        Shape and rate of the Gamma prior over the noise precision.
    lambda_1, lambda_2 : float
        Shape and rate of the Gamma prior over the weight precision.
    alpha_init, lambda_init : float or None
        Starting precisions in target units. ``None`` means ``1 / Var(y)``
        and ``1`` (the latter in normalized units when ``normalize_target``).
    tol : float
        Stop when the L1 change of the (standardized) coefficients between
        iterations drops below this.
    max_iter : int
    fit_intercept : bool
    update_hyperparams : bool
        When False a single posterior solve is done at the initial
        precisions, i.e. plain ridge with penalty ``lambda / alpha``.
    normalize_target : bool
        Divide the centered target by its standard deviation while the
        precisions are re-estimated, so the Gamma hyperpriors act on
        scale-free precisions. Reported ``alpha`` and ``lambda_`` are
        converted back to target units. Without it, targets of order 1e20
        leave the hyperprior in control and the weights collapse to zero.
    """

    alpha_1: float = 2.0
    alpha_2: float = 0.01
    lambda_1: float = 0.001
    lambda_2: float = 0.01
    alpha_init: float | None = None
    lambda_init: float | None = None
    tol: float = 1e-3
    max_iter: int = 300
    fit_intercept: bool = True
    update_hyperparams: bool = True
    normalize_target: bool = True

    def __post_init__(self):
        for name in ("alpha_1", "alpha_2", "lambda_1", "lambda_2", "tol"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be a positive finite number, got {v!r}")
        for name in ("alpha_init", "lambda_init"):
            v = getattr(self, name)
            if v is not None and not (math.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive when given, got {v!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValidationError(f"max_iter must be a positive integer, got {self.max_iter!r}")


@dataclass(frozen=True, eq=False)
class RidgeModel:
    """A fitted model.

    Attributes
    ----------
    coefficients : ndarray, shape (p,)
    intercept : float
    alpha : float
        Noise precision.
    lambda_ : float
        Weight precision (in standardized feature units).
    posterior_covariance : ndarray, shape (p, p)
        Covariance of ``coefficients`` in original feature units.
    effective_dof : float
        Number of well-determined parameters, in ``[0, p]``.
    n_iter : int
    converged : bool
    log_evidence_trace : tuple of float
        Log marginal likelihood plus log hyperprior, one entry per iteration.
    x_offset : ndarray, shape (p,)
        Training feature means (zeros without intercept); predictive
        variance is measured from this point.
    config : RidgeConfig
    """

    coefficients: np.ndarray
    intercept: float
    alpha: float
    lambda_: float
    posterior_covariance: np.ndarray
    effective_dof: float
    n_iter: int
    converged: bool
    log_evidence_trace: tuple
    x_offset: np.ndarray
    config: RidgeConfig = field(default_factory=RidgeConfig)

    @property
    def n_features(self) -> int:
        return self.coefficients.shape[0]

    def predict(self, X) -> np.ndarray:
        X = _check_design(X, self.n_features)
        return X @ self.coefficients + self.intercept

    def predict_with_std(self, X) -> tuple[np.ndarray, np.ndarray]:
        X = _check_design(X, self.n_features)
        mean = X @ self.coefficients + self.intercept
        d = X - self.x_offset
        quad = np.einsum("ij,jk,ik->i", d, self.posterior_covariance, d)
        return mean, np.sqrt(1.0 / self.alpha + np.maximum(quad, 0.0))

    def save(self, path) -> None:
        atomic_write_text(path, dump_model(self))

    @classmethod
    def load(cls, path) -> "RidgeModel":
        return parse_model(Path(path).read_text(), source=path)


def _as_matrix(X, name="X") -> np.ndarray:
    try:
        X = np.asarray(X, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{name} must be a rectangular numeric array ({exc})") from None
    if X.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1 or X.shape[1] < 1:
        raise ValidationError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(X)):
        raise ValidationError(f"{name} contains non-finite values")
    return X


def _as_vector(y, n, name="y") -> np.ndarray:
    try:
        y = np.asarray(y, dtype=np.float64)
    except ValueError as exc:
        raise ValidationError(f"{name} must be numeric ({exc})") from None
    if y.ndim != 1 or y.shape[0] != n:
        raise ValidationError(f"{name} must be a vector of length {n}, got shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValidationError(f"{name} contains non-finite values")
    return y


def _check_design(X, p) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != p:
        raise ValidationError(f"X has {X.shape[1]} columns, model expects {p}")
    return X


def _posterior_from_gram(XtX, Xty, alpha, lam):
    p = XtX.shape[0]
    A = alpha * XtX
    A[np.diag_indices(p)] += lam
    c, info = dpotrf(A, lower=1, clean=1)
    if info > 0:
        raise SingularMatrixError(int(info))
    if info < 0:  # pragma: no cover - argument error inside LAPACK
        raise ValidationError(f"dpotrf rejected argument {-info}")
    factor = (c, True)
    mu = cho_solve(factor, alpha * Xty)
    sigma = cho_solve(factor, np.eye(p))
    sigma = 0.5 * (sigma + sigma.T)
    logdet = 2.0 * np.sum(np.log(np.diag(c)))
    return mu, sigma, logdet


def solve_posterior(X, y, alpha: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and covariance of the weights at fixed precisions.

    ``Sigma = (lam I + alpha X^T X)^-1`` and ``mu = alpha Sigma X^T y``,
    via a Cholesky factorization.

    Raises
    ------
    SingularMatrixError
        If the precision matrix is numerically not positive definite.
    """
    X = _as_matrix(X)
    y = _as_vector(y, X.shape[0])
    for name, v in (("alpha", alpha), ("lambda", lam)):
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{name} must be positive and finite, got {v!r}")
    mu, sigma, _ = _posterior_from_gram(X.T @ X, X.T @ y, float(alpha), float(lam))
    return mu, sigma


def log_evidence(n, p, alpha, lam, rss, coef_sq, logdet, config: RidgeConfig) -> float:
    """Log marginal likelihood plus the log Gamma hyperprior terms (up to constants)."""
    ll = 0.5 * (p * math.log(lam) + n * math.log(alpha) - alpha * rss - lam * coef_sq
                - logdet - n * LOG_2PI)
    prior = (config.alpha_1 * math.log(alpha) - config.alpha_2 * alpha
             + config.lambda_1 * math.log(lam) - config.lambda_2 * lam)
    return float(ll + prior)


def _standardize(X, fit_intercept):
    if fit_intercept:
        offset = X.mean(axis=0)
        Xc = X - offset
    else:
        offset = np.zeros(X.shape[1])
        Xc = X
    scale = np.sqrt(np.mean(Xc * Xc, axis=0))
    scale[scale == 0] = 1.0
    return Xc / scale, offset, scale


def fit(X, y, config: RidgeConfig | None = None) -> RidgeModel:
    """Fit a Bayesian ridge model by evidence maximization.

    Parameters
    ----------
    X : array-like, shape (n, p)
    y : array-like, shape (n,)
    config : RidgeConfig, optional

    Returns
    -------
    RidgeModel
    """
    config = config or RidgeConfig()
    X = _as_matrix(X)
    n, p = X.shape
    y = _as_vector(y, n)

    Xs, x_offset, scale = _standardize(X, config.fit_intercept)
    y_offset = y.mean() if config.fit_intercept else 0.0
    yc = y - y_offset

    var_y = float(np.var(y))
    alpha = config.alpha_init if config.alpha_init is not None else (1.0 / var_y if var_y > 0 else 1.0)
    lam = config.lambda_init if config.lambda_init is not None else 1.0

    # Precisions scale as 1/y_scale**2 under y -> y / y_scale.
    y_scale = 1.0
    if config.update_hyperparams and config.normalize_target and var_y > 0:
        y_scale = math.sqrt(var_y)
        yc = yc / y_scale
        alpha *= var_y
        if config.lambda_init is not None:
            lam *= var_y

    XtX = Xs.T @ Xs
    Xty = Xs.T @ yc
    trace = []
    converged = False
    mu_old = None
    n_iter = 0

    def step(alpha, lam):
        mu, sigma, logdet = _posterior_from_gram(XtX, Xty, alpha, lam)
        resid = yc - Xs @ mu
        rss = float(resid @ resid)
        trace.append(log_evidence(n, p, alpha, lam, rss, float(mu @ mu), logdet, config))
        return mu, sigma, rss

    if not config.update_hyperparams:
        mu, sigma, _ = step(alpha, lam)
        n_iter, converged = 1, True
    else:
        for it in range(config.max_iter):
            n_iter = it + 1
            mu, sigma, rss = step(alpha, lam)
            gamma = float(np.clip(p - lam * np.trace(sigma), 0.0, p))
            lam = (gamma + 2.0 * config.lambda_1) / (float(mu @ mu) + 2.0 * config.lambda_2)
            alpha = (n - gamma + 2.0 * config.alpha_1) / (rss + 2.0 * config.alpha_2)
            if mu_old is not None and np.sum(np.abs(mu - mu_old)) < config.tol:
                converged = True
                break
            mu_old = mu
        mu, sigma, _ = _posterior_from_gram(XtX, Xty, alpha, lam)

    gamma = float(np.clip(p - lam * np.trace(sigma), 0.0, p))
    coef = mu * y_scale / scale
    cov = sigma * y_scale ** 2 / np.outer(scale, scale)
    alpha /= y_scale ** 2
    lam /= y_scale ** 2
    intercept = float(y_offset - x_offset @ coef) if config.fit_intercept else 0.0
    return RidgeModel(
        coefficients=coef,
        intercept=intercept,
        alpha=float(alpha),
        lambda_=float(lam),
        posterior_covariance=cov,
        effective_dof=gamma,
        n_iter=n_iter,
        converged=converged,
        log_evidence_trace=tuple(trace),
        x_offset=x_offset,
        config=config,
    )


def predict(model: RidgeModel, X) -> np.ndarray:
    return model.predict(X)


def predict_with_std(model: RidgeModel, X) -> tuple[np.ndarray, np.ndarray]:
    return model.predict_with_std(X)


# ---------------------------------------------------------------------------
# Age-stratified models


def _check_boundaries(boundaries, max_age=24) -> tuple[int, ...]:
    b = tuple(int(x) for x in boundaries)
    if not b or b[0] != 0:
        raise ValidationError("age boundaries must start at 0")
    if any(y <= x for x, y in zip(b, b[1:])) or b[-1] > max_age:
        raise ValidationError(f"age boundaries must be strictly ascending within 0..{max_age}: {b}")
    return b


@dataclass(frozen=True, eq=False)
class StratifiedModel:
    """One :class:`RidgeModel` per age bucket.

    ``boundaries`` holds the first month of each bucket; bucket ``j`` covers
    ``boundaries[j] .. boundaries[j+1] - 1`` and the last one runs to 24.
    """

    boundaries: tuple[int, ...]
    models: tuple[RidgeModel, ...]

    def buckets(self) -> list[tuple[int, int]]:
        return bucket_ranges(self.boundaries)

    def bucket_of(self, ages) -> np.ndarray:
        ages = np.asarray(ages)
        if np.any((ages < 0) | (ages > 24)):
            raise ValidationError("ages must lie in 0..24")
        return np.searchsorted(self.boundaries, ages, side="right") - 1

    def predict(self, X, ages) -> np.ndarray:
        X = _as_matrix(X)
        which = self.bucket_of(ages)
        if which.shape != (X.shape[0],):
            raise ValidationError("ages must align with the rows of X")
        out = np.empty(X.shape[0])
        for j, model in enumerate(self.models):
            rows = which == j
            if rows.any():
                out[rows] = model.predict(X[rows])
        return out


def bucket_ranges(boundaries) -> list[tuple[int, int]]:
    b = _check_boundaries(boundaries)
    ends = [x - 1 for x in b[1:]] + [24]
    return list(zip(b, ends))


def fit_stratified(X, y, ages, config: RidgeConfig | None = None,
                   boundaries=DEFAULT_BOUNDARIES) -> StratifiedModel:
    """Fit a separate model on the rows of each age bucket."""
    X = _as_matrix(X)
    y = _as_vector(y, X.shape[0])
    ages = np.asarray(ages)
    if ages.shape != (X.shape[0],):
        raise ValidationError("ages must align with the rows of X")
    b = _check_boundaries(boundaries)
    shell = StratifiedModel(b, ())
    which = shell.bucket_of(ages)
    empty = [f"{lo}-{hi}" for j, (lo, hi) in enumerate(bucket_ranges(b)) if not np.any(which == j)]
    if empty:
        raise ValidationError(f"empty age bucket(s): {', '.join(empty)}")
    models = tuple(fit(X[which == j], y[which == j], config) for j in range(len(b)))
    return StratifiedModel(b, models)


# ---------------------------------------------------------------------------
# Persistence


def _fmt(x) -> str:
    return repr(float(x))


def dump_model(model: RidgeModel) -> str:
    """Serialize ``model`` as versioned ``key = value`` lines."""
    vec = lambda a: " ".join(_fmt(v) for v in np.ravel(a))  # noqa: E731
    lines = [
        f"format = {MODEL_FORMAT}",
        f"version = {MODEL_VERSION}",
        f"p = {model.n_features}",
        f"coefficients = {vec(model.coefficients)}",
        f"intercept = {_fmt(model.intercept)}",
        f"x_offset = {vec(model.x_offset)}",
        f"alpha = {_fmt(model.alpha)}",
        f"lambda = {_fmt(model.lambda_)}",
        f"posterior_covariance = {vec(model.posterior_covariance)}",
        f"effective_dof = {_fmt(model.effective_dof)}",
        f"n_iter = {model.n_iter}",
        f"converged = {str(model.converged).lower()}",
        f"log_evidence_trace = {vec(model.log_evidence_trace)}",
    ]
    for key, value in asdict(model.config).items():
        if isinstance(value, bool):
            text = str(value).lower()
        elif value is None:
            text = "none"
        elif isinstance(value, int):
            text = str(value)
        else:
            text = _fmt(value)
        lines.append(f"config.{key} = {text}")
    return "\n".join(lines) + "\n"


def parse_model(text: str, source="<string>") -> RidgeModel:
    entries = {}
    linenos = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(source, lineno, None, f"expected 'key = value', got {raw!r}")
        entries[key.strip()] = value.strip()
        linenos[key.strip()] = lineno

    def get(key):
        if key not in entries:
            raise ParseError(source, 0, key, f"missing key {key!r}")
        return entries[key]

    def floats(key, count=None):
        try:
            vals = [float(t) for t in get(key).split()]
        except ValueError:
            raise ParseError(source, linenos[key], key, "non-numeric value") from None
        if count is not None and len(vals) != count:
            raise ParseError(source, linenos[key], key, f"expected {count} values, got {len(vals)}")
        return np.array(vals, dtype=np.float64)

    def boolean(key):
        v = get(key)
        if v not in ("true", "false"):
            raise ParseError(source, linenos[key], key, f"expected true/false, got {v!r}")
        return v == "true"

    if get("format") != MODEL_FORMAT:
        raise ParseError(source, linenos["format"], "format", f"not a {MODEL_FORMAT} file")
    if get("version") != str(MODEL_VERSION):
        raise ParseError(source, linenos["version"], "version", f"unsupported version {get('version')!r}")
    try:
        p = int(get("p"))
        n_iter = int(get("n_iter"))
    except ValueError:
        raise ParseError(source, linenos.get("p", 0), "p", "expected an integer") from None

    cfg = {}
    for f in fields(RidgeConfig):
        key = f"config.{f.name}"
        if key not in entries:
            continue
        raw = entries[key]
        try:
            if raw in ("true", "false"):
                cfg[f.name] = raw == "true"
            elif raw == "none":
                cfg[f.name] = None
            elif f.name == "max_iter":
                cfg[f.name] = int(raw)
            else:
                cfg[f.name] = float(raw)
        except ValueError:
            raise ParseError(source, linenos[key], key, f"bad value {raw!r}") from None

    return RidgeModel(
        coefficients=floats("coefficients", p),
        intercept=float(floats("intercept", 1)[0]),
        alpha=float(floats("alpha", 1)[0]),
        lambda_=float(floats("lambda", 1)[0]),
        posterior_covariance=floats("posterior_covariance", p * p).reshape(p, p),
        effective_dof=float(floats("effective_dof", 1)[0]),
        n_iter=n_iter,
        converged=boolean("converged"),
        log_evidence_trace=tuple(floats("log_evidence_trace").tolist()),
        x_offset=floats("x_offset", p),
        config=RidgeConfig(**cfg),
    )
