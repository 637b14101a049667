"""Gaussian-process surrogate of the parameter-to-RMSE response.

A zero-mean GP with an anisotropic Matern nu = 5/2 kernel is trained on
normalized RMSE targets,

    rmse_norm = (rmse - rmse_min) / (rmse_max - rmse_min),

and the predicted cost applies the inverse transform inside the
exponential cost:

    g(theta) = exp(-(rmse_norm_hat * (rmse_max - rmse_min) + rmse_min) / sigma_o)

Hyperparameters maximize the log marginal likelihood with a
deterministic coordinate-wise hill climb in log space, restarted from
five seeded random draws. The prediction used downstream is the
posterior mean; the predictive variance is available for diagnostics
only. Under extrapolation the predicted normalized RMSE is clamped to
[-0.5, 1.5] before the cost transform so g stays bounded away from
degenerate values outside the trained region.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .ensemble import CostConfig, EnsembleDataset
from .errors import DomainError, IllConditionedError, ParseError

SQRT5 = np.sqrt(5.0)
MATERN_NU = 2.5

NOISE_FLOOR = 1e-8
JITTER_MAX = 1e-4

LENGTH_SCALE_BOUNDS = (0.05, 5.0)
SIGNAL_VARIANCE_BOUNDS = (0.01, 10.0)
NOISE_VARIANCE_BOUNDS = (NOISE_FLOOR, 1e-2)
N_RESTARTS = 5

NORM_RMSE_CLAMP = (-0.5, 1.5)

MIN_TRAINING_RECORDS = 10


@dataclass
class GpHyper:
    """Kernel hyperparameters (smoothness fixed at nu = 5/2)."""

    length_scales: np.ndarray  # (4,) per-dimension, dimensionless
    signal_variance: float
    noise_variance: float
    matern_nu: float = MATERN_NU

    def __post_init__(self):
        self.length_scales = np.asarray(self.length_scales, dtype=float)
        if np.any(self.length_scales <= 0.0):
            raise DomainError("length scales must be strictly positive")
        if self.signal_variance <= 0.0:
            raise DomainError("signal variance must be strictly positive")
        if self.noise_variance < NOISE_FLOOR:
            raise DomainError(f"noise variance must be >= {NOISE_FLOOR}")
        if self.matern_nu != MATERN_NU:
            raise DomainError("only the nu = 5/2 Matern kernel is supported")


@dataclass
class GpSurrogate:
    """A fitted surrogate: training data, hyperparameters and solver cache.

    The GP has a constant prior mean equal to the training-target mean, so
    predictions far from the data revert to a mid-level normalized RMSE
    rather than to an optimistic zero.
    """

    x_train: np.ndarray  # (N, 4)
    y_norm: np.ndarray  # (N,) normalized RMSE targets
    rmse_min: float  # [K]
    rmse_max: float  # [K]
    hyper: GpHyper
    chol_lower: np.ndarray  # (N, N) Cholesky factor of K + noise*I
    weights: np.ndarray  # (N,) alpha = (K + noise*I)^-1 (y - y_mean)
    y_mean: float = 0.0  # constant prior mean of the normalized targets

    @property
    def n_train(self) -> int:
        return len(self.y_norm)


def _scaled(x: np.ndarray, hyper: GpHyper) -> np.ndarray:
    return np.asarray(x, dtype=float) / hyper.length_scales


def _matern52(r: np.ndarray, signal_variance: float) -> np.ndarray:
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * np.exp(-SQRT5 * r)


def matern_kernel(a, b, hyper: GpHyper) -> float:
    """Matern nu = 5/2 covariance between two parameter vectors."""
    d = (np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) / hyper.length_scales
    r = np.sqrt(np.dot(d, d))
    return float(_matern52(r, hyper.signal_variance))


def _cross_kernel(xa: np.ndarray, xb: np.ndarray, hyper: GpHyper) -> np.ndarray:
    a = _scaled(xa, hyper)
    b = _scaled(xb, hyper)
    d2 = np.maximum(
        (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * a @ b.T, 0.0
    )
    return _matern52(np.sqrt(d2), hyper.signal_variance)


def _factorize(x: np.ndarray, hyper: GpHyper, sq_dists=None) -> np.ndarray:
    """Lower Cholesky factor of K + noise*I, escalating jitter on failure."""
    if sq_dists is None:
        k = _cross_kernel(x, x, hyper)
    else:
        d2 = sq_dists @ (1.0 / hyper.length_scales**2)
        k = _matern52(np.sqrt(d2).reshape(len(x), len(x)), hyper.signal_variance)
    jitter = hyper.noise_variance
    while True:
        try:
            return cholesky(k + jitter * np.eye(len(x)), lower=True)
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, NOISE_FLOOR * 10.0)
            if jitter > JITTER_MAX:
                raise IllConditionedError(
                    f"kernel matrix not factorizable up to jitter {JITTER_MAX}"
                ) from None


def log_marginal_likelihood(x, y, hyper: GpHyper, sq_dists=None) -> float:
    """Gaussian log marginal likelihood of targets y under the kernel.

    ``x`` are inputs (N, 4) and ``y`` the (already normalized) targets.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=float)
    lower = _factorize(x, hyper, sq_dists=sq_dists)
    alpha = cho_solve((lower, True), y)
    return float(
        -0.5 * y @ alpha - np.log(np.diag(lower)).sum() - 0.5 * len(y) * np.log(2.0 * np.pi)
    )


def _pairwise_sq_dists(x: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, flattened to (N*N, 4)."""
    diff = x[:, None, :] - x[None, :, :]
    return (diff * diff).reshape(-1, x.shape[1])


_BOUNDS_LOG = None


def _hyper_bounds_log(n_dims: int) -> list:
    lo = [LENGTH_SCALE_BOUNDS[0]] * n_dims + [SIGNAL_VARIANCE_BOUNDS[0], NOISE_VARIANCE_BOUNDS[0]]
    hi = [LENGTH_SCALE_BOUNDS[1]] * n_dims + [SIGNAL_VARIANCE_BOUNDS[1], NOISE_VARIANCE_BOUNDS[1]]
    return [np.log(np.array(lo)), np.log(np.array(hi))]


def _vector_to_hyper(v: np.ndarray, n_dims: int) -> GpHyper:
    # exp(log(bound)) can land a rounding step outside the bound
    return GpHyper(
        length_scales=np.clip(np.exp(v[:n_dims]), *LENGTH_SCALE_BOUNDS),
        signal_variance=float(np.clip(np.exp(v[n_dims]), *SIGNAL_VARIANCE_BOUNDS)),
        noise_variance=float(np.clip(np.exp(v[n_dims + 1]), *NOISE_VARIANCE_BOUNDS)),
    )


def _coordinate_ascent(objective, v0, lo, hi, max_evals: int = 300):
    """Deterministic coordinate-wise hill climb in log space."""
    v = np.clip(v0, lo, hi)
    best = objective(v)
    evals = 1
    step = np.log(4.0)
    while step > np.log(1.05) and evals < max_evals:
        improved = False
        for k in range(len(v)):
            for sign in (1.0, -1.0):
                if evals >= max_evals:
                    break
                trial = v.copy()
                trial[k] = np.clip(trial[k] + sign * step, lo[k], hi[k])
                if trial[k] == v[k]:
                    continue
                val = objective(trial)
                evals += 1
                if val > best + 1e-10:
                    v, best = trial, val
                    improved = True
        if not improved:
            step *= 0.5
    return v, best


def fit(data: EnsembleDataset, seed: int = 0) -> GpSurrogate:
    """Normalize targets, maximize the marginal likelihood, cache the solve.

    Deterministic per seed: restarts are drawn from a seeded generator and
    ties are broken by the lowest restart index.
    """
    if data.n_members < MIN_TRAINING_RECORDS:
        raise DomainError(f"need at least {MIN_TRAINING_RECORDS} records, got {data.n_members}")
    rmse_min = float(data.rmse.min())
    rmse_max = float(data.rmse.max())
    if not rmse_max > rmse_min:
        raise DomainError("rmse spread is zero; cannot normalize targets")
    y = (data.rmse - rmse_min) / (rmse_max - rmse_min)
    x = data.thetas
    n_dims = x.shape[1]
    sq = _pairwise_sq_dists(x)

    y_centered = y - y.mean()

    def objective(v: np.ndarray) -> float:
        try:
            return log_marginal_likelihood(x, y_centered, _vector_to_hyper(v, n_dims), sq_dists=sq)
        except IllConditionedError:
            return -np.inf

    lo, hi = _hyper_bounds_log(n_dims)
    rng = np.random.default_rng(seed)
    best_v, best_val = None, -np.inf
    for _ in range(N_RESTARTS):
        v0 = rng.uniform(lo, hi)
        v, val = _coordinate_ascent(objective, v0, lo, hi)
        if val > best_val:
            best_v, best_val = v, val
    if best_v is None or not np.isfinite(best_val):
        raise IllConditionedError("no restart produced a usable likelihood")
    hyper = _vector_to_hyper(best_v, n_dims)
    return build_surrogate_arrays(x, y, rmse_min, rmse_max, hyper)


def build_surrogate(data: EnsembleDataset, hyper: GpHyper) -> GpSurrogate:
    """Assemble a surrogate from a dataset with explicitly given hyperparameters."""
    rmse_min = float(data.rmse.min())
    rmse_max = float(data.rmse.max())
    if not rmse_max > rmse_min:
        raise DomainError("rmse spread is zero; cannot normalize targets")
    y = (data.rmse - rmse_min) / (rmse_max - rmse_min)
    return build_surrogate_arrays(data.thetas, y, rmse_min, rmse_max, hyper)


def build_surrogate_arrays(x, y, rmse_min, rmse_max, hyper: GpHyper) -> GpSurrogate:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    y_mean = float(y.mean())
    lower = _factorize(x, hyper)
    weights = cho_solve((lower, True), y - y_mean)
    return GpSurrogate(
        x_train=x,
        y_norm=y,
        rmse_min=rmse_min,
        rmse_max=rmse_max,
        hyper=hyper,
        chol_lower=lower,
        weights=weights,
        y_mean=y_mean,
    )


def predict_norm_rmse(model: GpSurrogate, theta) -> float:
    """GP posterior mean of the normalized RMSE at one input."""
    d = _scaled(model.x_train, model.hyper) - _scaled(np.asarray(theta, dtype=float), model.hyper)
    r = np.sqrt((d * d).sum(axis=1))
    k = _matern52(r, model.hyper.signal_variance)
    return model.y_mean + float(k @ model.weights)


def predict_norm_rmse_many(model: GpSurrogate, thetas) -> np.ndarray:
    k = _cross_kernel(np.atleast_2d(np.asarray(thetas, dtype=float)), model.x_train, model.hyper)
    return model.y_mean + k @ model.weights


def predict_norm_rmse_var(model: GpSurrogate, thetas) -> np.ndarray:
    """Predictive variance; exposed for diagnostics output only."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    k = _cross_kernel(thetas, model.x_train, model.hyper)
    v = solve_triangular(model.chol_lower, k.T, lower=True)
    return np.maximum(model.hyper.signal_variance - (v * v).sum(axis=0), 0.0)


def predict_rmse_many(model: GpSurrogate, thetas) -> np.ndarray:
    """Predicted raw RMSE [K] (no extrapolation clamp)."""
    return predict_norm_rmse_many(model, thetas) * (model.rmse_max - model.rmse_min) + model.rmse_min


def predict_cost(model: GpSurrogate, theta, cfg: CostConfig) -> float:
    """Surrogate cost g(theta): clamp, denormalize, exponentiate."""
    norm = predict_norm_rmse(model, theta)
    norm = min(max(norm, NORM_RMSE_CLAMP[0]), NORM_RMSE_CLAMP[1])
    return float(np.exp(-(norm * (model.rmse_max - model.rmse_min) + model.rmse_min) / cfg.sigma_o))


def predict_cost_many(model: GpSurrogate, thetas, cfg: CostConfig) -> np.ndarray:
    norm = np.clip(predict_norm_rmse_many(model, thetas), *NORM_RMSE_CLAMP)
    return np.exp(-(norm * (model.rmse_max - model.rmse_min) + model.rmse_min) / cfg.sigma_o)


def save_surrogate(model: GpSurrogate, path) -> None:
    """Persist the fitted model as plain text at full precision."""
    n, d = model.x_train.shape
    with open(path, "w", newline="\n") as fh:
        fh.write("surrogate_model v1\n")
        fh.write(f"n_train={n} n_dims={d}\n")
        fh.write("length_scales=" + ",".join("%.17g" % v for v in model.hyper.length_scales) + "\n")
        fh.write("signal_variance=%.17g\n" % model.hyper.signal_variance)
        fh.write("noise_variance=%.17g\n" % model.hyper.noise_variance)
        fh.write("rmse_min=%.17g\n" % model.rmse_min)
        fh.write("rmse_max=%.17g\n" % model.rmse_max)
        fh.write("y_mean=%.17g\n" % model.y_mean)
        for i in range(n):
            row = list(model.x_train[i]) + [model.y_norm[i], model.weights[i]]
            fh.write(",".join("%.17g" % v for v in row) + "\n")


def load_surrogate(path) -> GpSurrogate:
    path = Path(path)
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "surrogate_model v1":
        raise ParseError("not a surrogate model file", path=str(path), line=1)

    def kv(line_no: int, key: str) -> str:
        k, _, v = lines[line_no].partition("=")
        if k != key:
            raise ParseError(f"expected key {key!r}, got {k!r}", path=str(path), line=line_no + 1)
        return v

    counts = dict(p.split("=") for p in lines[1].split(" "))
    n, d = int(counts["n_train"]), int(counts["n_dims"])
    hyper = GpHyper(
        length_scales=np.array([float(v) for v in kv(2, "length_scales").split(",")]),
        signal_variance=float(kv(3, "signal_variance")),
        noise_variance=float(kv(4, "noise_variance")),
    )
    rmse_min = float(kv(5, "rmse_min"))
    rmse_max = float(kv(6, "rmse_max"))
    y_mean = float(kv(7, "y_mean"))
    rows = []
    for i, line in enumerate(lines[8 : 8 + n], start=9):
        parts = line.split(",")
        if len(parts) != d + 2:
            raise ParseError(f"expected {d + 2} fields, got {len(parts)}", path=str(path), line=i)
        rows.append([float(p) for p in parts])
    if len(rows) != n:
        raise ParseError(f"expected {n} training rows, found {len(rows)}", path=str(path))
    arr = np.array(rows)
    x, y, weights = arr[:, :d], arr[:, d], arr[:, d + 1]
    lower = _factorize(x, hyper)
    return GpSurrogate(
        x_train=x,
        y_norm=y,
        rmse_min=rmse_min,
        rmse_max=rmse_max,
        hyper=hyper,
        chol_lower=lower,
        weights=weights,
        y_mean=y_mean,
    )
