"""Gaussian process regression with an ARD squared-exponential kernel.

Inputs are expected in the unit hypercube and targets are standardized before
fitting, so a zero prior mean is used throughout. Hyperparameters are chosen by
multi-start maximization of the log marginal likelihood inside a bounded box.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, lapack, solve_triangular
from scipy.optimize import minimize

log = logging.getLogger(__name__)

JITTER_START = 1e-10
JITTER_MAX = 1e-4
_LOG_2PI = math.log(2.0 * math.pi)


class GpFitError(RuntimeError):
    """Raised when the covariance matrix cannot be factorized."""


@dataclass(frozen=True)
class KernelParams:
    signal_variance: float
    lengthscales: tuple[float, ...]
    noise_variance: float = 1e-8

    def __post_init__(self):
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        if not self.signal_variance > 0 or not all(v > 0 for v in ls):
            raise ValueError("signal variance and lengthscales must be strictly positive")
        if not self.noise_variance >= 0:
            raise ValueError("noise variance must be non-negative")

    def to_log(self) -> np.ndarray:
        return np.log(np.r_[self.lengthscales, self.signal_variance, self.noise_variance])

    @classmethod
    def from_log(cls, theta) -> "KernelParams":
        theta = np.exp(np.asarray(theta, dtype=float))
        return cls(float(theta[-2]), tuple(theta[:-2]), float(theta[-1]))


def kernel(x, x2, p: KernelParams) -> float:
    x = np.asarray(x, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if x.shape != x2.shape or x.shape != (len(p.lengthscales),):
        raise ValueError("input dimensions must match the number of lengthscales")
    r = (x - x2) / np.asarray(p.lengthscales)
    return float(p.signal_variance * np.exp(-0.5 * np.dot(r, r)))


def kernel_matrix(A, B, p: KernelParams) -> np.ndarray:
    ls = np.asarray(p.lengthscales)
    a = np.atleast_2d(A) / ls
    b = np.atleast_2d(B) / ls
    sq = (a * a).sum(1)[:, None] + (b * b).sum(1)[None, :] - 2.0 * a @ b.T
    np.maximum(sq, 0.0, out=sq)
    return p.signal_variance * np.exp(-0.5 * sq)


@dataclass(frozen=True)
class FitConfig:
    """Hyperparameter search settings.

    ``params`` fixes the hyperparameters and skips the likelihood search.
    Bounds are given for the standardized target scale.
    """

    n_restarts: int = 5
    lengthscale_bounds: tuple[float, float] = (1e-2, 10.0)
    signal_bounds: tuple[float, float] = (1e-3, 1e3)
    noise_bounds: tuple[float, float] = (1e-8, 1e-2)
    screen_iter: int = 12
    max_iter: int = 60
    params: KernelParams | None = None
    seed: int | None = 0


@dataclass(frozen=True, eq=False)
class GpModel:
    params: KernelParams
    train_inputs: np.ndarray
    train_targets: np.ndarray
    cholesky_factor: np.ndarray
    alpha: np.ndarray
    target_mean: float
    target_std: float
    jitter: float = 0.0
    log_marginal_likelihood: float = float("nan")
    start_likelihoods: tuple[float, ...] = field(default=())

    def predict(self, x):
        """Posterior mean and standard deviation on the original target scale.

        ``x`` may be a single point ``(d,)`` (floats returned) or a batch
        ``(n, d)`` (arrays returned).
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.train_inputs.shape[1]:
            raise ValueError("prediction input has the wrong dimension")
        if np.any(X < 0.0) or np.any(X > 1.0):
            log.warning("prediction input outside the unit hypercube; clamping")
            X = np.clip(X, 0.0, 1.0)
        Ks = kernel_matrix(X, self.train_inputs, self.params)
        mu = Ks @ self.alpha
        v = solve_triangular(self.cholesky_factor, Ks.T, lower=True, check_finite=False)
        var = self.params.signal_variance - np.einsum("ij,ij->j", v, v)
        sigma = np.sqrt(np.maximum(var, 0.0))
        mu = self.target_mean + self.target_std * mu
        sigma = self.target_std * sigma
        if single:
            return float(mu[0]), float(sigma[0])
        return mu, sigma


def predict(m: GpModel, x):
    return m.predict(x)


def _factor(K: np.ndarray, noise: float):
    """Cholesky of ``K + noise*I`` with escalating jitter; returns (L, jitter)."""
    n = K.shape[0]
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(K + (noise + jitter) * np.eye(n))
            return L, jitter
        except (np.linalg.LinAlgError, LinAlgError):
            jitter = JITTER_START if jitter == 0.0 else jitter * 10.0
            if jitter > JITTER_MAX * (1 + 1e-9):
                raise GpFitError(
                    f"Cholesky failed with jitter up to {JITTER_MAX:g} (N={n})"
                ) from None


def _sq_dists(X: np.ndarray) -> np.ndarray:
    """Per-dimension squared differences, shape (d, N, N)."""
    diff = X.T[:, :, None] - X.T[:, None, :]
    return diff * diff


def _neg_lml(theta, D, y):
    """Negative log marginal likelihood and its gradient in log-parameter space."""
    d = D.shape[0]
    n = y.shape[0]
    ls2 = np.exp(2.0 * theta[:d])
    s2 = math.exp(theta[d])
    noise = math.exp(theta[d + 1])
    Kf = s2 * np.exp(-0.5 * (1.0 / ls2) @ D.reshape(d, -1)).reshape(n, n)
    A = Kf.copy()
    A.flat[:: n + 1] += noise
    L, info = lapack.dpotrf(A, lower=1, clean=1, overwrite_a=1)
    if info != 0:
        return 1e25, np.zeros_like(theta)
    alpha, _ = lapack.dpotrs(L, y, lower=1)
    lml = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * _LOG_2PI
    # dpotri leaves the (cleaned) upper triangle at zero
    Kinv, info = lapack.dpotri(L, lower=1, overwrite_c=1)
    if info != 0:
        return 1e25, np.zeros_like(theta)
    Kinv += Kinv.T
    Kinv.flat[:: n + 1] *= 0.5
    W = np.outer(alpha, alpha)
    W -= Kinv
    WK = W * Kf
    grad = np.empty_like(theta)
    grad[:d] = 0.5 * (D.reshape(d, -1) @ WK.ravel()) / ls2
    grad[d] = 0.5 * WK.sum()
    grad[d + 1] = 0.5 * noise * np.trace(W)
    return -lml, -grad


def log_marginal_likelihood(X, y, p: KernelParams) -> float:
    """Log marginal likelihood of (already standardized) targets ``y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    val, _ = _neg_lml(p.to_log(), _sq_dists(X), y)
    return -val


def _bounds(cfg: FitConfig, d: int) -> np.ndarray:
    rows = [cfg.lengthscale_bounds] * d + [cfg.signal_bounds, cfg.noise_bounds]
    return np.log(np.array(rows, dtype=float))


def _local_search(theta0, D, y, box, max_iter):
    res = minimize(
        _neg_lml, theta0, args=(D, y), jac=True, method="L-BFGS-B",
        bounds=box, options={"maxiter": max_iter, "ftol": 1e-7, "gtol": 1e-5},
    )
    if not np.isfinite(res.fun):
        return theta0, np.inf
    return np.clip(res.x, box[:, 0], box[:, 1]), float(res.fun)


def fit(X, y, cfg: FitConfig = FitConfig()) -> GpModel:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n, d = X.shape
    if n < 2:
        raise ValueError("GP fit needs at least two training points")
    if y.shape[0] != n:
        raise ValueError("X and y lengths differ")
    if not np.all(np.isfinite(y)):
        raise ValueError("GP targets must be finite (NaN/inf rejected)")

    target_mean = float(y.mean())
    target_std = float(y.std())
    if target_std < 1e-12:
        target_std = 1.0
    ys = (y - target_mean) / target_std

    starts: tuple[float, ...] = ()
    if cfg.params is not None:
        if len(cfg.params.lengthscales) != d:
            raise ValueError("fixed params have the wrong number of lengthscales")
        params = cfg.params
    else:
        D = _sq_dists(X)
        box = _bounds(cfg, d)
        rng = np.random.default_rng(cfg.seed)
        best_theta, best_val = None, np.inf
        start_vals = []
        # short local search from every start, then polish the winner
        for _ in range(max(cfg.n_restarts, 1)):
            theta0 = rng.uniform(box[:, 0], box[:, 1])
            val0, _ = _neg_lml(theta0, D, ys)
            start_vals.append(-val0)
            if val0 < best_val:
                best_theta, best_val = theta0, val0
            theta, val = _local_search(theta0, D, ys, box, cfg.screen_iter)
            if val < best_val:
                best_theta, best_val = theta, val
        theta, val = _local_search(best_theta, D, ys, box, cfg.max_iter)
        if val < best_val:
            best_theta, best_val = theta, val
        params = KernelParams.from_log(best_theta)
        starts = tuple(start_vals)

    K = kernel_matrix(X, X, params)
    L, jitter = _factor(K, params.noise_variance)
    alpha = cho_solve((L, True), ys, check_finite=False)
    lml = -0.5 * ys @ alpha - np.log(np.diag(L)).sum() - 0.5 * n * _LOG_2PI
    return GpModel(
        params=params,
        train_inputs=X,
        train_targets=ys,
        cholesky_factor=L,
        alpha=alpha,
        target_mean=target_mean,
        target_std=target_std,
        jitter=jitter,
        log_marginal_likelihood=float(lml),
        start_likelihoods=starts,
    )
