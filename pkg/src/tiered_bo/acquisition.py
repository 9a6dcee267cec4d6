"""Acquisition functions over GP posteriors.

Everything is in minimization form. ``lcb``, ``pi`` and ``ei`` broadcast over
numpy arrays; the bundle-level functions accept one point ``(d,)`` or a batch
``(n, d)`` of unit-cube inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy.special import erfcx, ndtr

SIGMA_FLOOR = 1e-12
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_INV_SQRT_2 = 1.0 / math.sqrt(2.0)
_SQRT_HALF_PI = math.sqrt(0.5 * math.pi)


class Surrogate(Protocol):
    def predict(self, x): ...


@dataclass(frozen=True)
class AcquisitionConfig:
    beta: float = 0.3
    epsilon: float = 0.001
    alpha: float = 0.2
    tau: float = float("nan")

    def __post_init__(self):
        if self.beta < 0 or self.epsilon < 0 or self.alpha < 0:
            raise ValueError("beta, epsilon and alpha must be non-negative")

    def with_tau(self, tau: float) -> "AcquisitionConfig":
        return replace(self, tau=float(tau))


@dataclass(frozen=True)
class SurrogateBundle:
    """Objective surrogate plus one surrogate per constraint (raw constraint scale)."""

    objective_gp: Surrogate
    constraint_gps: Sequence[Surrogate] = ()

    @property
    def num_constraints(self) -> int:
        return len(self.constraint_gps)


class FunctionSurrogate:
    """Deterministic stand-in surrogate: ``mu = fn(x)``, constant ``sigma``."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], sigma: float = 0.0):
        self.fn = fn
        self.sigma = float(sigma)

    def predict(self, x):
        x = np.asarray(x, dtype=float)
        X = np.atleast_2d(x)
        mu = np.asarray([float(self.fn(row)) for row in X])
        sigma = np.full(mu.shape, self.sigma)
        if x.ndim == 1:
            return float(mu[0]), float(sigma[0])
        return mu, sigma


def lcb(mu, sigma, cfg: AcquisitionConfig = AcquisitionConfig()):
    return mu - cfg.beta * np.asarray(sigma)


def _improvement_terms(mu, sigma, cfg):
    if not math.isfinite(cfg.tau):
        raise ValueError("incumbent tau must be finite to evaluate PI/EI")
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    gap = cfg.tau - cfg.epsilon - mu
    tiny = sigma < SIGMA_FLOOR
    lam = gap / np.where(tiny, 1.0, sigma)
    return gap, sigma, tiny, lam


def pi(mu, sigma, cfg: AcquisitionConfig):
    gap, sigma, tiny, lam = _improvement_terms(mu, sigma, cfg)
    out = np.where(tiny, (gap > 0).astype(float), ndtr(lam))
    return out[()] if out.ndim == 0 else out


def ei(mu, sigma, cfg: AcquisitionConfig):
    gap, sigma, tiny, lam = _improvement_terms(mu, sigma, cfg)
    phi = _INV_SQRT_2PI * np.exp(-0.5 * lam * lam)
    # lam * Phi + phi cancels in the lower tail; there use Phi/phi = sqrt(pi/2) erfcx(-lam/sqrt 2)
    neg = np.minimum(lam, 0.0)
    tail = phi * (1.0 + neg * _SQRT_HALF_PI * erfcx(-neg * _INV_SQRT_2))
    smooth = sigma * np.where(lam < 0, tail, lam * ndtr(lam) + phi)
    out = np.where(tiny, np.maximum(gap, 0.0), np.maximum(smooth, 0.0))
    return out[()] if out.ndim == 0 else out


def _constraint_predictions(b: SurrogateBundle, x):
    """Per-constraint (mu, sigma) as ``(n, C)`` arrays."""
    if b.num_constraints == 0:
        raise ValueError("constraint acquisitions need at least one constraint surrogate")
    X = np.atleast_2d(np.asarray(x, dtype=float))
    mus, sigmas = [], []
    for g in b.constraint_gps:
        m, s = g.predict(X)
        mus.append(np.asarray(m, dtype=float))
        sigmas.append(np.asarray(s, dtype=float))
    return np.column_stack(mus), np.column_stack(sigmas)


def _squeeze(x, out):
    return float(out[0]) if np.ndim(x) == 1 else out


def adjusted_constraint_means(b: SurrogateBundle, x, cfg: AcquisitionConfig):
    """``mu_ci - alpha * sigma_ci`` for every constraint, shape ``(n, C)``."""
    mu, sigma = _constraint_predictions(b, x)
    return mu - cfg.alpha * sigma


def f_cv1(b: SurrogateBundle, x, cfg: AcquisitionConfig = AcquisitionConfig()):
    return _squeeze(x, adjusted_constraint_means(b, x, cfg).max(axis=1))


def f_cv2(b: SurrogateBundle, x, cfg: AcquisitionConfig = AcquisitionConfig()):
    return _squeeze(x, np.abs(adjusted_constraint_means(b, x, cfg)).min(axis=1))


def prob_feasible(b: SurrogateBundle, x):
    """Product of per-constraint probabilities ``P(c_i(x) <= 0)`` (raw means)."""
    mu, sigma = _constraint_predictions(b, x)
    tiny = sigma < SIGMA_FLOOR
    z = -mu / np.where(tiny, 1.0, sigma)
    factors = np.where(tiny, (mu < 0).astype(float), ndtr(z))
    return _squeeze(x, factors.prod(axis=1))


def tier1_values(adjusted) -> np.ndarray:
    """``[max_i m_i, min_i |m_i|]`` per row of an ``(n, C)`` array of constraint means."""
    adjusted = np.atleast_2d(np.asarray(adjusted, dtype=float))
    return np.column_stack([adjusted.max(axis=1), np.abs(adjusted).min(axis=1)])


def tier1_vector(b: SurrogateBundle, x, cfg: AcquisitionConfig = AcquisitionConfig()):
    """``[f_cv1, f_cv2]``; shape ``(2,)`` or ``(n, 2)``."""
    out = tier1_values(adjusted_constraint_means(b, x, cfg))
    return out[0] if np.ndim(x) == 1 else out


def tier2_vector(b: SurrogateBundle, x, cfg: AcquisitionConfig):
    """``[LCB, -PI, -EI]`` from the objective surrogate; shape ``(3,)`` or ``(n, 3)``."""
    X = np.atleast_2d(np.asarray(x, dtype=float))
    mu, sigma = b.objective_gp.predict(X)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    out = np.column_stack([lcb(mu, sigma, cfg), -pi(mu, sigma, cfg), -ei(mu, sigma, cfg)])
    return out[0] if np.ndim(x) == 1 else out


def incumbent(f_internal: np.ndarray, feasible: np.ndarray) -> float:
    """Best feasible objective (minimization form), else best overall."""
    f_internal = np.asarray(f_internal, dtype=float)
    feasible = np.asarray(feasible, dtype=bool)
    if f_internal.size == 0:
        raise ValueError("no observations to derive an incumbent from")
    if feasible.any():
        return float(f_internal[feasible].min())
    return float(f_internal.min())
