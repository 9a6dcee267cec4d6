"""Swarm search over acquisition values under the two-tier ranking.

A particle swarm evolves positions in the unit hypercube. Each iteration the
particles are scored, ranked jointly with their personal bests, and every
candidate reaching combined rank 1 enters an external archive which supplies
the swarm leaders. The archive is returned as the candidate set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .acquisition import AcquisitionConfig, SurrogateBundle, tier1_vector, tier2_vector
from .dominance import ScoredCandidate, tier_ranks

#: ``(X) -> (F1 or None, F2)`` for a batch of unit-cube points.
ScoreFn = Callable[[np.ndarray], "tuple[Optional[np.ndarray], np.ndarray]"]

DEDUP_TOL = 1e-9
DUPLICATE_TOL = 1e-6


@dataclass(frozen=True)
class InnerOptConfig:
    population_size: int = 20
    max_iterations: int = 100
    inertia: float = 0.729
    cognitive_coef: float = 1.49445
    social_coef: float = 1.49445
    mutation_prob: float | None = None  # None -> 1/d
    max_velocity: float = 0.2
    archive_size: int = 100
    boundary_anchor: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.inertia, self.cognitive_coef, self.social_coef) < 0:
            raise ValueError("swarm coefficients must be non-negative")


def _lex_less(a1, a2, b1, b2):
    return (a1 < b1) | ((a1 == b1) & (a2 < b2))


def _as_2d(F, n):
    if F is None:
        return None
    F = np.asarray(F, dtype=float)
    return F.reshape(n, -1)


class _Archive:
    """Mutually non-dominated (combined rank 1) candidates, newest last."""

    def __init__(self, cap: int, anchor: bool):
        self.cap = cap
        self.anchor = anchor
        self.x = None
        self.f1 = None
        self.f2 = None
        self.stamp = np.zeros(0, dtype=int)
        self._clock = 0

    def merge(self, x, f1, f2):
        n = x.shape[0]
        stamps = self._clock + np.arange(n)
        self._clock += n
        if self.x is not None:
            x = np.vstack([self.x, x])
            f1 = None if f1 is None else np.vstack([self.f1, f1])
            f2 = np.vstack([self.f2, f2])
            stamps = np.r_[self.stamp, stamps]
        r1, r2 = tier_ranks(f1, f2, self.anchor)
        keep = np.flatnonzero((r1 == 1) & (r2 == 1))
        # newest first so duplicates resolve to the most recent entry
        keep = keep[np.argsort(-stamps[keep], kind="stable")]
        if keep.size > 1:
            xs = x[keep]
            close = np.abs(xs[:, None, :] - xs[None, :, :]).max(axis=-1) <= DEDUP_TOL
            keep = keep[~np.triu(close, 1).any(axis=0)]
        chosen = keep[: self.cap]
        chosen = chosen[np.argsort(stamps[chosen], kind="stable")]
        self.x = x[chosen]
        self.f1 = None if f1 is None else f1[chosen]
        self.f2 = f2[chosen]
        self.stamp = stamps[chosen]

    def candidates(self) -> list[ScoredCandidate]:
        r1, r2 = tier_ranks(self.f1, self.f2, self.anchor)
        n = self.x.shape[0]
        f1 = self.f1 if self.f1 is not None else np.zeros((n, 0))
        return [
            ScoredCandidate(self.x[i].copy(), f1[i].copy(), self.f2[i].copy(), int(r1[i]), int(r2[i]))
            for i in range(n)
        ]


def swarm_search(score: ScoreFn, dimension: int, cfg: InnerOptConfig = InnerOptConfig()) -> list[ScoredCandidate]:
    """Evolve a swarm under the two-tier ranking and return the final archive.

    ``score`` maps an ``(n, d)`` batch to tier-1 values (or ``None`` when there
    is only one tier) and tier-2 values. With a single tier the ranking reduces
    to plain non-dominated sorting, and with one tier-2 column to scalar order.
    """
    rng = np.random.default_rng(cfg.seed)
    P, d = cfg.population_size, dimension
    vmax = cfg.max_velocity
    pm = 1.0 / d if cfg.mutation_prob is None else cfg.mutation_prob

    pos = rng.random((P, d))
    vel = rng.uniform(-vmax, vmax, size=(P, d))
    archive = _Archive(cfg.archive_size, cfg.boundary_anchor)
    best_x = best_f1 = best_f2 = None

    for it in range(cfg.max_iterations):
        F1, F2 = score(pos)
        F1, F2 = _as_2d(F1, P), _as_2d(F2, P)
        if not np.all(np.isfinite(F2)) or (F1 is not None and not np.all(np.isfinite(F1))):
            raise FloatingPointError(f"non-finite acquisition values at swarm iteration {it}")

        if best_x is None:
            best_x, best_f1, best_f2 = pos.copy(), F1, F2.copy()
        else:
            # ranks are population-relative: re-rank particles with their bests
            j1 = None if F1 is None else np.vstack([F1, best_f1])
            r1, r2 = tier_ranks(j1, np.vstack([F2, best_f2]), cfg.boundary_anchor)
            better = _lex_less(r1[:P], r2[:P], r1[P:], r2[P:])
            tie = (r1[:P] == r1[P:]) & (r2[:P] == r2[P:])
            better |= tie & (rng.random(P) < 0.5)
            best_x[better] = pos[better]
            best_f2[better] = F2[better]
            if F1 is not None:
                best_f1[better] = F1[better]

        archive.merge(pos.copy(), None if F1 is None else F1.copy(), F2.copy())

        leaders = archive.x[rng.integers(archive.x.shape[0], size=P)]
        r_c = rng.random((P, d))
        r_s = rng.random((P, d))
        vel = (cfg.inertia * vel
               + cfg.cognitive_coef * r_c * (best_x - pos)
               + cfg.social_coef * r_s * (leaders - pos))
        np.clip(vel, -vmax, vmax, out=vel)
        pos = pos + vel
        out = (pos < 0.0) | (pos > 1.0)
        pos = np.clip(pos, 0.0, 1.0)
        vel[out] = 0.0
        mutate = rng.random(P) < pm
        axes = rng.integers(d, size=P)
        pos[mutate, axes[mutate]] = rng.random(int(mutate.sum()))

    return archive.candidates()


def optimize_acquisitions(
    b: SurrogateBundle,
    cfg: InnerOptConfig,
    acq_cfg: AcquisitionConfig,
    dimension: int,
) -> list[ScoredCandidate]:
    """Candidate set that is optimal under the two-tier relation (F1 then F2)."""
    if b.num_constraints < 1:
        raise ValueError("tiered search needs at least one constraint surrogate")

    def score(X):
        return tier1_vector(b, X, acq_cfg), tier2_vector(b, X, acq_cfg)

    return swarm_search(score, dimension, cfg)


def pick_candidate(archive, evaluated, rng) -> np.ndarray:
    """Uniformly random archive member that is not a repeat of an evaluated point.

    ``evaluated`` holds already-evaluated unit-cube points. If every member is
    a repeat, a random member is perturbed with N(0, 0.01^2) noise instead.
    """
    if len(archive) == 0:
        raise ValueError("cannot pick from an empty archive")
    pts = np.array([np.asarray(c.x if isinstance(c, ScoredCandidate) else c, dtype=float) for c in archive])
    done = np.asarray(evaluated, dtype=float).reshape(-1, pts.shape[1])

    def is_new(p):
        if done.shape[0] == 0:
            return True
        return np.sqrt(((done - p) ** 2).sum(axis=1)).min() > DUPLICATE_TOL

    for i in rng.permutation(len(pts)):
        if is_new(pts[i]):
            return pts[i].copy()
    while True:
        p = pts[rng.integers(len(pts))] + rng.normal(0.0, 0.01, size=pts.shape[1])
        p = np.clip(p, 0.0, 1.0)
        if is_new(p):
            return p
