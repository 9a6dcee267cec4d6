"""Pareto dominance, non-dominated sorting and two-tier (lexicographic) ranking.

All objective vectors are minimized. Ranks are 1-based and relative to the
population they were computed in.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np


class Comparison(str, Enum):
    A_BETTER = "a_better"
    B_BETTER = "b_better"
    EQUIVALENT = "equivalent"


@dataclass
class ScoredCandidate:
    x: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    rank1: int = 0
    rank2: int = 0

    @property
    def combined_key(self) -> tuple[int, int]:
        return (self.rank1, self.rank2)


def pareto_dominates(a, b) -> bool:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"objective vectors differ in length: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def domination_matrix(F) -> np.ndarray:
    """``D[i, j]`` is True iff row ``i`` Pareto-dominates row ``j``."""
    F = np.asarray(F, dtype=float)
    le = (F[:, None, :] <= F[None, :, :]).all(axis=-1)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=-1)
    return le & lt


def _check_objectives(points) -> np.ndarray:
    F = np.asarray(points, dtype=float)
    if F.ndim == 1:
        F = F[:, None]
    if F.shape[0] == 0:
        raise ValueError("cannot sort an empty population")
    if np.isnan(F).any():
        raise ValueError("NaN objective values cannot be ranked")
    return F


def _peel(dom: np.ndarray) -> np.ndarray:
    """Front index of every node of a domination relation (repeated min-removal)."""
    count = dom.sum(axis=0)
    ranks = np.zeros(dom.shape[0], dtype=int)
    front = np.flatnonzero(count == 0)
    k = 0
    while front.size:
        k += 1
        ranks[front] = k
        count = count - dom[front].sum(axis=0)
        count[ranks > 0] = -1
        front = np.flatnonzero(count == 0)
    return ranks


def nondominated_sort(points) -> np.ndarray:
    """Front index (1 = non-dominated) of every row of ``points``."""
    return _peel(domination_matrix(_check_objectives(points)))


def combined_compare(a: ScoredCandidate, b: ScoredCandidate) -> Comparison:
    ka, kb = a.combined_key, b.combined_key
    if ka < kb:
        return Comparison.A_BETTER
    if kb < ka:
        return Comparison.B_BETTER
    return Comparison.EQUIVALENT


def tier_ranks(F1, F2, boundary_anchor: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Tier-1 ranks over the population, tier-2 ranks within each tier-1 front.

    ``F1=None`` means a single tier: every candidate gets tier-1 rank 1.

    With ``boundary_anchor`` the tier-1 sort also includes a virtual point at
    ``F1 = (0, 0)`` whenever the population holds both predicted-feasible
    (``F1[:, 0] <= 0``) and predicted-infeasible rows. Continuous constraint
    means on a box then have a zero-violation boundary point between the two,
    and that point dominates every predicted-infeasible candidate; the anchor
    stands in for it so a finite population ranks like the continuum does.
    """
    F2 = _check_objectives(F2)
    n = F2.shape[0]
    if F1 is None:
        return np.ones(n, dtype=int), _peel(domination_matrix(F2))
    F1 = _check_objectives(F1)
    if boundary_anchor and (F1[:, 0] <= 0).any() and (F1[:, 0] > 0).any():
        anchor = np.zeros((1, F1.shape[1]))
        r1 = _peel(domination_matrix(np.vstack([F1, anchor])))[:n]
    else:
        r1 = _peel(domination_matrix(F1))
    same_front = r1[:, None] == r1[None, :]
    return r1, _peel(domination_matrix(F2) & same_front)


def dense_rank(r1, r2) -> np.ndarray:
    """Dense 1-based rank of the lexicographic keys ``(r1, r2)``."""
    keys = np.stack([np.asarray(r1), np.asarray(r2)], axis=1)
    _, inverse = np.unique(keys, axis=0, return_inverse=True)
    return inverse.ravel() + 1


def multi_dominance_rank(pop: Sequence[ScoredCandidate]) -> np.ndarray:
    """Fill ``rank1``/``rank2`` on every candidate and return dense combined ranks."""
    if len(pop) == 0:
        raise ValueError("empty population")
    F1 = np.array([c.f1 for c in pop], dtype=float)
    F2 = np.array([c.f2 for c in pop], dtype=float)
    r1, r2 = tier_ranks(F1, F2)
    for c, a, b in zip(pop, r1, r2):
        c.rank1, c.rank2 = int(a), int(b)
    return dense_rank(r1, r2)
