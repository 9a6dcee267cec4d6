"""Analytic constrained benchmarks and brute-force grid oracles.

Registered problems (see :func:`get_benchmark`):

``tf1``
    min cos(2x1)cos(x2) + sin(x1) s.t. cos(x1+x2) - 0.5 <= 0 on [0, 6]^2.
``tf2``
    max (x1-1)^2 + (x2-0.5)^2 on [0, 1]^2 with three constraints.
``branin`` / ``branin_literal``
    max (x1-10)^2 + (x2-15)^2 s.t. a Branin-shaped constraint, x1 in [-5, 10],
    x2 in [0, 15]. ``branin`` uses the canonical cosine coefficient
    10(1 - 1/(8 pi)); ``branin_literal`` uses 10(1 - 8/pi).
``linear``
    min -x1 s.t. x1 - 0.5 <= 0 on [0, 1]^2; a stub with an exact, flat boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .acquisition import tier1_values
from .problem import MAXIMIZE, MINIMIZE, ProblemSpec, SearchSpace, sense_sign

BOUNDARY_SNAP = 1e-9


@dataclass(frozen=True)
class BenchmarkProblem:
    spec: ProblemSpec
    objective: Callable[[np.ndarray], float]
    constraints: Sequence[Callable[[np.ndarray], float]]
    reference_protocol: tuple[int, int] = (50, 10)  # (budget, initial samples)
    boundary_points: Callable[[int], np.ndarray] | None = field(default=None, repr=False)

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def sense(self) -> str:
        return self.spec.objective_sense

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if not self.spec.space.contains(x):
            raise ValueError(f"{self.name}: point {x.tolist()} outside the search domain")
        return x

    def evaluate(self, x) -> tuple[float, list[float]]:
        x = self._check(x)
        return float(self.objective(x)), [float(g(x)) for g in self.constraints]

    __call__ = evaluate

    def evaluate_grid(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized evaluation of an ``(n, d)`` batch; constraints shape ``(n, C)``."""
        X = np.asarray(X, dtype=float)
        f = np.asarray(self.objective(X.T), dtype=float)
        C = np.column_stack([np.asarray(g(X.T), dtype=float) for g in self.constraints]) \
            if self.constraints else np.zeros((X.shape[0], 0))
        return f, C


# The closed forms below index x[0], x[1] so they work on a single point and,
# transposed, on a whole batch.

def tf1_objective(x):
    return np.cos(2 * x[0]) * np.cos(x[1]) + np.sin(x[0])


def tf1_constraint(x):
    return np.cos(x[0]) * np.cos(x[1]) - np.sin(x[0]) * np.sin(x[1]) - 0.5


def tf2_objective(x):
    return (x[0] - 1) ** 2 + (x[1] - 0.5) ** 2


def tf2_c1(x):
    return ((x[0] - 3) ** 2 + (x[1] + 2) ** 2) * np.exp(-(x[1] ** 7)) - 12


def tf2_c2(x):
    return 10 * x[0] + x[1] - 7


def tf2_c3(x):
    return (x[0] - 0.5) ** 2 + (x[1] - 0.5) ** 2 - 0.2


def branin_objective(x):
    return (x[0] - 10) ** 2 + (x[1] - 15) ** 2


BRANIN_COS_CANONICAL = 10 * (1 - 1 / (8 * math.pi))
BRANIN_COS_LITERAL = 10 * (1 - 8 / math.pi)


def _branin_core(x1):
    return 5.1 / (4 * math.pi ** 2) * x1 ** 2 - 5 / math.pi * x1 + 6


def make_branin_constraint(coef: float):
    def branin_constraint(x):
        return (x[1] - _branin_core(x[0])) ** 2 + coef * np.cos(x[0]) + 5

    return branin_constraint


def tf1(x):
    return TF1.evaluate(x)


def tf2(x):
    return TF2.evaluate(x)


def branin_c(x, literal: bool = False):
    return (BRANIN_LITERAL if literal else BRANIN).evaluate(x)


# --- analytic points on one constraint's zero set, used to seed oracle grids ---

def _tf1_boundary(n):
    # cos(x1 + x2) = 0.5 on x1 + x2 = pi/3
    x1 = np.linspace(0.0, math.pi / 3, n)
    return np.column_stack([x1, math.pi / 3 - x1])


def _tf2_boundary(n):
    # 10 x1 + x2 = 7; all points on this segment satisfy the other two constraints
    x2 = np.linspace(0.0, 1.0, n)
    return np.column_stack([(7.0 - x2) / 10.0, x2])


def _branin_boundary(coef):
    def points(n):
        x1 = np.linspace(-5.0, 10.0, 20001)
        rad = -(coef * np.cos(x1) + 5.0)
        ok = rad >= 0
        x1, root = x1[ok], np.sqrt(rad[ok])
        cand = np.vstack([
            np.column_stack([x1, _branin_core(x1) + root]),
            np.column_stack([x1, _branin_core(x1) - root]),
        ])
        cand = cand[(cand[:, 1] >= 0.0) & (cand[:, 1] <= 15.0)]
        idx = np.linspace(0, len(cand) - 1, n).round().astype(int)
        return cand[idx]

    return points


def _linear_boundary(n):
    return np.column_stack([np.full(n, 0.5), np.linspace(0.0, 1.0, n)])


TF1 = BenchmarkProblem(
    ProblemSpec(SearchSpace((0.0, 0.0), (6.0, 6.0)), 1, MINIMIZE, "tf1"),
    tf1_objective, (tf1_constraint,), (50, 10), _tf1_boundary,
)
TF2 = BenchmarkProblem(
    ProblemSpec(SearchSpace((0.0, 0.0), (1.0, 1.0)), 3, MAXIMIZE, "tf2"),
    tf2_objective, (tf2_c1, tf2_c2, tf2_c3), (160, 30), _tf2_boundary,
)
BRANIN = BenchmarkProblem(
    ProblemSpec(SearchSpace((-5.0, 0.0), (10.0, 15.0)), 1, MAXIMIZE, "branin"),
    branin_objective, (make_branin_constraint(BRANIN_COS_CANONICAL),), (200, 30),
    _branin_boundary(BRANIN_COS_CANONICAL),
)
BRANIN_LITERAL = BenchmarkProblem(
    ProblemSpec(SearchSpace((-5.0, 0.0), (10.0, 15.0)), 1, MAXIMIZE, "branin_literal"),
    branin_objective, (make_branin_constraint(BRANIN_COS_LITERAL),), (200, 30),
    _branin_boundary(BRANIN_COS_LITERAL),
)
LINEAR = BenchmarkProblem(
    ProblemSpec(SearchSpace((0.0, 0.0), (1.0, 1.0)), 1, MINIMIZE, "linear"),
    lambda x: -x[0], (lambda x: x[0] - 0.5,), (30, 10), _linear_boundary,
)

BENCHMARKS = {p.name: p for p in (TF1, TF2, BRANIN, BRANIN_LITERAL, LINEAR)}


def get_benchmark(name: str) -> BenchmarkProblem:
    try:
        return BENCHMARKS[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {sorted(BENCHMARKS)}") from None


def regular_grid(space: SearchSpace, resolution: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, resolution) for lo, hi in zip(space.lower, space.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def feasible_grid_oracle(p: BenchmarkProblem, resolution: int):
    """Exhaustive grid evaluation of a 2-D problem.

    Returns ``(mask, best)`` where ``mask`` has shape ``(resolution, resolution)``
    (axis 0 = x1) and ``best`` is the best feasible objective in the problem's
    native sense, or ``None`` when no grid point is feasible.
    """
    if p.spec.dimension != 2:
        raise ValueError("grid oracles are only defined for 2-D problems")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    X = regular_grid(p.spec.space, resolution)
    f, C = p.evaluate_grid(X)
    feasible = np.all(C <= 0.0, axis=1)
    mask = feasible.reshape(resolution, resolution)
    if not feasible.any():
        return mask, None
    sign = sense_sign(p.sense)
    best = float(sign * np.min(sign * f[feasible]))
    return mask, best


def boundary_augmented_grid(p: BenchmarkProblem, resolution: int = 101, n_boundary: int = 100) -> np.ndarray:
    X = regular_grid(p.spec.space, resolution)
    if p.boundary_points is None:
        return X
    return np.vstack([X, p.boundary_points(n_boundary)])


def exact_tier1(p: BenchmarkProblem, X) -> tuple[np.ndarray, np.ndarray]:
    """Tier-1 values with the true constraints standing in for GP means (alpha = 0).

    Constraint values within ``BOUNDARY_SNAP`` of zero are snapped to exactly 0
    so analytically constructed boundary points are recognized despite rounding.
    Returns ``(F1, feasible)``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _, C = p.evaluate_grid(X)
    C = np.where(np.abs(C) <= BOUNDARY_SNAP, 0.0, C)
    F1 = tier1_values(C)
    feasible = np.all(C <= 0.0, axis=1)
    return F1, feasible


def _any_dominates(A: np.ndarray, B: np.ndarray, chunk: int = 512) -> np.ndarray:
    """For each row of ``B``: is it Pareto-dominated by some row of ``A``?"""
    out = np.zeros(B.shape[0], dtype=bool)
    for s in range(0, B.shape[0], chunk):
        Bc = B[s:s + chunk]
        le = (A[:, None, :] <= Bc[None, :, :]).all(axis=-1)
        lt = (A[:, None, :] < Bc[None, :, :]).any(axis=-1)
        out[s:s + chunk] = (le & lt).any(axis=0)
    return out


def theorem1_check(p: BenchmarkProblem, grid=None) -> bool:
    """Check that the tier-1 Pareto set coincides with the feasible set on ``grid``.

    (a) no grid point dominates a feasible point under F1, and (b) every
    infeasible point is dominated by some feasible point. The grid must contain
    a feasible point lying on a constraint boundary; otherwise (b) is not
    guaranteed and a ``ValueError`` is raised.
    """
    X = boundary_augmented_grid(p) if grid is None else np.atleast_2d(np.asarray(grid, dtype=float))
    if p.spec.num_constraints < 1:
        raise ValueError("tier 1 needs at least one constraint")
    F1, feasible = exact_tier1(p, X)
    on_boundary = feasible & (F1[:, 0] == 0.0) & (F1[:, 1] == 0.0)
    if not on_boundary.any():
        raise ValueError("grid has no feasible point on a constraint boundary")
    part_a = not _any_dominates(F1, F1[feasible]).any()
    infeasible = ~feasible
    part_b = bool(_any_dominates(F1[feasible], F1[infeasible]).all()) if infeasible.any() else True
    return bool(part_a and part_b)

