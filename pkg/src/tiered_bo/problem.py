"""Problem definition, search-space geometry and the evaluation dataset.

All optimizer-facing coordinates live in the unit hypercube; raw bounds are
only applied at the evaluator boundary. Objectives are stored in their native
sense and converted to minimization form on demand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

MINIMIZE = "minimize"
MAXIMIZE = "maximize"

#: ``(x_raw) -> (f, c)`` black-box evaluation callable.
Evaluator = Callable[[np.ndarray], "tuple[float, Sequence[float]]"]


@dataclass(frozen=True)
class SearchSpace:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        if len(lower) == 0 or len(lower) != len(upper):
            raise ValueError("lower and upper bounds must be non-empty and of equal length")
        for j, (lo, hi) in enumerate(zip(lower, upper)):
            if not lo < hi:
                raise ValueError(f"bound {j}: lower {lo} must be < upper {hi}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def unit(cls, dimension: int) -> "SearchSpace":
        return cls((0.0,) * dimension, (1.0,) * dimension)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def _lo(self) -> np.ndarray:
        return np.asarray(self.lower)

    @property
    def _span(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    def to_unit(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self._lo) / self._span

    def from_unit(self, u) -> np.ndarray:
        return self._lo + np.asarray(u, dtype=float) * self._span

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(
            x.shape == (self.dimension,)
            and np.all(x >= self._lo - tol)
            and np.all(x <= np.asarray(self.upper) + tol)
        )


@dataclass(frozen=True)
class ProblemSpec:
    space: SearchSpace
    num_constraints: int
    objective_sense: str = MINIMIZE
    name: str = "problem"

    def __post_init__(self):
        if self.num_constraints < 0:
            raise ValueError("num_constraints must be >= 0")
        if self.objective_sense not in (MINIMIZE, MAXIMIZE):
            raise ValueError(f"unknown objective sense {self.objective_sense!r}")

    @property
    def dimension(self) -> int:
        return self.space.dimension

    def to_internal(self, f):
        """Native objective value(s) -> minimization form."""
        return sense_sign(self.objective_sense) * f

    def to_native(self, f):
        return sense_sign(self.objective_sense) * f


def sense_sign(sense: str) -> float:
    if sense == MINIMIZE:
        return 1.0
    if sense == MAXIMIZE:
        return -1.0
    raise ValueError(f"unknown objective sense {sense!r}")


@dataclass(frozen=True)
class Evaluation:
    """One evaluated design. ``x`` is in raw coordinates, ``f`` in native sense."""

    x: tuple[float, ...]
    f: float
    c: tuple[float, ...]
    tag: str = "selected"

    def __post_init__(self):
        if self.tag not in ("initial", "selected"):
            raise ValueError(f"tag must be 'initial' or 'selected', got {self.tag!r}")
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        object.__setattr__(self, "f", float(self.f))

    @property
    def feasible(self) -> bool:
        return is_feasible(self)


def is_feasible(e: Evaluation) -> bool:
    return all(ci <= 0.0 for ci in e.c)


@dataclass
class Dataset:
    """Append-only record of evaluations in evaluation order."""

    records: list[Evaluation] = field(default_factory=list)

    def append(self, e: Evaluation) -> None:
        self.records.append(e)

    def extend(self, es: Iterable[Evaluation]) -> None:
        for e in es:
            self.append(e)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def inputs(self) -> np.ndarray:
        return np.array([e.x for e in self.records], dtype=float)

    def objectives(self) -> np.ndarray:
        return np.array([e.f for e in self.records], dtype=float)

    def constraints(self) -> np.ndarray:
        """``(N, C)`` array of constraint values."""
        if not self.records:
            return np.zeros((0, 0))
        return np.array([e.c for e in self.records], dtype=float).reshape(len(self.records), -1)

    def feasibility(self) -> np.ndarray:
        return np.array([e.feasible for e in self.records], dtype=bool)


def best_feasible(d: Dataset | Iterable[Evaluation], sense: str = MINIMIZE) -> Evaluation | None:
    """Feasible record with the best objective in ``sense``, or ``None``."""
    sign = sense_sign(sense)
    best = None
    for e in d:
        if e.feasible and (best is None or sign * e.f < sign * best.f):
            best = e
    return best


def latin_hypercube(space: SearchSpace, n: int, seed=None) -> np.ndarray:
    """``n`` stratified samples inside ``space``, one per stratum on every axis.

    ``seed`` may be an int, ``None`` or a ``numpy.random.Generator``.
    """
    if n < 1:
        raise ValueError("latin_hypercube needs n >= 1")
    rng = np.random.default_rng(seed)
    d = space.dimension
    u = np.empty((n, d))
    for j in range(d):
        strata = rng.permutation(n)
        u[:, j] = (strata + rng.random(n)) / n
    # stay strictly inside the last stratum's half-open interval
    np.clip(u, 0.0, np.nextafter(1.0, 0.0), out=u)
    return space.from_unit(u)
