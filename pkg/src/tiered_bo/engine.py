"""Outer optimization loops: tiered-ensemble BO and the comparison baselines.

Every algorithm shares the same Latin hypercube initialization and records
each true evaluation in order, so a completed run always holds exactly
``total_budget`` evaluations.

Algorithms
----------
``trace``  two-tier acquisition ensemble: constraint tier [f_cv1, f_cv2], then
           objective tier [LCB, -PI, -EI].
``mace``   single-level Pareto ensemble over [LCB, -EI*PF, -PI*PF].
``eipf``   maximize EI * PF.
``pipf``   maximize PI * PF.
``pso``    penalty particle swarm on the true evaluator, no surrogate.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .acquisition import (
    AcquisitionConfig,
    SurrogateBundle,
    ei,
    incumbent,
    lcb,
    pi,
    prob_feasible,
)
from .gp import FitConfig, fit
from .inner import InnerOptConfig, optimize_acquisitions, pick_candidate, swarm_search
from .problem import Dataset, Evaluation, ProblemSpec, latin_hypercube, sense_sign

log = logging.getLogger(__name__)

ALGORITHMS = ("trace", "mace", "eipf", "pipf", "pso")
SURROGATE_ALGORITHMS = ("trace", "mace", "eipf", "pipf")
PSO_PENALTY = 1e6

Evaluator = Callable[[np.ndarray], "tuple[float, Sequence[float]]"]


@dataclass(frozen=True)
class EngineConfig:
    initial_samples: int = 10
    total_budget: int = 50
    algorithm: str = "trace"
    seed: int = 0
    inner: InnerOptConfig = InnerOptConfig()
    acq: AcquisitionConfig = AcquisitionConfig()
    gp: FitConfig = FitConfig()
    pso_population: int = 20

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not 1 <= self.initial_samples <= self.total_budget:
            raise ValueError("need 1 <= initial_samples <= total_budget")


@dataclass
class IterationRecord:
    index: int
    x: tuple[float, ...]
    f: float
    c: tuple[float, ...]
    feasible: bool
    best_feasible: Optional[float]
    tag: str = "selected"


@dataclass
class RunSummary:
    best: Optional[float]
    cv_percent: float
    cv_defined: bool
    n_selected: int
    n_infeasible_selected: int
    wall_time: float = 0.0


@dataclass
class RunRecord:
    problem: str
    algorithm: str
    seed: int
    sense: str
    initial_samples: int
    iterations: list[IterationRecord] = field(default_factory=list)
    summary: Optional[RunSummary] = None
    error: Optional[str] = None

    @property
    def final_dataset(self) -> Dataset:
        return Dataset([Evaluation(it.x, it.f, it.c, it.tag) for it in self.iterations])

    @property
    def best_trace(self) -> list[Optional[float]]:
        return [it.best_feasible for it in self.iterations]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunRecord":
        data = dict(data)
        its = [
            IterationRecord(
                index=int(it["index"]), x=tuple(it["x"]), f=float(it["f"]), c=tuple(it["c"]),
                feasible=bool(it["feasible"]),
                best_feasible=None if it["best_feasible"] is None else float(it["best_feasible"]),
                tag=it.get("tag", "selected"),
            )
            for it in data.pop("iterations")
        ]
        summary = data.pop("summary")
        return cls(iterations=its, summary=None if summary is None else RunSummary(**summary), **data)


class RunAborted(RuntimeError):
    """A run stopped early; ``record`` holds everything evaluated so far."""

    def __init__(self, message: str, record: RunRecord):
        super().__init__(message)
        self.record = record


class _Recorder:
    """Evaluates raw points, appends to the dataset and tracks the incumbent."""

    def __init__(self, problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator):
        self.problem = problem
        self.evaluator = evaluator
        self.dataset = Dataset()
        self.sign = sense_sign(problem.objective_sense)
        self.record = RunRecord(
            problem=problem.name, algorithm=cfg.algorithm, seed=cfg.seed,
            sense=problem.objective_sense, initial_samples=cfg.initial_samples,
        )
        self._best: Optional[float] = None
        self._t0 = time.perf_counter()

    def evaluate(self, x_raw, tag: str) -> Evaluation:
        x_raw = np.asarray(x_raw, dtype=float)
        try:
            f, c = self.evaluator(x_raw)
        except Exception as exc:
            self.record.error = f"{type(exc).__name__}: {exc}"
            self.finish()
            raise RunAborted(f"evaluation {len(self.dataset) + 1} failed: {exc}", self.record) from exc
        c = tuple(float(v) for v in np.atleast_1d(np.asarray(c, dtype=float)))
        if len(c) != self.problem.num_constraints:
            self.record.error = (
                f"evaluator returned {len(c)} constraint values, expected {self.problem.num_constraints}"
            )
            self.finish()
            raise RunAborted(self.record.error, self.record)
        if not (math.isfinite(float(f)) and all(math.isfinite(v) for v in c)):
            self.record.error = f"non-finite evaluation at x={x_raw.tolist()}"
            self.finish()
            raise RunAborted(self.record.error, self.record)
        e = Evaluation(tuple(x_raw), float(f), c, tag)
        self.dataset.append(e)
        if e.feasible and (self._best is None or self.sign * e.f < self.sign * self._best):
            self._best = e.f
        self.record.iterations.append(IterationRecord(
            index=len(self.dataset), x=e.x, f=e.f, c=e.c, feasible=e.feasible,
            best_feasible=self._best, tag=tag,
        ))
        return e

    def finish(self) -> RunRecord:
        selected = [it for it in self.record.iterations if it.tag == "selected"]
        n_bad = sum(not it.feasible for it in selected)
        defined = len(selected) > 0
        self.record.summary = RunSummary(
            best=self._best,
            cv_percent=100.0 * n_bad / len(selected) if defined else 0.0,
            cv_defined=defined,
            n_selected=len(selected),
            n_infeasible_selected=n_bad,
            wall_time=time.perf_counter() - self._t0,
        )
        return self.record

    # unit-cube views for the surrogates
    def unit_inputs(self) -> np.ndarray:
        return self.problem.space.to_unit(self.dataset.inputs())

    def internal_objectives(self) -> np.ndarray:
        return self.sign * self.dataset.objectives()


def _fit_bundle(X, f_int, C, gp_cfg: FitConfig, seed: int) -> SurrogateBundle:
    cfg = replace(gp_cfg, seed=seed)
    obj = fit(X, f_int, cfg)
    cons = [fit(X, C[:, i], replace(cfg, seed=seed + i + 1)) for i in range(C.shape[1])]
    return SurrogateBundle(obj, cons)


def _initialize(rec: _Recorder, cfg: EngineConfig, rng) -> None:
    space = rec.problem.space
    for x in latin_hypercube(space, cfg.initial_samples, rng):
        rec.evaluate(x, "initial")


def _objective_scores(bundle: SurrogateBundle, X, acq: AcquisitionConfig):
    mu, sigma = bundle.objective_gp.predict(X)
    pf = prob_feasible(bundle, X) if bundle.num_constraints else np.ones_like(mu)
    return mu, sigma, pf


def _baseline_scorer(algorithm: str, bundle: SurrogateBundle, acq: AcquisitionConfig):
    def score(X):
        mu, sigma, pf = _objective_scores(bundle, X, acq)
        if algorithm == "mace":
            F2 = np.column_stack([lcb(mu, sigma, acq), -ei(mu, sigma, acq) * pf, -pi(mu, sigma, acq) * pf])
        elif algorithm == "eipf":
            F2 = (-ei(mu, sigma, acq) * pf)[:, None]
        else:
            F2 = (-pi(mu, sigma, acq) * pf)[:, None]
        return None, F2

    return score


def _bo_loop(problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator) -> RunRecord:
    rng = np.random.default_rng(cfg.seed)
    rec = _Recorder(problem, cfg, evaluator)
    _initialize(rec, cfg, rng)
    d = problem.dimension
    for _ in range(cfg.total_budget - cfg.initial_samples):
        gp_seed, inner_seed = (int(s) for s in rng.integers(2**31 - 1, size=2))
        X = rec.unit_inputs()
        f_int = rec.internal_objectives()
        C = rec.dataset.constraints().reshape(len(X), problem.num_constraints)
        bundle = _fit_bundle(X, f_int, C, cfg.gp, gp_seed)
        acq = cfg.acq.with_tau(incumbent(f_int, rec.dataset.feasibility()))
        inner = replace(cfg.inner, seed=inner_seed)
        if cfg.algorithm == "trace":
            archive = optimize_acquisitions(bundle, inner, acq, d)
        else:
            archive = swarm_search(_baseline_scorer(cfg.algorithm, bundle, acq), d, inner)
        u = pick_candidate(archive, X, rng)
        rec.evaluate(problem.space.from_unit(u), "selected")
    return rec.finish()


def run_trace(problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator) -> RunRecord:
    if problem.num_constraints < 1:
        raise ValueError("the tiered ensemble needs at least one constraint")
    if cfg.algorithm != "trace":
        cfg = replace(cfg, algorithm="trace")
    return _bo_loop(problem, cfg, evaluator)


def _penalized(rec: _Recorder, e: Evaluation) -> float:
    return rec.sign * e.f + PSO_PENALTY * sum(max(ci, 0.0) for ci in e.c)


def _run_pso(problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator) -> RunRecord:
    """Static-penalty PSO over the true evaluator, stopped at the evaluation budget."""
    rng = np.random.default_rng(cfg.seed)
    rec = _Recorder(problem, cfg, evaluator)
    _initialize(rec, cfg, rng)
    space = problem.space
    P, d = cfg.pso_population, problem.dimension
    ic = cfg.inner

    init = list(rec.dataset)
    scores = [_penalized(rec, e) for e in init]
    order = np.argsort(scores, kind="stable")[:P]
    pos = space.to_unit([init[i].x for i in order]).reshape(-1, d)
    fit_ = np.array([scores[i] for i in order])
    while len(pos) < P and len(rec.dataset) < cfg.total_budget:
        u = rng.random(d)
        e = rec.evaluate(space.from_unit(u), "selected")
        pos = np.vstack([pos, u])
        fit_ = np.r_[fit_, _penalized(rec, e)]
    n = len(pos)
    vel = rng.uniform(-ic.max_velocity, ic.max_velocity, size=(n, d))
    best_x, best_f = pos.copy(), fit_.copy()

    while len(rec.dataset) < cfg.total_budget:
        g = best_x[np.argmin(best_f)]
        r_c, r_s = rng.random((n, d)), rng.random((n, d))
        vel = ic.inertia * vel + ic.cognitive_coef * r_c * (best_x - pos) + ic.social_coef * r_s * (g - pos)
        np.clip(vel, -ic.max_velocity, ic.max_velocity, out=vel)
        pos = pos + vel
        out = (pos < 0.0) | (pos > 1.0)
        pos = np.clip(pos, 0.0, 1.0)
        vel[out] = 0.0
        for i in range(n):
            if len(rec.dataset) >= cfg.total_budget:
                break
            e = rec.evaluate(space.from_unit(pos[i]), "selected")
            s = _penalized(rec, e)
            if s < best_f[i]:
                best_x[i], best_f[i] = pos[i].copy(), s
    return rec.finish()


def run_baseline(problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator) -> RunRecord:
    if cfg.algorithm not in ("mace", "eipf", "pipf", "pso"):
        raise ValueError(f"{cfg.algorithm!r} is not a baseline algorithm")
    if cfg.algorithm == "pso":
        return _run_pso(problem, cfg, evaluator)
    return _bo_loop(problem, cfg, evaluator)


def run(problem: ProblemSpec, cfg: EngineConfig, evaluator: Evaluator) -> RunRecord:
    if cfg.algorithm == "trace":
        return run_trace(problem, cfg, evaluator)
    return run_baseline(problem, cfg, evaluator)


@dataclass(frozen=True)
class Summary:
    best: Optional[float]
    worst: Optional[float]
    mean: Optional[float]
    std: Optional[float]
    cv_percent: float
    feasible_run_count: int
    n_runs: int

    def to_dict(self) -> dict:
        return asdict(self)


def summarize_runs(records: Sequence[RunRecord]) -> Summary:
    """Best/worst/mean/sample-std of per-run bests (native sense) plus mean CV%.

    Runs without any feasible evaluation are left out of the statistics and
    only reduce ``feasible_run_count``.
    """
    if not records:
        raise ValueError("no run records to summarize")
    senses = {r.sense for r in records}
    if len(senses) != 1:
        raise ValueError("records mix objective senses")
    sign = sense_sign(senses.pop())
    bests = np.array([r.summary.best for r in records if r.summary.best is not None], dtype=float)
    cv = float(np.mean([r.summary.cv_percent for r in records]))
    if bests.size == 0:
        return Summary(None, None, None, None, cv, 0, len(records))
    internal = sign * bests
    std = float(np.std(bests, ddof=1)) if bests.size > 1 else 0.0
    return Summary(
        best=float(sign * internal.min()),
        worst=float(sign * internal.max()),
        mean=float(bests.mean()),
        std=std,
        cv_percent=cv,
        feasible_run_count=int(bests.size),
        n_runs=len(records),
    )
