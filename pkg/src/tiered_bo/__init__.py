"""Tiered-ensemble constrained Bayesian optimization.

The optimizer fits one Gaussian process per black-box output and proposes
points that are Pareto-optimal first under a constraint tier
``[max_i(mu_i - alpha sigma_i), min_i |mu_i - alpha sigma_i|]`` and then, among
those, under an objective tier ``[LCB, -PI, -EI]``.

>>> from tiered_bo import get_benchmark, EngineConfig, run
>>> p = get_benchmark("tf1")
>>> rec = run(p.spec, EngineConfig(initial_samples=10, total_budget=50, seed=0), p)  # doctest: +SKIP
>>> rec.summary.best  # doctest: +SKIP
"""

from .acquisition import AcquisitionConfig, SurrogateBundle, ei, f_cv1, f_cv2, lcb, pi, prob_feasible
from .bench import BENCHMARKS, BenchmarkProblem, feasible_grid_oracle, get_benchmark, theorem1_check
from .dominance import ScoredCandidate, combined_compare, multi_dominance_rank, nondominated_sort, pareto_dominates
from .engine import EngineConfig, RunAborted, RunRecord, run, run_baseline, run_trace, summarize_runs
from .evaluator import EvaluatorDescriptor, ExternalEvaluator, external_evaluate
from .gp import FitConfig, GpModel, KernelParams, fit, predict
from .harness import ExperimentConfig, emit_convergence, run_experiment
from .inner import InnerOptConfig, optimize_acquisitions, pick_candidate
from .problem import Dataset, Evaluation, ProblemSpec, SearchSpace, best_feasible, is_feasible, latin_hypercube

__version__ = "0.1.0"

__all__ = [
    "AcquisitionConfig", "SurrogateBundle", "ei", "f_cv1", "f_cv2", "lcb", "pi", "prob_feasible",
    "BENCHMARKS", "BenchmarkProblem", "feasible_grid_oracle", "get_benchmark", "theorem1_check",
    "ScoredCandidate", "combined_compare", "multi_dominance_rank", "nondominated_sort", "pareto_dominates",
    "EngineConfig", "RunAborted", "RunRecord", "run", "run_baseline", "run_trace", "summarize_runs",
    "EvaluatorDescriptor", "ExternalEvaluator", "external_evaluate",
    "FitConfig", "GpModel", "KernelParams", "fit", "predict",
    "ExperimentConfig", "emit_convergence", "run_experiment",
    "InnerOptConfig", "optimize_acquisitions", "pick_candidate",
    "Dataset", "Evaluation", "ProblemSpec", "SearchSpace", "best_feasible", "is_feasible", "latin_hypercube",
]
