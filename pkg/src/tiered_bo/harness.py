"""Experiment harness: repeated runs, result files, summary tables.

Layout of ``output_dir`` after :func:`run_experiment`::

    <algo>/run_<seed>.csv     iteration trace, one row per true evaluation
    <algo>/run_<seed>.json    full run record (round-trips through RunRecord)
    <algo>_summary.json       statistics over the algorithm's runs
    comparison.md             Best | Worst | Mean | Std | CV (%) table
    convergence.csv           mean best-feasible value per iteration

Run ``k`` (0-based) of every algorithm uses seed ``base_seed + k``, so the
algorithms see identical initial designs for the same ``k``.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

from .acquisition import AcquisitionConfig
from .bench import BENCHMARKS
from .engine import ALGORITHMS, EngineConfig, RunAborted, RunRecord, Summary, run, summarize_runs
from .evaluator import ConfigError, EvaluatorDescriptor, ExternalEvaluator
from .gp import FitConfig
from .inner import InnerOptConfig
from .problem import ProblemSpec

log = logging.getLogger(__name__)

#: Row order of the comparison table.
TABLE_ORDER = ("pso", "pipf", "eipf", "mace", "trace")
TABLE_COLUMNS = ("Algorithm", "Best", "Worst", "Mean", "Std", "CV (%)")


@dataclass(frozen=True)
class ExperimentConfig:
    problem: Union[str, EvaluatorDescriptor]
    algorithms: tuple[str, ...] = ("trace",)
    budget: int = 50
    init: int = 10
    num_runs: int = 10
    base_seed: int = 0
    output_dir: Path = Path("results")
    inner: InnerOptConfig = InnerOptConfig()
    acq: AcquisitionConfig = AcquisitionConfig()
    gp: FitConfig = FitConfig()
    workers: Optional[int] = None  # None -> os.cpu_count()

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "output_dir", Path(self.output_dir))
        if self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")
        if not self.algorithms:
            raise ConfigError("no algorithms given")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad:
            raise ConfigError(f"unknown algorithm(s) {bad}; choose from {list(ALGORITHMS)}")
        if not 1 <= self.init <= self.budget:
            raise ConfigError("need 1 <= init <= budget")
        if isinstance(self.problem, str) and self.problem not in BENCHMARKS:
            raise ConfigError(f"unknown problem {self.problem!r}; built-ins are {sorted(BENCHMARKS)}")
        if isinstance(self.problem, EvaluatorDescriptor) and self.problem.mode != "external":
            if self.problem.name not in BENCHMARKS:
                raise ConfigError(f"unknown builtin problem {self.problem.name!r}")

    def seeds(self) -> list[int]:
        return [self.base_seed + k for k in range(self.num_runs)]

    def engine_config(self, algorithm: str, seed: int) -> EngineConfig:
        return EngineConfig(
            initial_samples=self.init, total_budget=self.budget, algorithm=algorithm,
            seed=seed, inner=self.inner, acq=self.acq, gp=self.gp,
        )


def resolve_problem(problem: Union[str, EvaluatorDescriptor]) -> ProblemSpec:
    if isinstance(problem, str):
        return BENCHMARKS[problem].spec
    if problem.mode == "builtin":
        return BENCHMARKS[problem.name].spec
    return problem.problem_spec()


def load_problem(arg: str) -> Union[str, EvaluatorDescriptor]:
    """Benchmark name or path to an evaluator TOML file."""
    if arg in BENCHMARKS:
        return arg
    path = Path(arg)
    if path.suffix == ".toml":
        if not path.is_file():
            raise ConfigError(f"evaluator config {arg!r} not found")
        return EvaluatorDescriptor.from_toml(path)
    raise ConfigError(f"unknown problem {arg!r}; built-ins are {sorted(BENCHMARKS)}")


# ---------------------------------------------------------------- run files

def _fmt(v: float) -> str:
    return repr(float(v))


def csv_header(d: int, C: int) -> list[str]:
    return (["iter"] + [f"x_{j + 1}" for j in range(d)] + ["f"]
            + [f"c_{i + 1}" for i in range(C)] + ["feasible", "best_feasible"])


def write_run_csv(record: RunRecord, path: Path, d: int, C: int) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(csv_header(d, C))
        for it in record.iterations:
            w.writerow(
                [it.index] + [_fmt(v) for v in it.x] + [_fmt(it.f)] + [_fmt(v) for v in it.c]
                + [int(it.feasible), "" if it.best_feasible is None else _fmt(it.best_feasible)]
            )


def read_run_csv(path: Path) -> list[dict]:
    """Rows of a run CSV with numbers parsed; ``best_feasible`` is None if empty."""
    rows = []
    with open(path, newline="") as fh:
        for raw in csv.DictReader(fh):
            row = {}
            for k, v in raw.items():
                if k == "iter":
                    row[k] = int(v)
                elif k == "feasible":
                    row[k] = v == "1"
                elif k == "best_feasible":
                    row[k] = None if v == "" else float(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


def write_run_json(record: RunRecord, path: Path) -> None:
    path.write_text(json.dumps(record.to_dict(), indent=1) + "\n")


def read_run_json(path: Path) -> RunRecord:
    return RunRecord.from_dict(json.loads(Path(path).read_text()))


# ---------------------------------------------------------------- summaries

def _cell(v: Optional[float]) -> str:
    return "-" if v is None else f"{v:.4f}"


def comparison_table(summaries: dict[str, Summary]) -> str:
    """Markdown table, rows in the fixed baseline-to-TRACE order."""
    lines = [" | ".join(TABLE_COLUMNS), " | ".join("---" for _ in TABLE_COLUMNS)]
    for algo in TABLE_ORDER:
        if algo not in summaries:
            continue
        s = summaries[algo]
        lines.append(" | ".join([algo.upper(), _cell(s.best), _cell(s.worst), _cell(s.mean),
                                 _cell(s.std), _cell(s.cv_percent)]))
    return "\n".join(lines) + "\n"


def parse_comparison_table(text: str) -> dict[str, dict[str, Optional[float]]]:
    rows = {}
    for line in text.strip().splitlines()[2:]:
        cells = [c.strip() for c in line.split("|")]
        rows[cells[0].lower()] = {
            col: None if v == "-" else float(v) for col, v in zip(TABLE_COLUMNS[1:], cells[1:])
        }
    return rows


def emit_convergence(records: Iterable[RunRecord], path: Path) -> Path:
    """Long-format CSV ``algorithm,iter,mean_best_feasible,count``.

    At each iteration the mean runs over the records that already hold a
    feasible point; ``count`` says how many that is. With none, the mean
    cell is left empty.
    """
    by_algo: dict[str, list[RunRecord]] = {}
    for r in records:
        by_algo.setdefault(r.algorithm, []).append(r)
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["algorithm", "iter", "mean_best_feasible", "count"])
        for algo in sorted(by_algo, key=lambda a: TABLE_ORDER.index(a) if a in TABLE_ORDER else len(TABLE_ORDER)):
            runs = by_algo[algo]
            n_iter = max(len(r.iterations) for r in runs)
            for t in range(n_iter):
                vals = [r.iterations[t].best_feasible for r in runs
                        if t < len(r.iterations) and r.iterations[t].best_feasible is not None]
                mean = _fmt(math.fsum(vals) / len(vals)) if vals else ""
                w.writerow([algo, t + 1, mean, len(vals)])
    return path


def read_convergence(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {"algorithm": r["algorithm"], "iter": int(r["iter"]),
             "mean_best_feasible": None if r["mean_best_feasible"] == "" else float(r["mean_best_feasible"]),
             "count": int(r["count"])}
            for r in csv.DictReader(fh)
        ]


# ---------------------------------------------------------------- execution

def _make_evaluator(problem: Union[str, EvaluatorDescriptor]):
    if isinstance(problem, str):
        return BENCHMARKS[problem], None
    if problem.mode == "builtin":
        return BENCHMARKS[problem.name], None
    ev = ExternalEvaluator(problem)
    return ev, ev


def _run_one(cfg: ExperimentConfig, algorithm: str, seed: int) -> RunRecord:
    spec = resolve_problem(cfg.problem)
    try:
        evaluator, owned = _make_evaluator(cfg.problem)
    except OSError as exc:
        raise ConfigError(f"cannot start evaluator: {exc}") from None
    try:
        return run(spec, cfg.engine_config(algorithm, seed), evaluator)
    except RunAborted as exc:
        log.error("%s seed %d aborted: %s", algorithm, seed, exc)
        return exc.record
    finally:
        if owned is not None:
            owned.close()


@dataclass
class ExperimentResult:
    status: int
    records: dict[str, list[RunRecord]] = field(default_factory=dict)
    summaries: dict[str, Summary] = field(default_factory=dict)
    table: str = ""


def execute_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run every (algorithm, seed) pair, write all result files, return records."""
    spec = resolve_problem(cfg.problem)
    d, C = spec.dimension, spec.num_constraints
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(a, s) for a in cfg.algorithms for s in cfg.seeds()]

    workers = cfg.workers or os.cpu_count() or 1
    if workers <= 1 or len(jobs) == 1:
        done = [_run_one(cfg, a, s) for a, s in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            done = list(pool.map(_run_one, [cfg] * len(jobs), *zip(*jobs)))

    result = ExperimentResult(status=0)
    for (algo, seed), rec in zip(jobs, done):
        adir = out / algo
        adir.mkdir(exist_ok=True)
        write_run_csv(rec, adir / f"run_{seed}.csv", d, C)
        write_run_json(rec, adir / f"run_{seed}.json")
        result.records.setdefault(algo, []).append(rec)
        if rec.error is not None:
            result.status = 1

    for algo, recs in result.records.items():
        complete = [r for r in recs if r.error is None and r.summary is not None]
        if not complete:
            continue
        s = summarize_runs(complete)
        result.summaries[algo] = s
        (out / f"{algo}_summary.json").write_text(json.dumps(s.to_dict(), indent=1) + "\n")
    result.table = comparison_table(result.summaries)
    (out / "comparison.md").write_text(result.table)
    emit_convergence([r for recs in result.records.values() for r in recs], out / "convergence.csv")
    return result


def run_experiment(cfg: ExperimentConfig) -> int:
    """Exit status: 0 when every run completed, 1 if any aborted."""
    return execute_experiment(cfg).status
