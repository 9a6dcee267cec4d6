"""Black-box evaluators: built-in benchmarks and an external line protocol.

External protocol (UTF-8, one JSON object per line, one request in flight)::

    -> {"id": 1, "x": [raw coordinates]}
    <- {"id": 1, "f": 0.25, "c": [-1.0, 0.3]}

The child process is started once per run and reused for every evaluation.
"""

from __future__ import annotations

import json
import math
import numbers
import queue
import subprocess
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .problem import MAXIMIZE, MINIMIZE, ProblemSpec, SearchSpace

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

DEFAULT_TIMEOUT = 300.0


class EvaluatorError(RuntimeError):
    """Base class for external evaluator failures."""


class EvaluatorTimeout(EvaluatorError):
    pass


class EvaluatorExited(EvaluatorError):
    pass


class MalformedResponse(EvaluatorError):
    pass


class IdMismatch(EvaluatorError):
    pass


class ArityError(EvaluatorError):
    pass


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EvaluatorDescriptor:
    mode: str
    name: str
    command: tuple[str, ...] = ()
    dimension: int | None = None
    lower: tuple[float, ...] = ()
    upper: tuple[float, ...] = ()
    num_constraints: int | None = None
    sense: str = MINIMIZE
    timeout: float = DEFAULT_TIMEOUT
    cwd: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in ("builtin", "external"):
            raise ConfigError(f"evaluator mode must be 'builtin' or 'external', got {self.mode!r}")
        if self.mode == "external":
            missing = [k for k in ("dimension", "num_constraints") if getattr(self, k) is None]
            if not self.lower or not self.upper:
                missing.append("lower/upper")
            if missing:
                raise ConfigError(f"external evaluator needs explicit {', '.join(missing)}")
            if not self.command:
                raise ConfigError("external evaluator needs a command")
            if len(self.lower) != self.dimension or len(self.upper) != self.dimension:
                raise ConfigError(
                    f"bounds have length {len(self.lower)}/{len(self.upper)}, dimension is {self.dimension}"
                )
        if self.sense not in (MINIMIZE, MAXIMIZE):
            raise ConfigError(f"sense must be 'minimize' or 'maximize', got {self.sense!r}")

    def problem_spec(self) -> ProblemSpec:
        if self.mode != "external":
            raise ConfigError("builtin descriptors resolve through the benchmark registry")
        space = SearchSpace(tuple(self.lower), tuple(self.upper))
        return ProblemSpec(space, int(self.num_constraints), self.sense, self.name)

    @classmethod
    def from_toml(cls, path: str | Path) -> "EvaluatorDescriptor":
        path = Path(path)
        with path.open("rb") as fh:
            data = tomllib.load(fh)
        table = data.get("evaluator", data)
        cmd = table.get("command")
        if isinstance(cmd, str):
            cmd = cmd.split()
        try:
            return cls(
                mode=table.get("mode", "external"),
                name=table.get("name", path.stem),
                command=tuple(cmd or ()),
                dimension=table.get("dimension"),
                lower=tuple(float(v) for v in table.get("lower", ())),
                upper=tuple(float(v) for v in table.get("upper", ())),
                num_constraints=table.get("num_constraints"),
                sense=table.get("sense", MINIMIZE),
                timeout=float(table.get("timeout", DEFAULT_TIMEOUT)),
                cwd=str(path.parent),
            )
        except TypeError as exc:
            raise ConfigError(f"{path}: {exc}") from None


def _is_number(v) -> bool:
    return isinstance(v, numbers.Real) and not isinstance(v, bool)


class ExternalEvaluator:
    """Callable ``x_raw -> (f, c)`` backed by a long-lived child process."""

    def __init__(self, desc: EvaluatorDescriptor):
        self.desc = desc
        self._next_id = 0
        self._lines: queue.Queue = queue.Queue()
        self.proc = subprocess.Popen(
            list(desc.command), stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            text=True, encoding="utf-8", bufsize=1, cwd=desc.cwd,
        )
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def __call__(self, x) -> tuple[float, list[float]]:
        self._next_id += 1
        rid = self._next_id
        request = json.dumps({"id": rid, "x": [float(v) for v in np.asarray(x, dtype=float)]})
        try:
            self.proc.stdin.write(request + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise EvaluatorExited(
                f"evaluator exited before request {rid} (return code {self.proc.poll()})"
            ) from None
        try:
            line = self._lines.get(timeout=self.desc.timeout)
        except queue.Empty:
            self.close(kill=True)
            raise EvaluatorTimeout(
                f"no response to request {rid} within {self.desc.timeout:g} s; evaluator killed"
            ) from None
        if line is None:
            code = self.proc.wait()
            raise EvaluatorExited(f"evaluator exited (return code {code}) before answering request {rid}")
        return self._parse(line, rid)

    def _parse(self, line: str, rid: int) -> tuple[float, list[float]]:
        text = line.rstrip("\n")
        try:
            msg = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"unparseable response {text!r}: {exc.msg}") from None
        if not isinstance(msg, dict) or not {"id", "f", "c"} <= msg.keys():
            raise MalformedResponse(f"response must be an object with id, f, c: {text!r}")
        if msg["id"] != rid:
            raise IdMismatch(f"response id {msg['id']!r} does not match request id {rid}")
        f = msg["f"]
        if not _is_number(f) or not math.isfinite(f):
            raise MalformedResponse(f"non-numeric objective f in response {text!r}")
        c = msg["c"]
        if not isinstance(c, list) or not all(_is_number(v) for v in c):
            raise MalformedResponse(f"constraint list c must hold numbers in response {text!r}")
        if len(c) != self.desc.num_constraints:
            raise ArityError(
                f"expected {self.desc.num_constraints} constraint values, received {len(c)}"
            )
        return float(f), [float(v) for v in c]

    def close(self, kill: bool = False):
        if self.proc.poll() is None:
            if kill:
                self.proc.kill()
            else:
                try:
                    self.proc.stdin.close()
                    self.proc.wait(timeout=5)
                except (OSError, subprocess.TimeoutExpired):
                    self.proc.kill()
            self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_evaluate(evaluator: ExternalEvaluator, x: Sequence[float]) -> tuple[float, list[float]]:
    return evaluator(x)
