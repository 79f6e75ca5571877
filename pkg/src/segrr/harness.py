"""Experiment configs, multi-seed runs, aggregation and CSV output."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from .errors import ConfigError, DivergenceError, ParameterError, SegrrError
from .metrics import ROW_METRICS
from .problems import GENERATORS, FiniteSumProblem, generate_problem, initial_point
from .sampling import REGIMES as SAMPLING_REGIMES
from .sampling import SamplingStrategy
from .schedules import REGIMES as STEP_REGIMES
from .schedules import RULES, build_schedule
from .solvers import SOLVERS, run_solver

CUSTOM_METRICS = ("theta_distance",)
METRICS = ROW_METRICS + CUSTOM_METRICS
DEFAULT_METRICS = ("relative_error", "dist_sq", "grad_norm_sq")
CSV_HEADER = ("epoch", "metric", "mean", "std", "nruns")

_number = {"type": "number"}
_pos_int = {"type": "integer", "minimum": 1}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "solver", "sampling", "schedule", "epochs", "seeds"],
    "properties": {
        "problem": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": list(GENERATORS)},
                "params": {"type": "object"},
                "seed": {"type": "integer", "minimum": 0},
                "file": {"type": "string"},
            },
            "oneOf": [{"required": ["kind", "params"]}, {"required": ["file"]}],
        },
        "solver": {"enum": list(SOLVERS)},
        "sampling": {"enum": list(SAMPLING_REGIMES)},
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "required": ["rule"],
            "properties": {
                "rule": {"enum": list(RULES)},
                "regime": {"enum": list(STEP_REGIMES)},
                "gamma1": {"type": "number", "exclusiveMinimum": 0},
                "gamma2": {"type": "number", "exclusiveMinimum": 0},
                "gamma_max": {"type": "number", "exclusiveMinimum": 0},
                "K": {"type": "integer", "minimum": 2},
                "multiplier": {"type": "number", "exclusiveMinimum": 0},
                "unchecked": {"type": "boolean"},
                "decay": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "gamma1_scale": _number, "gamma1_exponent": _number,
                        "gamma2_scale": _number, "gamma2_exponent": _number,
                        "offset": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
            },
        },
        "epochs": _pos_int,
        "seeds": {
            "type": "array",
            "minItems": 1,
            "uniqueItems": True,
            "items": {"type": "integer", "minimum": 0},
        },
        "metrics": {"type": "array", "uniqueItems": True, "items": {"enum": list(METRICS)}},
        "init": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["zeros", "normal", "explicit"]},
                "seed": {"type": "integer", "minimum": 0},
                "scale": _number,
                "values": {"type": "array", "items": _number},
            },
        },
        "per_iteration": {"type": "boolean"},
        "output": {"type": "string"},
    },
}

_GENERATOR_CLASS = {
    "quadratic-scsc": "strongly-monotone",
    "bilinear": "affine-monotone",
    "wgan-toy": "affine-monotone",
}


@dataclass(frozen=True)
class ExperimentConfig:
    problem: dict
    solver: str
    sampling: str
    schedule: dict
    epochs: int
    seeds: tuple
    metrics: tuple = DEFAULT_METRICS
    init: dict = field(default_factory=lambda: {"kind": "zeros"})
    per_iteration: bool = False
    output: Optional[str] = None
    base_dir: Optional[str] = None  # resolves relative problem files

    def with_overrides(self, seeds=None, epochs=None, output=None):
        kw = dict(self.__dict__)
        if seeds is not None:
            seeds = tuple(seeds)
            if not seeds:
                raise ConfigError("must list at least one seed", "seeds")
            if len(set(seeds)) != len(seeds):
                raise ConfigError("seeds must be distinct", "seeds")
            kw["seeds"] = seeds
        if epochs is not None:
            if epochs < 1:
                raise ConfigError("must be >= 1", "epochs")
            kw["epochs"] = int(epochs)
        if output is not None:
            kw["output"] = output
        return ExperimentConfig(**kw)


def _error_path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required" and isinstance(err.instance, dict):
        missing = [k for k in err.validator_value if k not in err.instance]
        parts += missing[:1]
    if err.validator == "additionalProperties" and isinstance(err.instance, dict):
        allowed = set(err.schema.get("properties", {}))
        extra = sorted(k for k in err.instance if k not in allowed)
        parts += extra[:1]
    return ".".join(parts) or "<root>"


def parse_config(text, base_dir=None):
    """Validate a JSON config document and return an :class:`ExperimentConfig`."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<document>") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = _error_path(err)
        if path == "seeds" and err.validator == "uniqueItems":
            raise ConfigError("seeds must be distinct", path)
        if path == "seeds" and err.validator == "minItems":
            raise ConfigError("must list at least one seed", path)
        raise ConfigError(err.message, path)

    problem = data["problem"]
    schedule = data["schedule"]
    if schedule["rule"] in ("theorem-constant", "horizon-aware", "switching") and "regime" not in schedule:
        raise ConfigError(f"rule {schedule['rule']!r} needs a regime", "schedule.regime")
    if schedule["rule"] == "constant" and "gamma1" not in schedule:
        raise ConfigError("constant rule needs gamma1", "schedule.gamma1")
    if schedule["rule"] == "switching" and schedule.get("regime") == "monotone":
        raise ConfigError("switching rules exist for strongly-monotone and affine regimes only",
                          "schedule.regime")
    problem_class = _GENERATOR_CLASS.get(problem.get("kind"))
    if (schedule.get("regime") == "strongly-monotone" and problem_class is not None
            and problem_class != "strongly-monotone" and not schedule.get("unchecked", False)):
        raise ConfigError(
            "strongly-monotone step sizes require a strongly monotone operator (mu > 0); "
            f"problem kind {problem['kind']!r} is {problem_class}. Set schedule.unchecked to "
            "run beyond theory",
            "schedule.regime",
        )
    metrics = tuple(data.get("metrics", DEFAULT_METRICS))
    if "theta_distance" in metrics and problem.get("kind") != "wgan-toy":
        raise ConfigError("theta_distance is defined for wgan-toy problems only", "metrics")
    init = data.get("init", {"kind": "zeros"})
    if init["kind"] == "explicit" and "values" not in init:
        raise ConfigError("explicit init needs values", "init.values")
    return ExperimentConfig(
        problem=problem,
        solver=data["solver"],
        sampling=data["sampling"],
        schedule=schedule,
        epochs=data["epochs"],
        seeds=tuple(data["seeds"]),
        metrics=metrics,
        init=init,
        per_iteration=data.get("per_iteration", False),
        output=data.get("output"),
        base_dir=None if base_dir is None else str(base_dir),
    )


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from exc
    return parse_config(text, base_dir=path.parent)


def build_problem(config):
    spec = config.problem
    if "file" in spec:
        path = Path(spec["file"])
        if config.base_dir and not path.is_absolute():
            path = Path(config.base_dir) / path
        try:
            return FiniteSumProblem.from_json(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read problem file: {exc}", "problem.file") from exc
    try:
        return generate_problem(spec["kind"], spec["params"], seed=spec.get("seed", 0))
    except SegrrError as exc:
        raise ConfigError(str(exc), "problem.params") from exc
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed parameters: {exc}", "problem.params") from exc


def build_initial_point(config, problem):
    init = config.init
    try:
        return initial_point(problem.d, init["kind"], seed=init.get("seed", 0),
                             scale=init.get("scale", 1.0), values=init.get("values"))
    except ParameterError as exc:
        raise ConfigError(str(exc), "init") from exc


def _hooks(config, problem):
    hooks = {}
    if "theta_distance" in config.metrics:
        mean = np.asarray(problem.params["mean"], dtype=np.float64)
        d = mean.size

        def theta_distance(_, z):
            return float(np.linalg.norm(z[:d] - mean))

        hooks["theta_distance"] = theta_distance
    return hooks


def _schedule(config, problem):
    try:
        return build_schedule(config.schedule, problem.constants, problem.n, config.epochs,
                              problem_class=problem.kind)
    except SegrrError as exc:
        raise ConfigError(str(exc), "schedule") from exc


def run_single(config, seed, problem=None, schedule=None, z0=None):
    """One seeded run of the configured experiment; returns a TrajectoryRecord."""
    problem = problem or build_problem(config)
    schedule = schedule or _schedule(config, problem)
    z0 = build_initial_point(config, problem) if z0 is None else z0
    weighted = any(m.startswith("weighted_avg") for m in config.metrics)
    return run_solver(problem, config.solver, SamplingStrategy(config.sampling, problem.n, seed),
                      schedule, config.epochs, z0, hooks=_hooks(config, problem),
                      per_iteration=config.per_iteration, weighted_average=weighted)


@dataclass
class AggregateRecord:
    """Per-row mean, sample standard deviation and run count for each metric.

    ``index`` holds the epoch (or the inner-iteration counter in per-iteration
    mode) of each row; ``metadata['diverged']`` maps seeds whose runs blew up
    to the location of the blow-up.
    """

    index: list
    metrics: tuple
    mean: dict
    std: dict
    nruns: int
    metadata: dict = field(default_factory=dict)


def aggregate(records, metrics, per_iteration=False):
    if not records:
        raise ParameterError("nothing to aggregate")
    lengths = {len(r) for r in records}
    if len(lengths) != 1:
        raise ParameterError(f"runs have different lengths {sorted(lengths)}")
    rows = records[0].rows
    index = [r.iteration for r in rows] if per_iteration else [r.epoch for r in rows]
    mean, std = {}, {}
    for name in metrics:
        data = np.stack([r.series(name) for r in records])
        mean[name] = data.mean(axis=0)
        if len(records) > 1:
            std[name] = data.std(axis=0, ddof=1)
        else:
            std[name] = np.where(np.isnan(data[0]), np.nan, 0.0)
    return AggregateRecord(index=index, metrics=tuple(metrics), mean=mean, std=std,
                           nruns=len(records))


def run_experiment(config):
    """Run every seed in order and aggregate the surviving runs."""
    problem = build_problem(config)
    schedule = _schedule(config, problem)
    z0 = build_initial_point(config, problem)
    records, diverged = [], {}
    for seed in config.seeds:
        try:
            records.append(run_single(config, seed, problem, schedule, z0))
        except DivergenceError as exc:
            diverged[seed] = {"epoch": exc.epoch, "inner": exc.inner, "message": str(exc)}
    if not records:
        rec = AggregateRecord(index=[], metrics=config.metrics, mean={}, std={}, nruns=0)
    else:
        rec = aggregate(records, config.metrics, config.per_iteration)
    rec.metadata["diverged"] = diverged
    rec.metadata["seeds"] = list(config.seeds)
    return rec


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".17g")


def emit_csv(record, path):
    """Write ``epoch,metric,mean,std,nruns`` rows, epoch-major, LF line endings."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for row, idx in enumerate(record.index):
                for name in record.metrics:
                    writer.writerow((idx, name, _fmt(record.mean[name][row]),
                                     _fmt(record.std[name][row]), record.nruns))
    except OSError as exc:
        raise OSError(f"{path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path):
    """Parse a CSV written by :func:`emit_csv` back into an :class:`AggregateRecord`."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ParameterError(f"unexpected header {header}")
        index, metrics, mean, std, nruns = [], [], {}, {}, 0
        for idx, name, m, s, runs in reader:
            idx = int(idx)
            if not index or index[-1] != idx:
                index.append(idx)
            if name not in mean:
                metrics.append(name)
                mean[name], std[name] = [], []
            mean[name].append(float(m))
            std[name].append(float(s))
            nruns = int(runs)
    return AggregateRecord(index=index, metrics=tuple(metrics),
                           mean={k: np.array(v) for k, v in mean.items()},
                           std={k: np.array(v) for k, v in std.items()}, nruns=nruns)


def plateau_of(record, metric="relative_error"):
    from .metrics import plateau_estimate

    return plateau_estimate(record.mean[metric])
