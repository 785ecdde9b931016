"""Experiment configuration files.

Plain ``key = value`` text in sections, read and written with
:mod:`configparser`. Scalars are parsed as int, then float, then string;
comma-separated values become lists. Example::

    [experiment]
    name = double-well
    total_iters = 1000000
    seeds = 0, 1, 2
    output_dir = runs/dw
    theta0 = -1.0

    [objective]
    kind = double_well
    h = 6.0

    [optimizer]
    name = ctld
    eta = 0.01
    c_m = 0.0
    l_s = 1000000

    [tempering]
    delta = 0.4
    delta_prime = 1.5
    s = 0.85

See README.md for every recognised key.
"""
from __future__ import annotations

import configparser
import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

OPTIMIZERS = ("ctld", "sgd_momentum", "anneal_sgd", "fixed_langevin")
OBJECTIVES = ("double_well", "gaussian_mixture", "mlp")

_SECTION_KEYS = {
    "experiment": {"name", "total_iters", "seeds", "output_dir", "trace_stride", "theta0"},
    "objective": {"kind", "h", "weights", "means", "variances", "dataset", "n", "data_seed",
                  "layers", "activation", "loss", "weight_decay", "separation"},
    "optimizer": {"name", "eta", "c_m", "l_s", "m", "lr", "mu", "temp", "gamma",
                  "gamma_alpha", "c", "w", "sigma", "k"},
    "tempering": {"delta", "delta_prime", "s"},
    "schedule": {"a", "b", "c"},
    "diagnostics": {"burn_in", "density_grid", "tv_merge", "alpha_bins", "barrier", "band"},
}

_INT = re.compile(r"^[+-]?\d+$")


class ConfigError(ValueError):
    """Invalid or inconsistent configuration; ``key`` names the culprit."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


def parse_value(text: str):
    text = text.strip()
    if "," in text:
        return [parse_value(part) for part in text.split(",") if part.strip()]
    if _INT.match(text):
        return int(text)
    try:
        return float(text)
    except ValueError:
        return text


def format_value(value) -> str:
    if isinstance(value, (list, tuple)):
        return ", ".join(format_value(v) for v in value)
    if isinstance(value, bool):
        raise TypeError("booleans are not supported in configs")
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class ExperimentConfig:
    name: str
    total_iters: int
    seeds: list
    output_dir: str
    objective: dict
    optimizer: dict
    tempering: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    trace_stride: int = 1
    theta0: list | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not isinstance(self.total_iters, int) or self.total_iters < 1:
            raise ConfigError("experiment.total_iters", "must be a positive integer")
        if not self.seeds or not all(isinstance(s, int) for s in self.seeds):
            raise ConfigError("experiment.seeds", "must be a non-empty list of integers")
        if not isinstance(self.trace_stride, int) or self.trace_stride < 1:
            raise ConfigError("experiment.trace_stride", "must be a positive integer")
        kind = self.objective.get("kind")
        if kind not in OBJECTIVES:
            raise ConfigError("objective.kind", f"unknown objective {kind!r}; expected one of {OBJECTIVES}")
        name = self.optimizer.get("name")
        if name not in OPTIMIZERS:
            raise ConfigError("optimizer.name", f"unknown optimizer {name!r}; expected one of {OPTIMIZERS}")
        required = {
            "ctld": ("eta", "c_m", "l_s"),
            "fixed_langevin": ("eta",),
            "anneal_sgd": ("lr",),
            "sgd_momentum": (),
        }[name]
        for key in required:
            if key not in self.optimizer:
                raise ConfigError(f"optimizer.{key}", f"required for {name}")
        if name == "sgd_momentum" and "lr" not in self.optimizer and "eta" not in self.optimizer:
            raise ConfigError("optimizer.lr", "sgd_momentum needs lr (and mu) or eta (and c_m)")
        if name == "anneal_sgd":
            for key in ("a", "b", "c"):
                if key not in self.schedule:
                    raise ConfigError(f"schedule.{key}", "anneal_sgd needs an explicit schedule")

    # -- serialization -------------------------------------------------

    def sections(self) -> dict:
        experiment = {
            "name": self.name,
            "total_iters": self.total_iters,
            "seeds": list(self.seeds),
            "output_dir": self.output_dir,
            "trace_stride": self.trace_stride,
        }
        if self.theta0 is not None:
            experiment["theta0"] = list(self.theta0)
        out = {"experiment": experiment, "objective": self.objective, "optimizer": self.optimizer}
        for name in ("tempering", "schedule", "diagnostics"):
            if getattr(self, name):
                out[name] = getattr(self, name)
        return out

    def dumps(self) -> str:
        parser = configparser.ConfigParser(interpolation=None)
        for section, values in self.sections().items():
            parser[section] = {k: format_value(v) for k, v in values.items()}
        buf = io.StringIO()
        parser.write(buf)
        return buf.getvalue()

    def save(self, path) -> None:
        Path(path).write_text(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "ExperimentConfig":
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("file", str(exc)) from None
        data = {}
        for section in parser.sections():
            if section not in _SECTION_KEYS:
                raise ConfigError(section, "unknown section")
            values = {}
            for key, raw in parser[section].items():
                if key not in _SECTION_KEYS[section]:
                    raise ConfigError(f"{section}.{key}", "unknown key")
                values[key] = parse_value(raw)
            data[section] = values
        for section in ("experiment", "objective", "optimizer"):
            if section not in data:
                raise ConfigError(section, "missing section")
        exp = data["experiment"]
        for key in ("total_iters", "seeds"):
            if key not in exp:
                raise ConfigError(f"experiment.{key}", "missing")
        seeds = exp["seeds"]
        seeds = list(seeds) if isinstance(seeds, list) else [seeds]
        theta0 = exp.get("theta0")
        if theta0 is not None and not isinstance(theta0, list):
            theta0 = [theta0]
        return cls(
            name=str(exp.get("name", "experiment")),
            total_iters=exp["total_iters"],
            seeds=seeds,
            output_dir=str(exp.get("output_dir", "runs")),
            objective=data["objective"],
            optimizer=data["optimizer"],
            tempering=data.get("tempering", {}),
            schedule=data.get("schedule", {}),
            diagnostics=data.get("diagnostics", {}),
            trace_stride=exp.get("trace_stride", 1),
            theta0=theta0,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("file", f"cannot read {path}: {exc.strerror}") from None
        return cls.loads(text)

    # -- hashing -------------------------------------------------------

    def semantic(self) -> dict:
        """Fields that change results. Name, seeds, output location and trace
        stride are bookkeeping and excluded."""
        return {
            "objective": self.objective,
            "optimizer": self.optimizer,
            "tempering": self.tempering,
            "schedule": self.schedule,
            "diagnostics": self.diagnostics,
            "total_iters": self.total_iters,
            "theta0": self.theta0,
        }

    @property
    def config_hash(self) -> str:
        return _digest(self.semantic())

    @property
    def objective_hash(self) -> str:
        return _digest(self.objective)


def _digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
