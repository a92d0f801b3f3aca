"""Line-based experiment configuration.

Format: UTF-8 text, one ``key = value`` per line, ``#`` starts a comment.
List values are comma separated; integer lists additionally accept inclusive
ranges ``a..b`` and ``a..b..step``. Unknown keys are errors.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

from .solver import Regularizer, SolverConfig, StepMode


class ConfigError(ValueError):
    """Invalid configuration text or values."""


EXPERIMENTS = ("phase_transition", "l_sweep", "coil_sweep", "reconstruct", "certify")


def _parse_int_list(text: str) -> list[int]:
    out: list[int] = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            raise ConfigError("empty list element")
        if ".." in item:
            parts = item.split("..")
            if len(parts) not in (2, 3):
                raise ConfigError(f"bad range {item!r}")
            lo, hi = int(parts[0]), int(parts[1])
            step = int(parts[2]) if len(parts) == 3 else 1
            if step <= 0:
                raise ConfigError(f"range step must be positive in {item!r}")
            if hi < lo:
                raise ConfigError(f"empty range {item!r}")
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(item))
    return out


def _parse_float_list(text: str) -> list[float]:
    items = [t.strip() for t in text.split(",")]
    if not all(items):
        raise ConfigError("empty list element")
    return [float(t) for t in items]


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


def _opt_str(text: str) -> str | None:
    return None if text.strip().lower() in ("", "none") else text.strip()


@dataclass
class ExperimentConfig:
    """All knobs of the five experiment kinds (each kind reads a subset)."""

    experiment: str = "phase_transition"
    # grid and model
    n1: int = 256
    n2: int = 1
    sparsifier: str = "dct2"
    basis: str = "haar"
    coil_model: str = "complex_sphere"
    value_model: str = "gaussian"
    k: list[int] = field(default_factory=lambda: list(range(1, 16)))
    n: list[int] = field(default_factory=lambda: list(range(1, 16)))
    C: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    L: list[int] = field(default_factory=lambda: [128])
    trials: int = 10
    noise_ratio: list[float] = field(default_factory=lambda: [0.0])
    success_threshold: float = 1e-4
    noise_success_factor: float = 2.0
    # noisy mode: lambda grid as fractions of lambda_max, and how to pick one
    lambda_grid: list[float] = field(default_factory=lambda: [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    lambda_select: str = "discrepancy"
    # solver
    regularizer: str = "block_l12"
    lambda_max_factor: float = 1.0
    lambda_min_factor: float = 1e-6
    stages: int = 10
    max_iters: int = 500
    rel_change_tol: float = 1e-10
    stage_tol: float | None = None
    step_mode: str = "power_iteration"
    lipschitz: float | None = None
    # l_sweep
    sweep_var: str = "k"
    success_target: float = 0.9
    l_search: str = "full"
    # coil_sweep
    mode: str = "omp"
    # certify
    normalized: bool = False
    certify_solve: bool = True
    # reconstruct
    input: str | None = None
    truth: str | None = None
    reduction: float | None = None
    lambda_factor: float | None = None
    # run control
    seed: int = 0
    threads: int = 1
    out: str = "."
    csv_name: str | None = None

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            lambda_max_factor=self.lambda_max_factor, lambda_min_factor=self.lambda_min_factor,
            stages=self.stages, max_iters=self.max_iters, rel_change_tol=self.rel_change_tol,
            stage_tol=self.stage_tol, step_mode=self.step_mode, lipschitz=self.lipschitz,
            regularizer=self.regularizer, seed=self.seed,
        )

    @property
    def N(self) -> int:
        return self.n1 * self.n2

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.n1 < 1 or self.n2 < 1:
            raise ConfigError("grid dimensions n1, n2 must be positive")
        for name in ("k", "n", "C", "L", "noise_ratio", "lambda_grid"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a non-empty list")
        for name in ("k", "n", "C", "L"):
            if min(getattr(self, name)) < 1:
                raise ConfigError(f"{name} values must be >= 1")
        if max(self.L) > self.N:
            raise ConfigError(f"L values must not exceed N={self.N}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if min(self.noise_ratio) < 0:
            raise ConfigError("noise_ratio must be nonnegative")
        if any(not (0 < g) for g in self.lambda_grid):
            raise ConfigError("lambda_grid values must be positive")
        if self.lambda_select not in ("discrepancy", "oracle"):
            raise ConfigError("lambda_select must be 'discrepancy' or 'oracle'")
        if self.sweep_var not in ("k", "n"):
            raise ConfigError("sweep_var must be 'k' or 'n'")
        if self.l_search not in ("full", "scan", "bisect"):
            raise ConfigError("l_search must be 'full', 'scan' or 'bisect'")
        if self.mode not in ("omp", "l12"):
            raise ConfigError("mode must be 'omp' or 'l12'")
        if not 0 < self.success_target <= 1:
            raise ConfigError("success_target must be in (0, 1]")
        if self.success_threshold <= 0:
            raise ConfigError("success_threshold must be positive")
        if self.reduction is not None and self.reduction < 1:
            raise ConfigError("reduction must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        try:
            self.solver_config()
            Regularizer(self.regularizer)
            StepMode(self.step_mode)
        except ValueError as exc:
            raise ConfigError(f"invalid solver settings: {exc}") from exc
        for name in ("sparsifier", "basis", "coil_model", "value_model"):
            allowed = _CHOICES[name]
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}")
        return self


_CHOICES = {
    "sparsifier": ("identity", "dct2", "dft"),
    "basis": ("haar", "poly", "sin2d"),
    "coil_model": ("complex_sphere", "basis_columns"),
    "value_model": ("gaussian", "unit"),
}

# field annotations are strings under postponed evaluation
_PARSERS = {
    "int": int,
    "float": float,
    "str": str.strip,
    "bool": _parse_bool,
    "list[int]": _parse_int_list,
    "list[float]": _parse_float_list,
    "float | None": _opt_float,
    "str | None": _opt_str,
}


def _field_parsers() -> dict:
    return {f.name: _PARSERS[f.type] for f in dataclasses.fields(ExperimentConfig)}


KEYS = tuple(f.name for f in dataclasses.fields(ExperimentConfig))


def parse_config(text: str, source: str = "<config>", **defaults) -> ExperimentConfig:
    """Parse config text; ``defaults`` seed fields before the file is applied."""
    parsers = _field_parsers()
    values: dict = dict(defaults)
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "lambda":
            key = "lambda_factor"
        if key not in parsers:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            values[key] = parsers[key](val)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from exc
        if isinstance(values[key], float) and not math.isfinite(values[key]):
            raise ConfigError(f"{source}:{lineno}: {key} must be finite")
    return ExperimentConfig(**values).validate()


def load_config(path: str | Path, **defaults) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"{p}: not valid UTF-8") from exc
    return parse_config(text, str(p), **defaults)


def default_config(experiment: str) -> dict:
    """Per-experiment defaults (applied before the config file)."""
    if experiment == "phase_transition":
        return {}
    if experiment == "l_sweep":
        return {"L": list(range(10, 201, 10)), "C": [1, 4], "n": [5], "k": list(range(1, 16))}
    if experiment == "coil_sweep":
        return {"n1": 23, "n2": 23, "basis": "sin2d", "k": [6], "n": [32],
                "C": [2, 4, 6, 8, 12, 16, 24, 36], "L": list(range(40, 161, 8)), "trials": 10}
    if experiment == "reconstruct":
        return {"n1": 32, "n2": 32, "basis": "sin2d", "k": [4], "n": [1], "C": [4], "L": [1024],
                "trials": 1}
    if experiment == "certify":
        return {"n1": 64, "k": [2], "n": [3], "C": [4], "L": [48], "trials": 1}
    raise ConfigError(f"unknown experiment {experiment!r}")
