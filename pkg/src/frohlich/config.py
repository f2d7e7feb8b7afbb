"""Strict configuration schema for the command-line front end.

Configs are JSON objects with three sections: ``model`` (grid and basis
parameters), ``run`` (momentum, cutoffs, times, shift policy, tolerance
overrides) and ``outputs`` (paths and table format).  Unknown keys are
rejected with their full field path; all numbers must be finite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

DEFAULT_TOLERANCES: dict[str, float] = {
    "order": 1e-12,             # entrywise Hamiltonian comparisons
    "resolvent_order": 1e-10,   # entrywise resolvent comparisons
    "semigroup_order": 1e-10,   # entrywise semigroup comparisons
    "positivity": 1e-12,        # preserving threshold for semigroup entries
    "strict_positivity": 1e-12, # improving threshold and ground-vector entries
    "gap": 1e-8,                # spectral gap considered open
    "energy_strictness": 1e-10, # strict decrease of sweep energies
    "solve": 1e-9,              # eigenpair residual budget
    "lower_bound": 1e-9,        # slack for the interaction-splitting bound
    "form_bound": 1e-9,         # slack for the quadratic form bounds
    "local_identity": 1e-9,     # projected resolvent agreement
    "semigroup_law": 1e-8,      # |T_s T_t - T_(s+t)| budget
    "dispersion": 1e-10,        # slack for E(0) <= E(P)
}


class ConfigError(ValueError):
    """Schema violation carrying the offending field path."""


def _reject_unknown(section: dict, allowed: set[str], path: str) -> None:
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in '{path}'")


def _require(section: dict, key: str, path: str):
    if key not in section:
        raise ConfigError(f"missing required key '{key}' in '{path}'")
    return section[key]


def _finite(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"'{path}' must be a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"'{path}' must be finite")
    return value


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"'{path}' must be an integer")
    return value


def _vector3(value, path: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"'{path}' must be a list of three numbers")
    return tuple(_finite(v, f"{path}[{i}]") for i, v in enumerate(value))


@dataclass(frozen=True)
class ModelSettings:
    alpha: float
    lambda_max: float
    n_shells: int
    n_dirs: int
    n_max: int
    r_min: float | None = None
    coupling_sign: int = 1      # -1 flips the interaction sign (diagnostic knob)


@dataclass(frozen=True)
class RunSettings:
    P: tuple[float, float, float]
    lambdas: tuple[float, ...]
    t_list: tuple[float, ...]
    mu_policy: str | float
    tolerances: dict[str, float]
    P_list: tuple[tuple[float, float, float], ...] | None = None


@dataclass(frozen=True)
class OutputSettings:
    report_path: str | None = None
    table_path: str | None = None
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    model: ModelSettings
    run: RunSettings
    outputs: OutputSettings

    def tolerance(self, key: str) -> float:
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance key '{key}'")
        return self.run.tolerances.get(key, DEFAULT_TOLERANCES[key])

    def with_tolerance_overrides(self, overrides: dict[str, float]) -> "RunConfig":
        merged = dict(self.run.tolerances)
        for key, value in overrides.items():
            if key not in DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance key '{key}'")
            merged[key] = float(value)
        return replace(self, run=replace(self.run, tolerances=merged))


def _parse_model(section, path: str = "model") -> ModelSettings:
    if not isinstance(section, dict):
        raise ConfigError(f"'{path}' must be an object")
    allowed = {"alpha", "lambda_max", "n_shells", "n_dirs", "r_min", "n_max",
               "coupling_sign"}
    _reject_unknown(section, allowed, path)
    sign = section.get("coupling_sign", 1)
    if sign not in (1, -1):
        raise ConfigError(f"'{path}.coupling_sign' must be 1 or -1")
    r_min = section.get("r_min")
    return ModelSettings(
        alpha=_finite(_require(section, "alpha", path), f"{path}.alpha"),
        lambda_max=_finite(_require(section, "lambda_max", path), f"{path}.lambda_max"),
        n_shells=_integer(_require(section, "n_shells", path), f"{path}.n_shells"),
        n_dirs=_integer(_require(section, "n_dirs", path), f"{path}.n_dirs"),
        n_max=_integer(_require(section, "n_max", path), f"{path}.n_max"),
        r_min=None if r_min is None else _finite(r_min, f"{path}.r_min"),
        coupling_sign=sign,
    )


def _parse_run(section, lambda_max: float, path: str = "run") -> RunSettings:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"'{path}' must be an object")
    allowed = {"P", "lambdas", "t_list", "mu_policy", "tolerances", "P_list"}
    _reject_unknown(section, allowed, path)

    momentum = _vector3(section.get("P", [0.0, 0.0, 0.0]), f"{path}.P")

    lambdas_raw = section.get("lambdas", [lambda_max])
    if not isinstance(lambdas_raw, (list, tuple)) or not lambdas_raw:
        raise ConfigError(f"'{path}.lambdas' must be a nonempty list")
    lambdas = tuple(
        _finite(v, f"{path}.lambdas[{i}]") for i, v in enumerate(lambdas_raw)
    )
    if any(b < a for a, b in zip(lambdas, lambdas[1:])):
        raise ConfigError(f"'{path}.lambdas' must be ascending")

    t_raw = section.get("t_list", [0.1, 1.0])
    if not isinstance(t_raw, (list, tuple)) or not t_raw:
        raise ConfigError(f"'{path}.t_list' must be a nonempty list")
    t_list = tuple(_finite(v, f"{path}.t_list[{i}]") for i, v in enumerate(t_raw))
    if any(t < 0 for t in t_list):
        raise ConfigError(f"'{path}.t_list' entries must be nonnegative")

    mu_policy = section.get("mu_policy", "auto")
    if mu_policy != "auto":
        mu_policy = _finite(mu_policy, f"{path}.mu_policy")

    tol_raw = section.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        raise ConfigError(f"'{path}.tolerances' must be an object")
    tolerances = {}
    for key, value in tol_raw.items():
        if key not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown key '{key}' in '{path}.tolerances'")
        tolerances[key] = _finite(value, f"{path}.tolerances.{key}")

    p_list_raw = section.get("P_list")
    p_list = None
    if p_list_raw is not None:
        if not isinstance(p_list_raw, (list, tuple)) or not p_list_raw:
            raise ConfigError(f"'{path}.P_list' must be a nonempty list")
        p_list = tuple(
            _vector3(v, f"{path}.P_list[{i}]") for i, v in enumerate(p_list_raw)
        )

    return RunSettings(
        P=momentum,
        lambdas=lambdas,
        t_list=t_list,
        mu_policy=mu_policy,
        tolerances=tolerances,
        P_list=p_list,
    )


def _parse_outputs(section, path: str = "outputs") -> OutputSettings:
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigError(f"'{path}' must be an object")
    allowed = {"report_path", "table_path", "format"}
    _reject_unknown(section, allowed, path)
    fmt = section.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError(f"'{path}.format' must be 'csv' or 'json'")
    for key in ("report_path", "table_path"):
        value = section.get(key)
        if value is not None and not isinstance(value, str):
            raise ConfigError(f"'{path}.{key}' must be a string path")
    return OutputSettings(
        report_path=section.get("report_path"),
        table_path=section.get("table_path"),
        format=fmt,
    )


def parse_config(data) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    _reject_unknown(data, {"model", "run", "outputs"}, "config")
    if "model" not in data:
        raise ConfigError("missing required key 'model' in 'config'")
    model = _parse_model(data["model"])
    run = _parse_run(data.get("run"), model.lambda_max)
    outputs = _parse_outputs(data.get("outputs"))
    return RunConfig(model=model, run=run, outputs=outputs)


def load_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as handle:
        try:
            data = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return parse_config(data)
