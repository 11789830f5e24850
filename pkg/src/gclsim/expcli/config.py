"""Experiment configuration: flat INI-style grammar, validation, defaults.

A config file has up to five sections; every key is listed below and anything
else is rejected with its full key path. Example:

    [experiment]
    name = fluctuations
    family = both

    [model]
    gamma = 0.3
    theta_over_pi = 0.25
    n_th = 0.3
    U = 0.2
    F_q = 0.3

    [sweep]
    variable = delta_over_U
    start = -2
    stop = 4
    points = 40

    [numerics]
    N = 40

    [output]
    dir = out
    prefix = fluct

Angles are given as theta_over_pi in [0, 0.5]. Drive strengths are the
rescaled values in units of omega0: F_q for the linear tone (raw amplitude
F = 2 sqrt(2 w0) * F_q * w0) and G for the two-photon tone (F2 = 2 w0 * G * w0).
Unset keys take the experiment's reference defaults.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..model import DriveTone, ModelParams, fq_to_F, g_to_F2

__all__ = ["EXPERIMENTS", "ExperimentConfig", "parse_config", "load_config",
           "params_for"]

_FAMILY_ALIASES = {"cl": "CL", "gcl": "gCL", "lindblad": "lindblad"}


@dataclass(frozen=True)
class ExperimentDef:
    name: str
    drive: str                      # none | linear | two-photon
    quantum: bool
    model_defaults: dict
    sweep_default: dict
    sweep_variables: tuple
    numerics_defaults: dict = field(default_factory=dict)


_COMMON_NUMERICS = {
    "N": 40, "steps_per_period": 200, "ss_tol": 1e-9, "strobe_tol": 1e-8,
    "max_periods": 2000, "snapshots": 200,
}

EXPERIMENTS: dict[str, ExperimentDef] = {e.name: e for e in [
    ExperimentDef(
        name="ringdown", drive="none", quantum=False,
        model_defaults={"gamma": 0.2, "theta_over_pi": 0.25, "n_th": 0.0, "U": 0.2},
        sweep_default={"variable": "theta_over_pi", "start": 0.1, "stop": 0.4, "points": 3},
        sweep_variables=("theta_over_pi",),
        numerics_defaults={"steps_per_period": 400, "x0": 0.0}),
    ExperimentDef(
        name="populations", drive="none", quantum=True,
        model_defaults={"gamma": 0.2, "theta_over_pi": 0.25, "n_th": 0.3, "U": 0.2},
        sweep_default={"variable": "theta_over_pi", "start": 0.1, "stop": 0.4, "points": 3},
        sweep_variables=("theta_over_pi",),
        numerics_defaults=dict(_COMMON_NUMERICS)),
    ExperimentDef(
        name="teff-scan", drive="none", quantum=True,
        model_defaults={"gamma": 0.2, "theta_over_pi": 0.25, "n_th": 0.3, "U": 0.2},
        sweep_default={"variable": "theta_over_pi", "start": 0.05, "stop": 0.45, "points": 9},
        sweep_variables=("theta_over_pi",),
        numerics_defaults=dict(_COMMON_NUMERICS)),
    ExperimentDef(
        name="linear-response", drive="linear", quantum=False,
        model_defaults={"gamma": 0.5, "theta_over_pi": 0.125, "n_th": 0.0, "U": 0.0,
                        "F_q": 0.4},
        sweep_default={"variable": "delta", "start": -1.5, "stop": 1.5, "points": 301},
        sweep_variables=("delta",)),
    ExperimentDef(
        name="response-maxima", drive="linear", quantum=False,
        model_defaults={"gamma": 0.5, "theta_over_pi": 0.25, "n_th": 0.0, "U": 0.0,
                        "F_q": 0.4},
        sweep_default={"variable": "theta_over_pi", "start": 0.0, "stop": 0.5, "points": 51},
        sweep_variables=("theta_over_pi",)),
    ExperimentDef(
        name="bistability", drive="linear", quantum=False,
        model_defaults={"gamma": 0.2, "theta_over_pi": 0.4, "n_th": 0.0, "U": 0.375,
                        "F_q": 0.4},
        sweep_default={"variable": "omega", "start": 0.8, "stop": 2.6, "points": 61},
        sweep_variables=("omega",),
        numerics_defaults={"dwell_periods": 300, "measure_periods": 50,
                           "steps_per_period": 200}),
    ExperimentDef(
        name="fluctuations", drive="linear", quantum=True,
        model_defaults={"gamma": 0.3, "theta_over_pi": 0.25, "n_th": 0.3, "U": 0.2,
                        "F_q": 0.3},
        sweep_default={"variable": "delta_over_U", "start": -2.0, "stop": 4.0, "points": 40},
        sweep_variables=("delta_over_U",),
        numerics_defaults=dict(_COMMON_NUMERICS)),
    ExperimentDef(
        name="parametric", drive="two-photon", quantum=True,
        model_defaults={"gamma": 0.03, "theta_over_pi": 0.25, "n_th": 0.3, "U": 0.2,
                        "G": 0.1},
        sweep_default={"variable": "delta_over_U", "start": -0.5, "stop": 3.0, "points": 29},
        sweep_variables=("delta_over_U",),
        numerics_defaults=dict(_COMMON_NUMERICS)),
]}

_MODEL_KEYS = ("omega0", "gamma", "theta_over_pi", "n_th", "U", "F_q", "G")
_NUMERIC_INT_KEYS = ("N", "steps_per_period", "max_periods", "snapshots",
                     "dwell_periods", "measure_periods")
_NUMERIC_FLOAT_KEYS = ("ss_tol", "strobe_tol", "x0")
_SWEEP_KEYS = ("variable", "start", "stop", "points")
_OUTPUT_KEYS = ("dir", "prefix")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    families: tuple[str, ...]
    model: dict
    numerics: dict
    sweep: dict
    output: dict

    @property
    def sweep_grid(self) -> np.ndarray:
        return np.linspace(self.sweep["start"], self.sweep["stop"], self.sweep["points"])

    def resolved(self) -> dict:
        """Full configuration echo for the metadata sidecar."""
        return {
            "experiment": self.experiment,
            "families": list(self.families),
            "model": dict(self.model),
            "numerics": dict(self.numerics),
            "sweep": dict(self.sweep),
            "output": {k: str(v) for k, v in self.output.items()},
        }


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not a number: {raw!r}") from None


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{section}.{key}: not an integer: {raw!r}") from None


def parse_config(text: str, overrides=()) -> ExperimentConfig:
    """Parse and validate a config, resolving all defaults.

    ``overrides`` are "section.key=value" strings applied on top of the file
    before validation (the CLI's --override mechanism).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive (U, F_q, G, N)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    raw: dict[str, dict[str, str]] = {s: dict(cp[s]) for s in cp.sections()}

    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must look like section.key=value, got {ov!r}")
        path, value = ov.split("=", 1)
        if "." not in path:
            raise ConfigError(f"override key must be section.key, got {path!r}")
        section, key = path.split(".", 1)
        raw.setdefault(section.strip(), {})[key.strip()] = value.strip()

    known_sections = {"experiment", "model", "numerics", "sweep", "output"}
    for s in raw:
        if s not in known_sections:
            raise ConfigError(f"unknown section [{s}]")

    exp_sec = raw.get("experiment", {})
    for key in exp_sec:
        if key not in ("name", "family"):
            raise ConfigError(f"experiment.{key}: unknown key")
    name = exp_sec.get("name")
    if not name:
        raise ConfigError("experiment.name: missing required field")
    if name not in EXPERIMENTS:
        raise ConfigError(
            f"experiment.name: unknown experiment {name!r}; "
            f"choose from {sorted(EXPERIMENTS)}")
    edef = EXPERIMENTS[name]

    fam_raw = exp_sec.get("family", "both").strip()
    if fam_raw.lower() == "both":
        families: tuple[str, ...] = ("CL", "gCL")
    else:
        fam = _FAMILY_ALIASES.get(fam_raw.lower())
        if fam is None:
            raise ConfigError(
                f"experiment.family: must be CL, gCL, lindblad, or both; got {fam_raw!r}")
        families = (fam,)

    # model section
    allowed_model = {"omega0", "gamma", "theta_over_pi", "n_th", "U"}
    if edef.drive == "linear":
        allowed_model.add("F_q")
    elif edef.drive == "two-photon":
        allowed_model.add("G")
    model = {"omega0": 1.0, **edef.model_defaults}
    for key, val in raw.get("model", {}).items():
        if key not in _MODEL_KEYS:
            raise ConfigError(f"model.{key}: unknown key")
        if key not in allowed_model:
            raise ConfigError(
                f"model.{key}: not applicable to experiment {name!r}")
        model[key] = _parse_float("model", key, val)
    if not 0.0 <= model["theta_over_pi"] <= 0.5:
        raise ConfigError(
            f"model.theta_over_pi: must lie in [0, 0.5], got {model['theta_over_pi']}")
    if model["gamma"] < 0:
        raise ConfigError(f"model.gamma: must be non-negative, got {model['gamma']}")
    if edef.quantum and model["gamma"] == 0:
        raise ConfigError("model.gamma: steady-state experiments require gamma > 0")
    if model["n_th"] < 0:
        raise ConfigError(f"model.n_th: must be non-negative, got {model['n_th']}")
    if model["omega0"] <= 0:
        raise ConfigError(f"model.omega0: must be positive, got {model['omega0']}")
    if "lindblad" in families and abs(model["theta_over_pi"] - 0.25) > 1e-12:
        raise ConfigError(
            "experiment.family: lindblad requires model.theta_over_pi = 0.25")
    if name == "bistability":
        if model["U"] <= 0:
            raise ConfigError("model.U: bistability requires U > 0")
        if model.get("F_q", 0.0) <= 0:
            raise ConfigError("model.F_q: bistability requires a linear drive tone")

    # numerics section
    numerics = dict(edef.numerics_defaults)
    for key, val in raw.get("numerics", {}).items():
        if key in _NUMERIC_INT_KEYS:
            numerics[key] = _parse_int("numerics", key, val)
        elif key in _NUMERIC_FLOAT_KEYS:
            numerics[key] = _parse_float("numerics", key, val)
        else:
            raise ConfigError(f"numerics.{key}: unknown key")
    if edef.quantum and numerics.get("N", 2) < 2:
        raise ConfigError(f"numerics.N: must be >= 2, got {numerics['N']}")

    # sweep section
    sweep = dict(edef.sweep_default)
    for key, val in raw.get("sweep", {}).items():
        if key not in _SWEEP_KEYS:
            raise ConfigError(f"sweep.{key}: unknown key")
        if key == "variable":
            sweep[key] = val.strip()
        elif key == "points":
            sweep[key] = _parse_int("sweep", key, val)
        else:
            sweep[key] = _parse_float("sweep", key, val)
    if sweep["variable"] not in edef.sweep_variables:
        raise ConfigError(
            f"sweep.variable: experiment {name!r} supports {edef.sweep_variables}, "
            f"got {sweep['variable']!r}")
    if sweep["points"] < 1:
        raise ConfigError(f"sweep.points: must be >= 1, got {sweep['points']}")
    if sweep["start"] > sweep["stop"]:
        raise ConfigError("sweep.start: must not exceed sweep.stop")
    if sweep["variable"] == "theta_over_pi" and not (
            0.0 <= sweep["start"] and sweep["stop"] <= 0.5):
        raise ConfigError("sweep range: theta_over_pi must stay within [0, 0.5]")

    # output section
    output = {"dir": ".", "prefix": name}
    for key, val in raw.get("output", {}).items():
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"output.{key}: unknown key")
        output[key] = val.strip()

    return ExperimentConfig(experiment=name, families=families, model=model,
                            numerics=numerics, sweep=sweep, output=output)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def params_for(config: ExperimentConfig, family: str, theta_over_pi: float | None = None,
               omega_drive: float | None = None) -> ModelParams:
    """Assemble ModelParams for one sweep point of one family."""
    m = config.model
    edef = EXPERIMENTS[config.experiment]
    w0 = m["omega0"]
    theta = (theta_over_pi if theta_over_pi is not None else m["theta_over_pi"]) * math.pi
    drives: tuple[DriveTone, ...] = ()
    if edef.drive == "linear":
        F = fq_to_F(m["F_q"] * w0, w0)
        drives = (DriveTone(amplitude=F, frequency=omega_drive or w0, order=1),)
    elif edef.drive == "two-photon":
        F2 = g_to_F2(m["G"] * w0, w0)
        drives = (DriveTone(amplitude=F2, frequency=2.0 * (omega_drive or w0), order=2),)
    return ModelParams(gamma=m["gamma"], theta=theta, n_th=m["n_th"], U=m["U"],
                       omega0=w0, drives=drives, N=config.numerics.get("N", 40),
                       family=family)
