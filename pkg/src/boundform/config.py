"""Run configuration: INI-style sections of ``key = value`` lines.

Example::

    [well]
    V0 = -18          # MeV
    n_basis = 110

    [schedule]
    type = gaussian
    V = 100
    sigma_x = 0.12
    sigma_t = 1
    centers = 50

    [run]
    initial_index = 0
    t_end = 100
    dt = 0.005

Every section except ``[schedule]`` is optional and defaults to the
deuteron-like well and the single-pulse run. Unknown sections and keys are
rejected.
"""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field

from .eigen import DEFAULT_GRID_POINTS
from .errors import BoundFormError, ConfigurationError
from .evolution import DEFAULT_DT_GAUSSIAN, DEFAULT_DT_STOCHASTIC
from .model import WellConfig
from .pulses import GaussianTrain, SpatialProfile, StochasticSquareTrain


class ConfigError(ConfigurationError):
    """Syntax or semantic problem in a run configuration."""


_SCHEMA = {
    "well": {"V0": float, "a": float, "L": float, "m": float, "n_basis": int, "grid_points": int},
    "schedule": {
        "type": str, "V": float, "x0": float, "sigma_x": float, "sigma_t": float, "centers": "floats",
        "sigma_V": float, "delta_t": float, "hold_factor": int, "n_pulses": int, "seed": int,
    },
    "run": {"initial_index": int, "t_end": float, "dt": float, "sample_every": int},
    "ensemble": {"n_realizations": int, "batch_size": int},
    "scan": {"V": "floats", "sigma_t": "floats", "sigma_x": "floats", "n_compare": int, "exact": bool},
    "output": {"directory": str, "prefix": str, "write_psi": bool},
}

_REQUIRED_SCHEDULE = {
    "gaussian": ("V", "sigma_x", "sigma_t", "centers"),
    "stochastic": ("sigma_V", "sigma_x", "delta_t", "hold_factor", "n_pulses", "seed"),
}


@dataclass(frozen=True)
class RunParams:
    initial_index: int = 0
    t_end: float = 100.0
    dt: float = DEFAULT_DT_GAUSSIAN
    sample_every: int = 100


@dataclass(frozen=True)
class EnsembleParams:
    n_realizations: int = 200
    batch_size: int = 50


@dataclass(frozen=True)
class ScanParams:
    V: tuple = (100.0,)
    sigma_t: tuple = (1.0, 5.0, 10.0, 30.0)
    sigma_x: tuple = (1.2,)
    n_compare: int = 20
    exact: bool = True

    def points(self):
        return [(v, st, sx) for v in self.V for st in self.sigma_t for sx in self.sigma_x]


@dataclass(frozen=True)
class OutputParams:
    directory: str = "out"
    prefix: str = ""
    write_psi: bool = False


@dataclass(frozen=True)
class RunConfig:
    well: WellConfig = field(default_factory=WellConfig)
    grid_points: int = DEFAULT_GRID_POINTS
    schedule: GaussianTrain | StochasticSquareTrain | None = None
    run: RunParams = field(default_factory=RunParams)
    ensemble: EnsembleParams | None = None
    scan: ScanParams | None = None
    output: OutputParams = field(default_factory=OutputParams)
    text: str = field(default="", repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.text.encode()).hexdigest()


def _convert(section, key, raw, kind):
    try:
        if kind == "floats":
            return tuple(float(v) for v in raw.replace(",", " ").split())
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind is int:
            f = float(raw)
            if f != int(f):
                raise ValueError(raw)
            return int(f)
        return kind(raw.strip())
    except ValueError:
        name = "list of numbers" if kind == "floats" else getattr(kind, "__name__", str(kind))
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {name}") from None


def _read(text: str):
    parser = configparser.ConfigParser(
        inline_comment_prefixes=("#", ";"), interpolation=None, strict=True, default_section="__none__"
    )
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"line {exc.lineno}: key outside any [section]: {exc.line.strip()!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"line {lineno}: cannot parse {line.strip()!r}") from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(f"line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}") from None
    out = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(_SCHEMA)}")
        schema = _SCHEMA[section]
        values = {}
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"[{section}] unknown key {key!r}; allowed: {sorted(schema)}")
            values[key] = _convert(section, key, raw, schema[key])
        out[section] = values
    return out


def _semantic(section, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (BoundFormError, TypeError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def _schedule(values: dict):
    if not values:
        raise ConfigError(
            "[schedule] block is empty; required keys: type, plus "
            + "; ".join(f"{t}: {', '.join(keys)}" for t, keys in _REQUIRED_SCHEDULE.items())
        )
    kind = values.get("type")
    if kind not in _REQUIRED_SCHEDULE:
        raise ConfigError(f"[schedule] type must be one of {sorted(_REQUIRED_SCHEDULE)}, got {kind!r}")
    missing = [k for k in _REQUIRED_SCHEDULE[kind] if k not in values]
    if missing:
        raise ConfigError(f"[schedule] missing required keys for type={kind}: {', '.join(missing)}")
    x0 = values.get("x0", 0.0)
    if kind == "gaussian":
        extra = set(values) - {"type", "V", "x0", "sigma_x", "sigma_t", "centers"}
        if extra:
            raise ConfigError(f"[schedule] keys not used by type=gaussian: {', '.join(sorted(extra))}")
        profile = _semantic("schedule", SpatialProfile, values["V"], x0, values["sigma_x"])
        return _semantic("schedule", GaussianTrain, profile, values["sigma_t"], values["centers"])
    extra = set(values) - {"type", "x0", "sigma_x", "sigma_V", "delta_t", "hold_factor", "n_pulses", "seed"}
    if extra:
        raise ConfigError(f"[schedule] keys not used by type=stochastic: {', '.join(sorted(extra))}")
    profile = _semantic("schedule", SpatialProfile, 1.0, x0, values["sigma_x"])
    return _semantic(
        "schedule", StochasticSquareTrain, profile, values["sigma_V"], values["delta_t"],
        values["hold_factor"], values["n_pulses"], values["seed"],
    )


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a run configuration.

    Raises ConfigError with a line number for syntax problems and with the
    offending section for violated physical or run constraints.
    """
    data = _read(text)
    well_vals = dict(data.get("well", {}))
    grid_points = well_vals.pop("grid_points", DEFAULT_GRID_POINTS)
    well = _semantic("well", WellConfig, **well_vals)
    if grid_points < 2001:
        raise ConfigError(f"[well] grid_points must be >= 2001, got {grid_points}")

    schedule = _schedule(data["schedule"]) if "schedule" in data else None

    run_vals = dict(data.get("run", {}))
    if "dt" not in run_vals and isinstance(schedule, StochasticSquareTrain):
        run_vals["dt"] = DEFAULT_DT_STOCHASTIC
    if "t_end" not in run_vals and isinstance(schedule, StochasticSquareTrain):
        run_vals["t_end"] = schedule.duration
    run = RunParams(**run_vals)
    if not 0 <= run.initial_index < well.n_basis:
        raise ConfigError(f"[run] initial_index must lie in [0, {well.n_basis}), got {run.initial_index}")
    if not run.dt > 0:
        raise ConfigError(f"[run] dt must be positive, got {run.dt}")
    if not run.t_end > 0:
        raise ConfigError(f"[run] t_end must be positive, got {run.t_end}")
    steps = run.t_end / run.dt
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ConfigError(f"[run] dt={run.dt} must divide t_end={run.t_end}")
    if run.sample_every < 1:
        raise ConfigError(f"[run] sample_every must be >= 1, got {run.sample_every}")
    if isinstance(schedule, StochasticSquareTrain):
        ratio = schedule.window / run.dt
        if abs(ratio - round(ratio)) > 1e-9 * ratio:
            raise ConfigError(f"[run] dt={run.dt} must divide the stochastic window {schedule.window} fm")

    ensemble = None
    if "ensemble" in data:
        ensemble = EnsembleParams(**data["ensemble"])
        if ensemble.n_realizations < 1 or ensemble.batch_size < 1:
            raise ConfigError("[ensemble] n_realizations and batch_size must be >= 1")

    scan = None
    if "scan" in data:
        scan = ScanParams(**data["scan"])
        for name in ("V", "sigma_t", "sigma_x"):
            vals = getattr(scan, name)
            if not vals:
                raise ConfigError(f"[scan] {name} must list at least one value")
            if name != "V" and min(vals) <= 0:
                raise ConfigError(f"[scan] {name} values must be positive")

    output = OutputParams(**data.get("output", {}))
    return RunConfig(well=well, grid_points=grid_points, schedule=schedule, run=run, ensemble=ensemble,
                     scan=scan, output=output, text=text)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
