"""Run configuration: TOML schema, unit parsing, validation.

Configs are TOML files in which every dimensional quantity carries an explicit
unit string; bare numbers are accepted only for dimensionless fields.
Frequency-type units are interpreted as nu = omega / 2pi, i.e. ``g = "10 MHz"``
(equivalently ``"10 MHz/2pi"``) stores g = 2 pi x 10e6 rad/s.  Angular units
("rad/s" family) are taken literally.  Internally everything is rad/s and
seconds.

Exactly one of [parameters.microscopic] and [parameters.effective] must be
present.  The effective section carries the fields of the selected model tier
directly; the microscopic section is mapped through the parameter module.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field as dataclass_field

try:
    import tomllib  # py >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import ConfigError
from .params import MicroscopicParams

TWO_PI = 2.0 * math.pi

MODELS = ("spin_mixing", "dispersive", "full_dicke")
FORMATS = ("table", "record", "image")
SWEEP_AXES = ("atoms", "gamma_ratio", "theta_time")

ENV_THREADS = "SPINCAVITY_THREADS"

_FREQ_UNITS = {
    "hz": TWO_PI,
    "khz": TWO_PI * 1e3,
    "mhz": TWO_PI * 1e6,
    "ghz": TWO_PI * 1e9,
    "rad/s": 1.0,
    "krad/s": 1e3,
    "mrad/s": 1e6,
    "grad/s": 1e9,
}
_TIME_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "ns": 1e-9}

_QUANTITY_RE = re.compile(r"^\s*([+-]?[0-9.eE+-]+)\s*([^\s]+)\s*$")


def _parse_quantity(value, units: dict[str, float], field: str, kind: str) -> float:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        raise ConfigError(
            f"{field}: dimensional quantity needs an explicit unit string "
            f'(e.g. "10 MHz"), got bare number {value!r}'
        )
    if not isinstance(value, str):
        raise ConfigError(f"{field}: expected a quantity string, got {value!r}")
    match = _QUANTITY_RE.match(value)
    if not match:
        raise ConfigError(f"{field}: cannot parse quantity {value!r}")
    number, unit = match.groups()
    unit_key = unit.lower().removesuffix("/2pi").removesuffix("/2π")
    # removing the suffix must not change the family: "MHz/2pi" == "MHz"
    if unit_key not in units:
        raise ConfigError(
            f"{field}: unknown {kind} unit {unit!r} (known: {sorted(units)})"
        )
    try:
        return float(number) * units[unit_key]
    except ValueError as exc:
        raise ConfigError(f"{field}: bad number in {value!r}") from exc


def parse_frequency(value, field: str) -> float:
    """Angular frequency in rad/s from a quantity string."""
    return _parse_quantity(value, _FREQ_UNITS, field, "frequency")


def parse_time(value, field: str) -> float:
    return _parse_quantity(value, _TIME_UNITS, field, "time")


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key} is required")
    return section[key]


def _get_number(section, key, where, default=None, minimum=None):
    value = section.get(key, default)
    if value is None:
        raise ConfigError(f"{where}.{key} is required")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}.{key} must be >= {minimum}, got {value}")
    return value


def _get_int(section, key, where, default=None, minimum=None):
    value = _get_number(section, key, where, default, minimum)
    if int(value) != value:
        raise ConfigError(f"{where}.{key} must be an integer, got {value}")
    return int(value)


@dataclass(frozen=True)
class SweepConfig:
    axis: str
    values: tuple[float, ...] = ()
    theta_points: int = 91
    theta_min_deg: float = 0.0
    theta_max_deg: float = 180.0
    engine: bool = False


@dataclass(frozen=True)
class QFunctionConfig:
    snapshot_lambda_t: tuple[float, ...] = (1.8, 2.7, 4.5)
    polar_points: int = 121
    azimuthal_points: int = 240
    projection: str = "pole"


@dataclass(frozen=True)
class RunConfig:
    model: str
    atoms: int
    seed: int
    microscopic: MicroscopicParams | None
    large_detuning: bool
    effective: dict | None
    photon_cutoff: int
    include_residuals: bool
    max_lambda_t: float | None
    max_time: float | None
    samples: int
    trajectories_enabled: bool
    n_traj: int
    workers: int
    rel_tol: float
    abs_tol: float
    jump_tol: float
    theta_grid: int
    theta_refine_tol_rad: float
    sweep: SweepConfig | None
    qfunction: QFunctionConfig | None
    out_dir: str
    formats: tuple[str, ...]
    resolved: dict = dataclass_field(repr=False, default_factory=dict)


_EFFECTIVE_FREQ_KEYS = {
    "spin_mixing": {
        "required": ("Lambda",),
        "optional": ("Gamma", "omega0_prime"),
        "dimensionless": ("Gamma_over_Lambda",),
    },
    "dispersive": {
        "required": ("omega", "lambda_minus", "kappa"),
        "optional": ("omega0", "lambda_plus"),
        "dimensionless": (),
    },
    "full_dicke": {
        "required": ("omega", "lambda_minus", "kappa"),
        "optional": ("omega0", "lambda_plus"),
        "dimensionless": (),
    },
}


def _parse_effective(section: dict, model: str) -> dict:
    schema = _EFFECTIVE_FREQ_KEYS[model]
    where = "parameters.effective"
    out: dict = {}
    for key in schema["required"]:
        out[key] = parse_frequency(_require(section, key, where), f"{where}.{key}")
    for key in schema["optional"]:
        if key in section:
            out[key] = parse_frequency(section[key], f"{where}.{key}")
    for key in schema["dimensionless"]:
        if key in section:
            out[key] = float(_get_number(section, key, where))
    known = set(schema["required"]) | set(schema["optional"]) | set(schema["dimensionless"])
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)} for model {model}")
    if model == "spin_mixing":
        if ("Gamma" in out) == ("Gamma_over_Lambda" in out):
            raise ConfigError(
                f"{where}: give exactly one of Gamma or Gamma_over_Lambda"
            )
        if "Gamma_over_Lambda" in out:
            ratio = out.pop("Gamma_over_Lambda")
            if ratio < 0:
                raise ConfigError(f"{where}.Gamma_over_Lambda must be >= 0")
            out["Gamma"] = ratio * abs(out["Lambda"])
        if out["Gamma"] < 0:
            raise ConfigError(f"{where}.Gamma must be >= 0")
        out.setdefault("omega0_prime", 0.0)
    else:
        out.setdefault("omega0", 0.0)
        out.setdefault("lambda_plus", 0.0)
    return out


_MICROSCOPIC_FREQ_KEYS = (
    "g",
    "kappa",
    "gamma",
    "Delta",
    "zeta",
    "rabi_plus",
    "rabi_minus",
    "cavity_freq",
    "laser_freq_plus",
    "laser_freq_minus",
    "zeeman",
)


def _parse_microscopic(section: dict) -> tuple[MicroscopicParams, bool]:
    where = "parameters.microscopic"
    values = {
        key: parse_frequency(_require(section, key, where), f"{where}.{key}")
        for key in _MICROSCOPIC_FREQ_KEYS
    }
    atoms = _get_int(section, "atoms", where, minimum=1)
    large_detuning = section.get("large_detuning", True)
    if not isinstance(large_detuning, bool):
        raise ConfigError(f"{where}.large_detuning must be a boolean")
    unknown = set(section) - set(_MICROSCOPIC_FREQ_KEYS) - {"atoms", "large_detuning"}
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    try:
        params = MicroscopicParams(
            g=values["g"],
            kappa=values["kappa"],
            gamma=values["gamma"],
            Delta=values["Delta"],
            zeta=values["zeta"],
            Omega_plus=values["rabi_plus"],
            Omega_minus=values["rabi_minus"],
            omega_c=values["cavity_freq"],
            omega_plus=values["laser_freq_plus"],
            omega_minus=values["laser_freq_minus"],
            omega_z=values["zeeman"],
            n_atoms=atoms,
        )
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    return params, large_detuning


def load_config(path: str) -> dict:
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc


def build_run_config(
    raw: dict,
    seed_override: int | None = None,
    workers_override: int | None = None,
    out_override: str | None = None,
    formats_override: tuple[str, ...] | None = None,
) -> RunConfig:
    """Validate a parsed config dictionary and apply CLI/environment overrides."""
    run = raw.get("run")
    if not isinstance(run, dict):
        raise ConfigError("run section is required")
    model = _require(run, "model", "run")
    if model not in MODELS:
        raise ConfigError(f"run.model must be one of {MODELS}, got {model!r}")
    atoms = _get_int(run, "atoms", "run", minimum=1)
    seed = _get_int(run, "seed", "run", default=0, minimum=0)
    if seed >= 2**64:
        raise ConfigError("run.seed must fit in 64 bits")
    if seed_override is not None:
        seed = seed_override

    params = raw.get("parameters")
    if not isinstance(params, dict):
        raise ConfigError("parameters section is required")
    has_micro = "microscopic" in params
    has_eff = "effective" in params
    if has_micro == has_eff:
        raise ConfigError(
            "give exactly one of parameters.microscopic and parameters.effective"
        )
    microscopic, large_detuning, effective = None, True, None
    if has_micro:
        microscopic, large_detuning = _parse_microscopic(params["microscopic"])
    else:
        effective = _parse_effective(params["effective"], model)

    model_opts = raw.get("model", {})
    photon_cutoff = _get_int(model_opts, "photon_cutoff", "model", default=8, minimum=1)
    include_residuals = model_opts.get("include_residuals", False)
    if not isinstance(include_residuals, bool):
        raise ConfigError("model.include_residuals must be a boolean")

    time_sec = raw.get("time", {})
    max_lambda_t = None
    max_time = None
    if "max_lambda_t" in time_sec and "max_time" in time_sec:
        raise ConfigError("time: give only one of max_lambda_t and max_time")
    if "max_time" in time_sec:
        max_time = parse_time(time_sec["max_time"], "time.max_time")
        if max_time <= 0:
            raise ConfigError("time.max_time must be positive")
    else:
        max_lambda_t = float(
            _get_number(time_sec, "max_lambda_t", "time", default=3.0)
        )
        if max_lambda_t <= 0:
            raise ConfigError("time.max_lambda_t must be positive")
    samples = _get_int(time_sec, "samples", "time", default=61, minimum=2)

    traj = raw.get("trajectories", {})
    trajectories_enabled = traj.get("enabled", False)
    if not isinstance(trajectories_enabled, bool):
        raise ConfigError("trajectories.enabled must be a boolean")
    n_traj = _get_int(traj, "count", "trajectories", default=1000, minimum=1)
    workers = _get_int(traj, "workers", "trajectories", default=0, minimum=0)
    env_threads = os.environ.get(ENV_THREADS)
    if env_threads is not None:
        try:
            workers = int(env_threads)
        except ValueError as exc:
            raise ConfigError(f"{ENV_THREADS} must be an integer") from exc
    if workers_override is not None:
        workers = workers_override
    if workers < 1:
        workers = 1
    rel_tol = float(_get_number(traj, "rel_tol", "trajectories", default=1e-8))
    abs_tol = float(_get_number(traj, "abs_tol", "trajectories", default=1e-10))
    jump_tol = float(_get_number(traj, "jump_tol", "trajectories", default=1e-10))

    theta = raw.get("theta", {})
    theta_grid = _get_int(theta, "grid", "theta", default=720, minimum=8)
    theta_refine = float(
        _get_number(theta, "refine_tol_rad", "theta", default=1e-8)
    )

    sweep = None
    if "sweep" in raw:
        sw = raw["sweep"]
        axis = _require(sw, "axis", "sweep")
        if axis not in SWEEP_AXES:
            raise ConfigError(f"sweep.axis must be one of {SWEEP_AXES}")
        values = tuple(float(v) for v in sw.get("values", ()))
        if axis in ("atoms", "gamma_ratio") and len(values) == 0:
            raise ConfigError(f"sweep.values is required for axis {axis!r}")
        if axis == "atoms" and any(int(v) != v or v < 1 for v in values):
            raise ConfigError("sweep.values must be positive integers for atoms axis")
        sweep = SweepConfig(
            axis=axis,
            values=values,
            theta_points=_get_int(sw, "theta_points", "sweep", default=91, minimum=4),
            theta_min_deg=float(_get_number(sw, "theta_min_deg", "sweep", default=0.0)),
            theta_max_deg=float(
                _get_number(sw, "theta_max_deg", "sweep", default=180.0)
            ),
            engine=bool(sw.get("engine", axis == "theta_time")),
        )

    qfn = None
    if "qfunction" in raw:
        qf = raw["qfunction"]
        snaps = tuple(float(v) for v in qf.get("snapshot_lambda_t", (1.8, 2.7, 4.5)))
        if not snaps:
            raise ConfigError("qfunction.snapshot_lambda_t must be non-empty")
        projection = qf.get("projection", "pole")
        if projection not in ("pole", "mollweide"):
            raise ConfigError("qfunction.projection must be 'pole' or 'mollweide'")
        qfn = QFunctionConfig(
            snapshot_lambda_t=snaps,
            polar_points=_get_int(qf, "polar_points", "qfunction", default=121, minimum=3),
            azimuthal_points=_get_int(
                qf, "azimuthal_points", "qfunction", default=240, minimum=4
            ),
            projection=projection,
        )

    out = raw.get("output", {})
    out_dir = out_override if out_override is not None else out.get("directory", "runs")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.directory must be a non-empty string")
    formats = formats_override if formats_override is not None else tuple(
        out.get("formats", ("table", "record"))
    )
    for fmt in formats:
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}, got {fmt!r}")

    cfg = RunConfig(
        model=model,
        atoms=atoms,
        seed=seed,
        microscopic=microscopic,
        large_detuning=large_detuning,
        effective=effective,
        photon_cutoff=photon_cutoff,
        include_residuals=include_residuals,
        max_lambda_t=max_lambda_t,
        max_time=max_time,
        samples=samples,
        trajectories_enabled=trajectories_enabled,
        n_traj=n_traj,
        workers=workers,
        rel_tol=rel_tol,
        abs_tol=abs_tol,
        jump_tol=jump_tol,
        theta_grid=theta_grid,
        theta_refine_tol_rad=theta_refine,
        sweep=sweep,
        qfunction=qfn,
        out_dir=out_dir,
        formats=tuple(formats),
    )
    object.__setattr__(cfg, "resolved", resolve_for_provenance(cfg))
    return cfg


def resolve_for_provenance(cfg: RunConfig) -> dict:
    """Fully resolved configuration (rad/s, seconds) for embedding in outputs."""
    out: dict = {
        "model": cfg.model,
        "atoms": cfg.atoms,
        "seed": cfg.seed,
        "photon_cutoff": cfg.photon_cutoff,
        "include_residuals": cfg.include_residuals,
        "time": {
            "max_lambda_t": cfg.max_lambda_t,
            "max_time_s": cfg.max_time,
            "samples": cfg.samples,
        },
        "trajectories": {
            "enabled": cfg.trajectories_enabled,
            "count": cfg.n_traj,
            "workers": cfg.workers,
            "rel_tol": cfg.rel_tol,
            "abs_tol": cfg.abs_tol,
            "jump_tol": cfg.jump_tol,
        },
        "theta": {
            "grid": cfg.theta_grid,
            "refine_tol_rad": cfg.theta_refine_tol_rad,
        },
    }
    if cfg.microscopic is not None:
        micro = {k: getattr(cfg.microscopic, k) for k in (
            "g", "kappa", "gamma", "Delta", "zeta", "Omega_plus", "Omega_minus",
            "omega_c", "omega_plus", "omega_minus", "omega_z", "n_atoms",
        )}
        micro["large_detuning"] = cfg.large_detuning
        out["parameters"] = {"microscopic_rad_per_s": micro}
    else:
        out["parameters"] = {"effective_rad_per_s": dict(cfg.effective)}
    if cfg.sweep is not None:
        out["sweep"] = {
            "axis": cfg.sweep.axis,
            "values": list(cfg.sweep.values),
            "theta_points": cfg.sweep.theta_points,
            "theta_min_deg": cfg.sweep.theta_min_deg,
            "theta_max_deg": cfg.sweep.theta_max_deg,
            "engine": cfg.sweep.engine,
        }
    if cfg.qfunction is not None:
        out["qfunction"] = {
            "snapshot_lambda_t": list(cfg.qfunction.snapshot_lambda_t),
            "polar_points": cfg.qfunction.polar_points,
            "azimuthal_points": cfg.qfunction.azimuthal_points,
            "projection": cfg.qfunction.projection,
        }
    return out
