"""Run configuration: INI file with one section per subsystem.

Defaults (any omitted key takes these values):

=================  ======================  ==========================
section            key                     default
=================  ======================  ==========================
run                experiment              single_vs_dual
run                seed                    0
run                output_dir              $RISLINK_OUTPUT_DIR or results
run                ensemble_size           1
run                jobs                    1
cavity             n_pixels_per_surface    152
cavity             n_surfaces              2
cavity             kappa                   0.25
cavity             eve_kappa               0.25
cavity             seed                    0
link               signal_power            1.0
link               noise_power             (empty: calibrate)
link               target_evm              0.9
interference       int_start_db            -10
interference       int_step_db             5
interference       int_end_db              0
interference       int_db                  off
optimizer          max_loops               10
optimizer          frames_per_eval         4
optimizer          crn                     true
optimizer          n_pilots                16
optimizer          n_data                  256
optimizer          report_frames           64
hardening          m_values                8,16,32,64,128,256
hardening          realizations_per_m      200
hardening          kappa                   0.0
hardening          evm_stats               true
=================  ======================  ==========================
"""

from __future__ import annotations

import configparser
import io
import math
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .cavity import CavityParameters
from .experiments import DEFAULT_M_VALUES, OptimizerSettings
from .interference import InterferenceLevel, escalation_schedule

EXPERIMENTS = ("single_vs_dual", "escalation", "hardening", "custom")
OUTPUT_ENV = "RISLINK_OUTPUT_DIR"


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending key."""


def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "results")


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "single_vs_dual"
    seed: int = 0
    output_dir: str = field(default_factory=default_output_dir)
    ensemble_size: int = 1
    jobs: int = 1
    cavity: CavityParameters = field(default_factory=CavityParameters)
    signal_power: float = 1.0
    noise_power: Optional[float] = None
    target_evm: float = 0.9
    int_start_db: float = -10.0
    int_step_db: float = 5.0
    int_end_db: float = 0.0
    int_db: float = -math.inf
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    m_values: tuple[int, ...] = DEFAULT_M_VALUES
    realizations_per_m: int = 200
    hardening_kappa: float = 0.0
    evm_stats: bool = True

    def schedule(self) -> list[InterferenceLevel]:
        return escalation_schedule(self.int_start_db, self.int_step_db, self.int_end_db)

    @property
    def level(self) -> InterferenceLevel:
        return InterferenceLevel(self.int_db)


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_db(text):
    t = text.strip().lower()
    if t in ("off", "-inf", "none"):
        return -math.inf
    v = float(t)
    if math.isnan(v) or math.isinf(v):
        raise ValueError(f"not a finite level: {text!r}")
    return v


def _parse_optional_float(text):
    t = text.strip()
    return None if t == "" or t.lower() == "none" else float(t)


def _parse_int_list(text):
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _fmt_db(v):
    return "off" if v == -math.inf else repr(float(v))


# (section, key) -> (attribute path, parser, formatter)
_KEYS = {
    ("run", "experiment"): ("experiment", str, str),
    ("run", "seed"): ("seed", int, str),
    ("run", "output_dir"): ("output_dir", str, str),
    ("run", "ensemble_size"): ("ensemble_size", int, str),
    ("run", "jobs"): ("jobs", int, str),
    ("cavity", "n_pixels_per_surface"): ("cavity.n_pixels_per_surface", int, str),
    ("cavity", "n_surfaces"): ("cavity.n_surfaces", int, str),
    ("cavity", "kappa"): ("cavity.kappa", float, repr),
    ("cavity", "eve_kappa"): ("cavity.eve_kappa", float, repr),
    ("cavity", "seed"): ("cavity.seed", int, str),
    ("link", "signal_power"): ("signal_power", float, repr),
    ("link", "noise_power"): ("noise_power", _parse_optional_float,
                              lambda v: "" if v is None else repr(v)),
    ("link", "target_evm"): ("target_evm", float, repr),
    ("interference", "int_start_db"): ("int_start_db", float, repr),
    ("interference", "int_step_db"): ("int_step_db", float, repr),
    ("interference", "int_end_db"): ("int_end_db", float, repr),
    ("interference", "int_db"): ("int_db", _parse_db, _fmt_db),
    ("optimizer", "max_loops"): ("optimizer.max_loops", int, str),
    ("optimizer", "frames_per_eval"): ("optimizer.frames_per_eval", int, str),
    ("optimizer", "crn"): ("optimizer.crn", _parse_bool, lambda v: "true" if v else "false"),
    ("optimizer", "n_pilots"): ("optimizer.n_pilots", int, str),
    ("optimizer", "n_data"): ("optimizer.n_data", int, str),
    ("optimizer", "report_frames"): ("optimizer.report_frames", int, str),
    ("hardening", "m_values"): ("m_values", _parse_int_list, lambda v: ",".join(map(str, v))),
    ("hardening", "realizations_per_m"): ("realizations_per_m", int, str),
    ("hardening", "kappa"): ("hardening_kappa", float, repr),
    ("hardening", "evm_stats"): ("evm_stats", _parse_bool, lambda v: "true" if v else "false"),
}


def _get(cfg: RunConfig, path: str):
    obj = cfg
    for part in path.split("."):
        obj = getattr(obj, part)
    return obj


def apply_overrides(base: RunConfig, values: dict) -> RunConfig:
    """Apply ``{(section, key): text}`` overrides and validate the result."""
    top, cavity, optimizer = {}, {}, {}
    for (section, key), text in values.items():
        if (section, key) not in _KEYS:
            raise ConfigError(f"unknown configuration key {section}.{key}")
        path, parse, _ = _KEYS[(section, key)]
        try:
            value = parse(text)
        except ValueError as exc:
            raise ConfigError(f"invalid value for {section}.{key}: {text!r} ({exc})") from None
        if path.startswith("cavity."):
            cavity[path.split(".", 1)[1]] = value
        elif path.startswith("optimizer."):
            optimizer[path.split(".", 1)[1]] = value
        else:
            top[path] = value
    try:
        cav = replace(base.cavity, **cavity)
    except ValueError as exc:
        raise ConfigError(f"invalid [cavity] section: {exc}") from None
    try:
        opt = replace(base.optimizer, **optimizer)
    except ValueError as exc:
        raise ConfigError(f"invalid [optimizer] section: {exc}") from None
    cfg = replace(base, cavity=cav, optimizer=opt, **top)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"invalid value for run.experiment: {cfg.experiment!r} "
                          f"(expected one of {', '.join(EXPERIMENTS)})")
    if cfg.seed < 0:
        raise ConfigError("invalid value for run.seed: must be >= 0")
    if cfg.ensemble_size < 1:
        raise ConfigError("invalid value for run.ensemble_size: must be >= 1")
    if cfg.jobs < 1:
        raise ConfigError("invalid value for run.jobs: must be >= 1")
    if not cfg.signal_power > 0:
        raise ConfigError("invalid value for link.signal_power: must be > 0")
    if cfg.noise_power is not None and not cfg.noise_power >= 0:
        raise ConfigError("invalid value for link.noise_power: must be >= 0")
    if not 0 < cfg.target_evm < 10:
        raise ConfigError("invalid value for link.target_evm: must be in (0, 10)")
    try:
        cfg.schedule()
    except ValueError as exc:
        raise ConfigError(f"invalid [interference] schedule: {exc}") from None
    if not cfg.m_values or any(m <= 0 for m in cfg.m_values) or any(
            b <= a for a, b in zip(cfg.m_values, cfg.m_values[1:])):
        raise ConfigError("invalid value for hardening.m_values: need strictly increasing positive integers")
    if cfg.realizations_per_m < 50:
        raise ConfigError("invalid value for hardening.realizations_per_m: must be >= 50")
    if not cfg.hardening_kappa >= 0:
        raise ConfigError("invalid value for hardening.kappa: must be >= 0")
    if cfg.experiment == "single_vs_dual" and cfg.cavity.n_surfaces < 2:
        raise ConfigError("invalid value for cavity.n_surfaces: single_vs_dual needs at least 2")


def parse_config_text(text: str, overrides: Optional[dict] = None) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration file: {exc}") from None
    values = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            values[(section, key)] = value
    values.update(overrides or {})
    return apply_overrides(RunConfig(), values)


def parse_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    if path is None:
        return parse_config_text("", overrides)
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration file {path}: {exc}") from None
    return parse_config_text(text, overrides)


def emit_config(cfg: RunConfig) -> str:
    sections: dict[str, dict[str, str]] = {}
    for (section, key), (path, _, fmt) in _KEYS.items():
        sections.setdefault(section, {})[key] = fmt(_get(cfg, path))
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    parser.read_dict(sections)
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def parse_assignment(text: str) -> tuple[tuple[str, str], str]:
    """Split ``section.key=value`` into ``((section, key), value)``."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override must look like section.key=value, got {text!r}")
    name, value = text.split("=", 1)
    section, key = name.strip().split(".", 1)
    return (section, key), value.strip()


__all__ = ["RunConfig", "ConfigError", "parse_config", "parse_config_text", "emit_config",
           "apply_overrides", "parse_assignment", "EXPERIMENTS", "OUTPUT_ENV"]
