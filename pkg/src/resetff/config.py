"""Text scenario configuration and the named experiment presets.

Format: UTF-8, ``key = value`` lines grouped in ``[scenario]``,
``[adaptive]``, ``[reference]`` and ``[disturbance]`` sections, ``#``
comments. Lists are comma separated. Every key has a default; keys left to
their default are reported in ``ScenarioConfig.defaulted``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .adaptive import DEFAULT_GAINS, AdaptiveConfig
from .controllers import ControllerKind
from .lti import TransferFunction
from .sim import DEFAULT_AMPLITUDE, PLANT_DEN, PLANT_NUM, MultiSineSpec, SimScenario, SineSpec


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> key -> (parser, default); a default of None for tuple keys means
# "derived from the controller" (the default gain row)
SCHEMA = {
    "scenario": {
        "name": (str, "scenario"),
        "controller": (lambda s: ControllerKind(s.strip().upper()).value, ControllerKind.CGLP1_PID.value),
        "omega_c_hz": (float, 100.0),
        "fs": (float, 10000.0),
        "duration": (float, 60.0),
        "ff_enabled": (_bool, True),
        "seed": (int, 0),
        "noise_std": (float, 0.0),
        "quantization": (float, 0.0),
        "gamma": (float, 0.0),
        "theta_0": (_floats, (0.0, 0.0, 0.0)),
        "plant_num": (_floats, PLANT_NUM),
        "plant_den": (_floats, PLANT_DEN),
    },
    "adaptive": {
        "gamma_f": (_floats, None),
        "gamma_j": (_floats, None),
        "p_norm": (_floats, (1000.0, 1.0, 1.0)),
        "zeta": (float, 1.0),
        "beta": (int, 0),
        "omega_e_ratio": (float, 0.1),
        "xi_deadband": (float, 0.0),
        "regressor": (str, "direct"),
        "lambda_poly": (_floats, ()),
    },
    "reference": {
        "amplitude": (float, DEFAULT_AMPLITUDE),
        "frequencies": (_floats, (1.0, 5.0, 14.0)),
    },
    "disturbance": {
        "amplitude": (float, 0.0),
        "frequency": (float, 15.0),
    },
}

_RANGES = {
    ("scenario", "fs"): lambda v: v > 0,
    ("scenario", "duration"): lambda v: v > 0,
    ("scenario", "omega_c_hz"): lambda v: v > 0,
    ("scenario", "noise_std"): lambda v: v >= 0,
    ("scenario", "quantization"): lambda v: v >= 0,
    ("adaptive", "zeta"): lambda v: v > 0,
    ("adaptive", "beta"): lambda v: v in (0, 1),
    ("adaptive", "omega_e_ratio"): lambda v: v > 0,
    ("adaptive", "xi_deadband"): lambda v: v >= 0,
    ("adaptive", "regressor"): lambda v: v in ("direct", "filtered"),
    ("adaptive", "gamma_f"): lambda v: all(x >= 0 for x in v),
    ("adaptive", "gamma_j"): lambda v: all(x >= 0 for x in v),
}


@dataclass
class ScenarioConfig:
    values: dict = field(default_factory=dict)  # (section, key) -> parsed value
    defaulted: list = field(default_factory=list)

    def get(self, section: str, key: str):
        v = self.values.get((section, key))
        if v is None:
            v = SCHEMA[section][key][1]
        if v is None and section == "adaptive":
            gf, gj = DEFAULT_GAINS[self.get("scenario", "controller")]
            v = gf if key == "gamma_f" else gj
        return v

    def set(self, section: str, key: str, value) -> "ScenarioConfig":
        if key not in SCHEMA.get(section, {}):
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        self.values[(section, key)] = value
        if (section, key) in self.defaulted:
            self.defaulted.remove((section, key))
        return self

    def copy(self) -> "ScenarioConfig":
        return ScenarioConfig(dict(self.values), list(self.defaulted))

    @property
    def name(self) -> str:
        return self.get("scenario", "name")

    def to_scenario(self) -> SimScenario:
        g = self.get
        kind = g("scenario", "controller")
        omega_c = 2 * math.pi * g("scenario", "omega_c_hz")
        adaptive = AdaptiveConfig(
            Gamma_F=np.diag(g("adaptive", "gamma_f")),
            Gamma_J=np.diag(g("adaptive", "gamma_j")),
            P_norm=np.diag(g("adaptive", "p_norm")),
            zeta=g("adaptive", "zeta"),
            beta=g("adaptive", "beta"),
            omega_e=g("adaptive", "omega_e_ratio") * omega_c,
            xi_deadband=g("adaptive", "xi_deadband"),
        )
        d_amp = g("disturbance", "amplitude")
        lam = g("adaptive", "lambda_poly")
        return SimScenario(
            controller=kind,
            plant=TransferFunction(g("scenario", "plant_num"), g("scenario", "plant_den")),
            omega_c=omega_c,
            gamma=g("scenario", "gamma"),
            adaptive=adaptive,
            reference=MultiSineSpec(g("reference", "amplitude"), g("reference", "frequencies")),
            disturbance=SineSpec(d_amp, g("disturbance", "frequency")) if d_amp else None,
            noise_std=g("scenario", "noise_std"),
            quantization=g("scenario", "quantization"),
            seed=g("scenario", "seed"),
            duration=g("scenario", "duration"),
            fs=g("scenario", "fs"),
            theta_0=np.array(g("scenario", "theta_0")),
            ff_enabled=g("scenario", "ff_enabled"),
            regressor=g("adaptive", "regressor"),
            lambda_poly=lam or None,
            name=self.name,
        )

    def serialize(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                v = self.get(section, key)
                lines.append(f"{key} = {_fmt(v)}")
            lines.append("")
        return "\n".join(lines)


def parse_config(text: str) -> ScenarioConfig:
    """Parse configuration text; raises ConfigError with the offending line."""
    cfg = ScenarioConfig()
    section = None
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            section = line[1:-1].strip().lower()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        if section is None:
            raise ConfigError("key outside of any section", lineno)
        key, val = (p.strip() for p in line.split("=", 1))
        key = key.lower()
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        seen.add((section, key))
        parser = SCHEMA[section][key][0]
        try:
            v = parser(val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno) from None
        check = _RANGES.get((section, key))
        if check is not None and not check(v):
            raise ConfigError(f"value out of range for {key}: {val}", lineno)
        cfg.values[(section, key)] = v
    cfg.defaulted = [(s, k) for s, keys in SCHEMA.items() for k in keys if (s, k) not in cfg.values]
    m = len(cfg.get("scenario", "theta_0"))
    for s, k in (("adaptive", "gamma_f"), ("adaptive", "gamma_j"), ("adaptive", "p_norm")):
        if len(cfg.get(s, k)) != m:
            raise ConfigError(f"{k} has {len(cfg.get(s, k))} entries, theta_0 has {m}")
    return cfg


@dataclass
class Experiment:
    name: str
    configs: list
    baselines: dict = field(default_factory=dict)  # scenario -> its no-FF baseline
    may_diverge: set = field(default_factory=set)


def _named(base: ScenarioConfig, name: str, overrides=None) -> ScenarioConfig:
    c = base.copy()
    c.set("scenario", "name", name)
    for (section, key), v in (overrides or {}).items():
        c.set(section, key, v)
    return c


def expand_preset(name: str, base: ScenarioConfig | None = None) -> Experiment:
    """Expand a named experiment into its scenarios; ``base`` supplies
    shared settings (duration, seed, amplitude, ...)."""
    base = parse_config("") if base is None else base
    if name == "sim-compare":
        ci = _named(base, "ci", {("scenario", "controller"): "CI_PID"})
        gf, gj = DEFAULT_GAINS["CI_PID"]
        zero = (0.0,) * len(gj)
        cfgs = [
            _named(ci, "setting-1", {("adaptive", "beta"): 1, ("adaptive", "gamma_j"): zero}),
            _named(ci, "setting-2", {("adaptive", "beta"): 0, ("adaptive", "gamma_j"): zero}),
            _named(ci, "setting-3", {("adaptive", "beta"): 0, ("adaptive", "gamma_j"): gj}),
        ]
        return Experiment(name, cfgs, may_diverge={"setting-1"})
    if name == "four-controllers":
        cfgs = [_named(base, k.value.lower(), {("scenario", "controller"): k.value}) for k in ControllerKind]
        return Experiment(name, cfgs)
    if name == "disturbance":
        over = {
            ("scenario", "controller"): "CGLP1_PID",
            ("disturbance", "amplitude"): 15.3,
            ("disturbance", "frequency"): 15.0,
        }
        with_ff = _named(base, "disturbance", over)
        no_ff = _named(with_ff, "disturbance-no-ff", {("scenario", "ff_enabled"): False})
        return Experiment(name, [with_ff, no_ff], baselines={"disturbance": "disturbance-no-ff"})
    if name == "no-ff-baseline":
        c = _named(base, "cglp1-no-ff", {("scenario", "controller"): "CGLP1_PID", ("scenario", "ff_enabled"): False})
        return Experiment(name, [c])
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


PRESETS = ("sim-compare", "four-controllers", "disturbance", "no-ff-baseline")
