"""Versioned YAML experiment configs with line-numbered validation errors.

Every file names its ``experiment`` and its ``units``.  With ``units: ratio``
frequencies are used as given (typically in units of B0 or g); with
``units: mhz`` they are ordinary frequencies in MHz and times are in
microseconds, converted to rad/us on load.  Unknown keys are rejected.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import yaml

SCHEMA_VERSION = 1
EXPERIMENTS = ("quasienergy", "scan", "linecut", "adiabatic", "elliptical", "boost", "fit", "steady-state")
UNITS = ("ratio", "mhz")


class ConfigError(ValueError):
    def __init__(self, msg: str, path: str = "<config>", line: int | None = None):
        self.line = line
        loc = f"{path}:{line}" if line else path
        super().__init__(f"{loc}: {msg}")


@dataclass(frozen=True)
class F:
    """Schema field: type, requirement, default, nested schema."""

    kind: type | str
    required: bool = False
    default: object = None
    schema: dict | None = None     # for "map" and "list" of maps
    choices: tuple | None = None
    freq: bool = False             # scaled by 2 pi in MHz mode


def _range(required=True):
    return F("map", required, schema={"min": F(float, True, freq=True), "max": F(float, True, freq=True),
                                      "count": F(int, True)})


DRIVE = {"kind": F(str, True, choices=("circular", "semicircle", "elliptical", "static")),
         "B0": F(float, default=0.0, freq=True), "omega": F(float, True, freq=True),
         "bx": F(float, default=0.0, freq=True), "bz": F(float, default=0.0, freq=True)}
CAVITY = {"delta": F(float, True, freq=True), "g": F(float, True, freq=True),
          "kappa": F(float, default=0.0, freq=True), "n_max": F(int, default=4), "name": F(str, default="a")}
MODEL = {"drive": F("map", True, schema=DRIVE), "cavities": F("list", default=[], schema=CAVITY),
         "gamma": F(float, default=0.0, freq=True), "gamma_phi": F(float, default=0.0, freq=True),
         "qubit_frame": F(str, default="excited_up", choices=("excited_up", "ground_up"))}
INTEGRATOR = {"steps_per_period": F(int, default=2000)}
AXIS = {"name": F(str, True), "min": F(float, True), "max": F(float, True), "count": F(int, True),
        "spacing": F(str, default="linear", choices=("linear", "log"))}
FIXED = {k: F(float, freq=True) for k in ("B0", "g", "kappa", "gamma", "gamma_phi", "omega", "delta")}
DEVICE = {"B0": F(float, default=80.0), "omega": F(float, default=0.75), "g": F(float, default=13.0),
          "kappa": F(float, default=0.084), "gamma": F(float, default=0.0138), "T_d": F(float, default=10.2),
          "n_max": F(int, default=3)}

SECTIONS = {
    "quasienergy": {"model": F("map", True, schema=MODEL), "integrator": F("map", default={}, schema=INTEGRATOR),
                    "n_t": F(int, default=256), "m_range": F("intlist", default=[0, 3]),
                    "n_ph_range": F("intlist", default=[1, 2]), "photon_sector": F(int, default=0)},
    "steady-state": {"model": F("map", True, schema=MODEL), "integrator": F("map", default={}, schema=INTEGRATOR),
                     "n_t": F(int, default=256)},
    "scan": {"x": F("map", True, schema=AXIS), "y": F("map", True, schema=AXIS),
             "fixed": F("map", True, schema=FIXED), "n_max": F(int, default=4),
             "kind": F(str, default="circular", choices=("circular", "elliptical")),
             "steps_per_period": F(int), "resolution": F(float, default=0.2), "n_t": F(int, default=256),
             "truncation_points": F(int, default=5), "m_range": F("intlist", default=[0, 3]),
             "n_ph_range": F("intlist", default=[1, 2])},
    "linecut": {"omega": F(float, True, freq=True), "delta": _range(), "fixed": F("map", True, schema=FIXED),
                "n_max": F(int, default=4), "steps_per_period": F(int), "resolution": F(float, default=0.2),
                "n_t": F(int, default=256), "fit": F(bool, default=False), "min_prominence": F(float, default=0.02)},
    "adiabatic": {"device": F("map", default={}, schema=DEVICE),
                  "detuning": F("map", True, schema={"min": F(float, True), "max": F(float, True), "count": F(int, True)}),
                  "duration": F(float, default=20.0), "samples_per_period": F(int, default=16)},
    "elliptical": {"device": F("map", default={}, schema=DEVICE), "bx": F(float, True), "bz": F(float, True),
                   "delta": F(float, True), "omega": F(float, default=0.75), "lifetimes": F(float, default=5.0),
                   "samples_per_period": F(int, default=16), "tolerance": F(float, default=0.05)},
    "boost": {"B0": F(float, default=20.0, freq=True), "omega": F(float, default=1.5, freq=True),
              "delta_b": F(float, freq=True), "delta_s": F(float, freq=True), "g_b": F(float, default=1.0, freq=True),
              "g_s": F(float, default=1.0, freq=True), "kappa_s": F(float, default=1.0, freq=True),
              "n_b": F(int, default=45), "n_s": F(int, default=3), "n_b0": F(int, default=10),
              "periods": F(int, default=20), "report_period": F(int, default=12),
              "steps_per_period": F(int, default=1000), "samples_per_period": F(int, default=4),
              "qubit_frame": F(str, default="ground_up", choices=("excited_up", "ground_up"))},
    "fit": {"input": F(str, True), "t_column": F(str, default="t"), "y_column": F(str, default="y"),
            "model": F(str, default="exponential", choices=("exponential", "damped_sine"))},
}
# experiments whose inputs are defined in MHz / microseconds by construction
MHZ_ONLY = ("adiabatic", "elliptical")


@dataclass
class Config:
    experiment: str
    units: str
    data: dict
    path: str
    digest: str
    lines: dict = field(default_factory=dict, repr=False)


def _marks(node, prefix=()) -> dict:
    out = {prefix: node.start_mark.line + 1}
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = prefix + (k.value,)
            out[key] = k.start_mark.line + 1
            out.update({p: ln for p, ln in _marks(v, key).items() if p != key})
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            out.update(_marks(v, prefix + (i,)))
    return out


class _Validator:
    def __init__(self, path, lines, scale):
        self.path, self.lines, self.scale = path, lines, scale

    def err(self, msg, where):
        line = None
        for k in range(len(where), -1, -1):
            if where[:k] in self.lines:
                line = self.lines[where[:k]]
                break
        return ConfigError(msg, self.path, line)

    def name(self, where):
        return ".".join(str(w) for w in where) or "<root>"

    def mapping(self, value, schema, where):
        if not isinstance(value, dict):
            raise self.err(f"{self.name(where)} must be a mapping", where)
        unknown = [k for k in value if k not in schema]
        if unknown:
            raise self.err(f"unknown key {unknown[0]!r} in {self.name(where)}; allowed: {sorted(schema)}",
                           where + (unknown[0],))
        out = {}
        for key, spec in schema.items():
            w = where + (key,)
            if key not in value or value[key] is None:
                if spec.required:
                    raise self.err(f"missing required field {self.name(w)}", where)
                out[key] = self.field(spec.default, spec, w) if spec.default is not None else None
                continue
            out[key] = self.field(value[key], spec, w)
        return out

    def field(self, v, spec, where):
        k = spec.kind
        if k == "map":
            return self.mapping(v, spec.schema, where)
        if k == "list":
            if not isinstance(v, list):
                raise self.err(f"{self.name(where)} must be a list", where)
            return [self.mapping(x, spec.schema, where + (i,)) for i, x in enumerate(v)]
        if k == "intlist":
            if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
                raise self.err(f"{self.name(where)} must be a [first, last] pair of integers", where)
            return list(v)
        if k is float:
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise self.err(f"{self.name(where)} must be a finite number, got {v!r}", where)
            return float(v) * (self.scale if spec.freq else 1.0)
        if k is int:
            if isinstance(v, bool) or not isinstance(v, int):
                raise self.err(f"{self.name(where)} must be an integer, got {v!r}", where)
            return v
        if k is bool:
            if not isinstance(v, bool):
                raise self.err(f"{self.name(where)} must be true or false", where)
            return v
        if not isinstance(v, str):
            raise self.err(f"{self.name(where)} must be a string", where)
        if spec.choices and v not in spec.choices:
            raise self.err(f"{self.name(where)} must be one of {list(spec.choices)}, got {v!r}", where)
        return v


def parse_config(text: str, path: str = "<config>") -> Config:
    try:
        node = yaml.compose(text)
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(f"invalid YAML: {getattr(exc, 'problem', exc)}", path,
                          mark.line + 1 if mark else None) from None
    lines = _marks(node) if node is not None else {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping", path, 1)
    v0 = _Validator(path, lines, 1.0)
    header = {"version": F(int, True), "experiment": F(str, True, choices=EXPERIMENTS),
              "units": F(str, True, choices=UNITS)}
    head = v0.mapping({k: raw.get(k) for k in header if k in raw}, header, ())
    if head["version"] != SCHEMA_VERSION:
        raise v0.err(f"unsupported schema version {head['version']}; this build reads version {SCHEMA_VERSION}",
                     ("version",))
    exp, units = head["experiment"], head["units"]
    if exp in MHZ_ONLY and units != "mhz":
        raise v0.err(f"{exp} configs are defined in MHz and microseconds; set units: mhz", ("units",))
    schema = {**header, exp: F("map", True, schema=SECTIONS[exp])}
    scale = 2 * math.pi if units == "mhz" and exp not in MHZ_ONLY else 1.0
    data = _Validator(path, lines, scale).mapping(raw, schema, ())
    return Config(exp, units, data[exp], path, hashlib.sha256(text.encode()).hexdigest(), lines)


def load_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", str(p)) from None
    return parse_config(text, str(p))
