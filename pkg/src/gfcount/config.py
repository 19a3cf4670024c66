"""Run configuration files (TOML).

Layout::

    [model]                  # units = "MHz" is mandatory
    units = "MHz"
    kind = "n_type"          # or "double_lambda"
    gamma31 = 1.4375         # ... gamma32, gamma41, gamma42, beta, omega
    omega_p = 1.5            # ... omega_c, omega_s, delta_p, delta_c, delta_s

    [scan]                   # first (fast) axis
    axis = "delta_p"
    start_MHz = -20.0
    stop_MHz = 20.0
    points = 201

    [scan2]                  # second axis, map2d only
    [series]                 # optional: param = "beta", values = [...]
    [output]                 # basename = "fig3a", matrix = true
    [numeric]                # tolerances and times (keys ending in _us are microseconds)
"""
from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .models import AtomModel, DriveConfig, ModelKind
from .observables import DRIVE_PARAMS, MODEL_PARAMS, ScanOptions, apply_param

MODEL_FIELDS = ("kind", "gamma31", "gamma32", "gamma41", "gamma42", "beta", "omega")
FREQUENCY_AXES = set(DRIVE_PARAMS) | {"gamma31", "gamma32", "gamma41", "gamma42", "omega"}

NUMERIC_DEFAULTS = {
    "rtol": 1e-9,
    "atol": 1e-12,
    "rate_tol": 1e-5,
    "rate_atol": 1e-10,
    "samples_per_window": 64,
    "q_tol": 1e-2,
    "q_min_counts": 50.0,
    "t_eval_max_us": 1e6,
    "n_max": 200,
    "dark_threshold": 1e-6,
    "compute_q": True,
}
NUMERIC_OPTIONAL = ("t_max_us", "t_eval_us", "window_us")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        where = f"line {line}: " if line else ""
        super().__init__(f"{where}{message}")


def _key_line(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    if text is None:
        return None
    current = None
    header = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        m = header.match(raw)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"^\s*{re.escape(key)}\s*=", raw):
            return lineno
    return None


@dataclass
class Axis:
    param: str
    start: float
    stop: float
    points: int

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)

    @property
    def column(self) -> str:
        return f"{self.param}_MHz" if self.param in FREQUENCY_AXES else self.param

    def to_dict(self) -> dict:
        d = {"axis": self.param, "points": self.points}
        if self.param in FREQUENCY_AXES:
            d.update(start_MHz=self.start, stop_MHz=self.stop)
        else:
            d.update(start=self.start, stop=self.stop)
        return d


@dataclass
class RunConfig:
    model: AtomModel
    drive: DriveConfig
    scan: Axis | None = None
    scan2: Axis | None = None
    series_param: str | None = None
    series_values: list = field(default_factory=list)
    output: dict = field(default_factory=lambda: {"basename": "run", "matrix": True})
    numeric: dict = field(default_factory=lambda: dict(NUMERIC_DEFAULTS))
    source: str | None = None

    @property
    def basename(self) -> str:
        return str(self.output.get("basename", "run"))

    def scan_options(self) -> ScanOptions:
        n = self.numeric
        return ScanOptions(
            rate_rtol=float(n["rate_tol"]),
            rate_atol=float(n["rate_atol"]),
            window=n.get("window_us"),
            samples_per_window=int(n["samples_per_window"]),
            t_max=n.get("t_max_us"),
            compute_q=bool(n["compute_q"]),
            q_tol=float(n["q_tol"]),
            q_min_counts=float(n["q_min_counts"]),
            t_eval=n.get("t_eval_us"),
            t_eval_max=float(n["t_eval_max_us"]),
            dark_threshold=float(n["dark_threshold"]),
        )

    def series(self):
        """(label, model, drive) for every series value, or the single base run."""
        if not self.series_param:
            yield None, self.model, self.drive
            return
        for v in self.series_values:
            m, d = apply_param(self.model, self.drive, self.series_param, v)
            yield f"{self.series_param}{v:g}", m, d

    def to_dict(self) -> dict:
        model = {"units": "MHz", **self.model.to_dict(), **self.drive.to_dict()}
        out = {"model": model}
        if self.scan:
            out["scan"] = self.scan.to_dict()
        if self.scan2:
            out["scan2"] = self.scan2.to_dict()
        if self.series_param:
            out["series"] = {"param": self.series_param, "values": list(self.series_values)}
        out["output"] = dict(self.output)
        out["numeric"] = {k: v for k, v in self.numeric.items() if v is not None}
        return out

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _number(section, key, value, text, *, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"[{section}] {key}: expected a number, got {value!r}",
                          _key_line(text, section, key))
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite", _key_line(text, section, key))
    if positive and value <= 0:
        raise ConfigError(f"[{section}] {key}: must be > 0", _key_line(text, section, key))
    if integer:
        if int(value) != value:
            raise ConfigError(f"[{section}] {key}: must be an integer",
                              _key_line(text, section, key))
        return int(value)
    return float(value)


def _parse_model(data, text):
    sec = data.get("model")
    if not isinstance(sec, dict):
        raise ConfigError("missing [model] section")
    units = sec.get("units")
    if units is None:
        raise ConfigError("[model] units: required, must be \"MHz\"", _key_line(text, "model"))
    if str(units) != "MHz":
        raise ConfigError(f"[model] units: only \"MHz\" is supported, got {units!r}",
                          _key_line(text, "model", "units"))
    allowed = set(MODEL_FIELDS) | set(DRIVE_PARAMS) | {"units"}
    for key in sec:
        if key not in allowed:
            raise ConfigError(f"[model] {key}: unknown field", _key_line(text, "model", key))
    if "kind" not in sec:
        raise ConfigError("[model] kind: required", _key_line(text, "model"))
    try:
        kind = ModelKind.parse(sec["kind"])
    except ValueError as exc:
        raise ConfigError(f"[model] kind: {exc}", _key_line(text, "model", "kind")) from None
    mkw = {"kind": kind}
    for key in MODEL_FIELDS[1:]:
        if key in sec:
            mkw[key] = _number("model", key, sec[key], text)
    if kind is ModelKind.N_TYPE:
        mkw.setdefault("omega", 0.0)
    dkw = {k: _number("model", k, sec[k], text) for k in DRIVE_PARAMS if k in sec}
    try:
        model = AtomModel(**mkw)
    except ValueError as exc:
        key = next((k for k in mkw if k in str(exc)), None)
        raise ConfigError(f"[model] {exc}", _key_line(text, "model", key)) from None
    try:
        drive = DriveConfig(**dkw)
    except ValueError as exc:
        key = next((k for k in dkw if str(exc).startswith(k)), None)
        raise ConfigError(f"[model] {exc}", _key_line(text, "model", key)) from None
    return model, drive


def _parse_axis(name, sec, text):
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    param = sec.get("axis")
    if param not in set(DRIVE_PARAMS) | set(MODEL_PARAMS):
        raise ConfigError(f"[{name}] axis: unknown scan parameter {param!r}",
                          _key_line(text, name, "axis") or _key_line(text, name))
    if param in FREQUENCY_AXES:
        skey, ekey = "start_MHz", "stop_MHz"
    else:
        skey, ekey = "start", "stop"
    for key in (skey, ekey, "points"):
        if key not in sec:
            raise ConfigError(f"[{name}] {key}: required for axis {param!r}",
                              _key_line(text, name))
    for key in sec:
        if key not in ("axis", skey, ekey, "points"):
            raise ConfigError(f"[{name}] {key}: unknown field", _key_line(text, name, key))
    start = _number(name, skey, sec[skey], text)
    stop = _number(name, ekey, sec[ekey], text)
    points = _number(name, "points", sec["points"], text, integer=True)
    if points <= 0:
        raise ConfigError(f"[{name}] points: scan grid empty", _key_line(text, name, "points"))
    if points < 2:
        raise ConfigError(f"[{name}] points: need at least 2 points",
                          _key_line(text, name, "points"))
    if not stop > start:
        raise ConfigError(f"[{name}] {ekey}: range must be increasing",
                          _key_line(text, name, ekey))
    return Axis(param, start, stop, points)


def _parse_numeric(sec, text):
    sec = dict(sec or {})
    out = dict(NUMERIC_DEFAULTS)
    for key, value in sec.items():
        if key == "compute_q":
            if not isinstance(value, bool):
                raise ConfigError("[numeric] compute_q: expected true/false",
                                  _key_line(text, "numeric", key))
            out[key] = value
        elif key in ("samples_per_window", "n_max"):
            out[key] = _number("numeric", key, value, text, integer=True)
            if out[key] < (0 if key == "n_max" else 2):
                raise ConfigError(f"[numeric] {key}: out of range", _key_line(text, "numeric", key))
        elif key in NUMERIC_DEFAULTS or key in NUMERIC_OPTIONAL:
            out[key] = _number("numeric", key, value, text, positive=True)
        else:
            raise ConfigError(f"[numeric] {key}: unknown field", _key_line(text, "numeric", key))
    return out


def parse_config(text: str) -> RunConfig:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"TOML syntax error: {exc}", int(m.group(1)) if m else None) from None
    for key in data:
        if key not in ("model", "scan", "scan2", "series", "output", "numeric"):
            raise ConfigError(f"unknown section [{key}]", _key_line(text, key))
    model, drive = _parse_model(data, text)
    scan = _parse_axis("scan", data["scan"], text) if "scan" in data else None
    scan2 = _parse_axis("scan2", data["scan2"], text) if "scan2" in data else None
    if scan and scan2 and scan.param == scan2.param:
        raise ConfigError("[scan2] axis: must differ from [scan] axis", _key_line(text, "scan2", "axis"))
    series_param, series_values = None, []
    if "series" in data:
        sec = data["series"]
        series_param = sec.get("param")
        if series_param not in set(DRIVE_PARAMS) | set(MODEL_PARAMS):
            raise ConfigError(f"[series] param: unknown parameter {series_param!r}",
                              _key_line(text, "series", "param") or _key_line(text, "series"))
        values = sec.get("values")
        if not isinstance(values, list) or not values:
            raise ConfigError("[series] values: expected a non-empty list",
                              _key_line(text, "series", "values") or _key_line(text, "series"))
        series_values = [_number("series", "values", v, text) for v in values]
        try:
            for v in series_values:
                apply_param(model, drive, series_param, v)
        except ValueError as exc:
            raise ConfigError(f"[series] values: {exc}", _key_line(text, "series", "values")) from None
    output = {"basename": "run", "matrix": True}
    out_sec = data.get("output", {})
    for key, value in out_sec.items():
        if key == "basename":
            if not isinstance(value, str) or not re.fullmatch(r"[A-Za-z0-9_.\-]+", value):
                raise ConfigError("[output] basename: must be a plain file stem",
                                  _key_line(text, "output", key))
        elif key == "matrix":
            if not isinstance(value, bool):
                raise ConfigError("[output] matrix: expected true/false", _key_line(text, "output", key))
        else:
            raise ConfigError(f"[output] {key}: unknown field", _key_line(text, "output", key))
        output[key] = value
    numeric = _parse_numeric(data.get("numeric"), text)
    return RunConfig(model, drive, scan, scan2, series_param, series_values, output, numeric,
                     source=text)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text)


def resolved_dict(cfg: RunConfig) -> dict:
    """Config as a plain dict with every default filled in (for metadata sidecars)."""
    d = copy.deepcopy(cfg.to_dict())
    for key in NUMERIC_OPTIONAL:
        d["numeric"].setdefault(key, None)
    return d
