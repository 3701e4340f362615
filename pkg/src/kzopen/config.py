"""Flat experiment configuration: one ``block.key = value`` per line.

Values may be numbers, simple arithmetic with ``pi`` (``theta = pi/4``),
booleans, bare words, quoted strings or bracketed lists. Numbers are written
back with 17 significant digits so a dump/load round trip is bit exact.

A ramp is given either by ``dmu_i``/``T_i`` or by ``radius``/``theta``;
named ramps live under ``ramps.<name>.<key>`` and take precedence over the
single ``ramp`` block.
"""
from __future__ import annotations

import ast
import hashlib
import math
import operator
from dataclasses import dataclass, field, fields
from typing import Optional

from . import model as mdl
from .bath import BathParams
from .dynamics import DynamicsOptions
from .protocol import RampSpec, theta_start


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the offending key."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "true": True, "false": False, "none": None,
          "True": True, "False": False, "None": None, "inf": math.inf}


def _eval(node):
    if isinstance(node, ast.Constant):
        if isinstance(node.value, (int, float, str)) or node.value is None:
            return node.value
    elif isinstance(node, ast.Name):
        if node.id in _NAMES:
            return _NAMES[node.id]
        return node.id
    elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return -v if isinstance(node.op, ast.USub) else v
    elif isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        lhs, rhs = _eval(node.left), _eval(node.right)
        if all(isinstance(v, (int, float)) and not isinstance(v, bool)
               for v in (lhs, rhs)):
            return _BINOPS[type(node.op)](lhs, rhs)
    elif isinstance(node, (ast.List, ast.Tuple)):
        return [_eval(e) for e in node.elts]
    raise ValueError(f"unsupported expression {ast.dump(node)}")


def parse_value(text: str):
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError:
        # bare words with characters python rejects, e.g. paths
        return text
    return _eval(tree.body)


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return "none"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(format_value(e) for e in v) + "]"
    s = str(v)
    if s.isidentifier() and s not in _NAMES:
        return s
    return repr(s)


# ---------------------------------------------------------------------------
# schema

def _float(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(path, f"expected a number, got {v!r}")
    return float(v)


def _opt_float(path, v):
    return None if v is None else _float(path, v)


def _int(path, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v != int(v):
        raise ConfigError(path, f"expected an integer, got {v!r}")
    return int(v)


def _opt_int(path, v):
    return None if v is None else _int(path, v)


def _bool(path, v):
    if not isinstance(v, bool):
        raise ConfigError(path, f"expected true/false, got {v!r}")
    return v


def _str(path, v):
    if not isinstance(v, str):
        raise ConfigError(path, f"expected a word, got {v!r}")
    return v


def _float_list(path, v):
    if not isinstance(v, list):
        v = [v]
    return [_float(f"{path}[{i}]", e) for i, e in enumerate(v)]


def _str_list(path, v):
    if not isinstance(v, list):
        v = [v]
    return [_str(f"{path}[{i}]", e) for i, e in enumerate(v)]


MODEL_KEYS = {"kind": _str, "J": _float, "Delta_p": _float, "side": _str}
BATH_KEYS = {"gamma": _float, "delta": _float, "s": _float}
DYN_KEYS = {"kappa": _float, "use_local": _bool, "rel_tol": _float,
            "abs_tol": _float, "depth": _int, "nodes": _int,
            "eps_max": _opt_float, "method": _str, "onset": _str,
            "max_steps": _int, "stiff_threshold": _float,
            "reject_fraction": _float, "deepen_tol": _float,
            "max_depth": _int, "verify_grid": _bool, "grid_tol": _float}
RAMP_KEYS = {"alpha": _float, "beta": _float, "dmu_i": _float, "T_i": _float,
             "radius": _float, "theta": _float, "t_f": _float,
             "zeta": _opt_float}
SWEEP_KEYS = {"t_f": _float_list, "log_min": _float, "log_max": _float,
              "n": _int}
ANALYSIS_KEYS = {"window": _float_list, "t0": _float, "a": _float_list,
                 "b": _float_list, "n_bins": _int, "coherent": _bool}
OUTPUT_KEYS = {"directory": _str, "formats": _str_list,
               "variants": _str_list, "samples": _int}
BLOCKS = {"model": MODEL_KEYS, "bath": BATH_KEYS, "dynamics": DYN_KEYS,
          "ramp": RAMP_KEYS, "sweep": SWEEP_KEYS, "analysis": ANALYSIS_KEYS,
          "output": OUTPUT_KEYS}

HEADER_PREFIX = "# config:"

# keys that do not change any computed number
_NON_PHYSICAL = {"dynamics.verify_grid", "dynamics.grid_tol"}


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: {
        "kind": "kitaev", "J": 1.0, "Delta_p": 1.0, "side": "below"})
    bath: dict = field(default_factory=dict)
    dynamics: dict = field(default_factory=dict)
    ramp: dict = field(default_factory=dict)
    ramps: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    # -- construction ------------------------------------------------------
    @classmethod
    def from_text(cls, text: str, header: bool = False) -> "ExperimentConfig":
        """Parse config text. With ``header`` the lines are read from a CSV
        metadata header (``# config: key = value``) and everything else is
        skipped."""
        cfg = cls()
        seen = set()
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if header:
                if not line.startswith(HEADER_PREFIX):
                    continue
                line = line[len(HEADER_PREFIX):].strip()
            elif line.startswith("#"):
                continue
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}", f"expected 'key = value': {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            if key in seen:
                raise ConfigError(key, "duplicate key")
            seen.add(key)
            try:
                value = parse_value(val)
            except ValueError as exc:
                raise ConfigError(key, str(exc)) from None
            cfg.set(key, value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def set(self, key: str, value):
        parts = key.split(".")
        if parts[0] == "ramps":
            if len(parts) != 3 or not parts[1]:
                raise ConfigError(key, "named ramps are ramps.<name>.<key>")
            _, name, sub = parts
            conv = RAMP_KEYS.get(sub)
            if conv is None:
                raise ConfigError(key, f"unknown key; expected one of {sorted(RAMP_KEYS)}")
            self.ramps.setdefault(name, {})[sub] = conv(key, value)
            return
        if len(parts) != 2 or parts[0] not in BLOCKS:
            raise ConfigError(key, f"unknown block; expected one of {sorted(BLOCKS)}")
        block, sub = parts
        conv = BLOCKS[block].get(sub)
        if conv is None:
            raise ConfigError(key, f"unknown key; expected one of {sorted(BLOCKS[block])}")
        getattr(self, block)[sub] = conv(key, value)

    # -- validation --------------------------------------------------------
    def validate(self):
        kind = self.model.get("kind", "kitaev")
        if kind != "kitaev":
            raise ConfigError("model.kind", f"unknown model {kind!r}")
        if self.model.get("side", "below") not in ("below", "above"):
            raise ConfigError("model.side", "expected 'below' or 'above'")
        try:
            self.model_spec()
        except ValueError as exc:
            raise ConfigError("model", str(exc)) from None
        try:
            self.bath_params()
        except ValueError as exc:
            raise ConfigError("bath", str(exc)) from None
        try:
            self.dynamics_options()
        except (ValueError, TypeError) as exc:
            raise ConfigError("dynamics", str(exc)) from None
        for name in self.ramp_names():
            self._ramp_fields(name)
        sw = self.sweep
        if "t_f" in sw and ({"log_min", "log_max", "n"} & set(sw)):
            raise ConfigError("sweep", "give either t_f or log_min/log_max/n")
        if {"log_min", "log_max", "n"} & set(sw):
            missing = {"log_min", "log_max", "n"} - set(sw)
            if missing:
                raise ConfigError(f"sweep.{sorted(missing)[0]}", "missing")
            if sw["n"] < 0:
                raise ConfigError("sweep.n", "must be >= 0")
        for i, tf in enumerate(sw.get("t_f", [])):
            if not tf > 0:
                raise ConfigError(f"sweep.t_f[{i}]", "must be > 0")
        w = self.analysis.get("window")
        if w is not None and (len(w) != 2 or not 0 < w[0] < w[1]):
            raise ConfigError("analysis.window", "expected [lo, hi] with 0 < lo < hi")
        if "t0" in self.analysis and not self.analysis["t0"] > 0:
            raise ConfigError("analysis.t0", "must be > 0")
        a, b = self.analysis.get("a"), self.analysis.get("b")
        if (a is None) != (b is None) or (a is not None and len(a) != len(b)):
            raise ConfigError("analysis.b", "a and b must be lists of equal length")
        return self

    # -- typed views -------------------------------------------------------
    def model_spec(self) -> mdl.ModelSpec:
        return mdl.kitaev(self.model.get("J", 1.0), self.model.get("Delta_p", 1.0))

    def bath_params(self) -> BathParams:
        return BathParams(**self.bath)

    def dynamics_options(self, threads: Optional[int] = None) -> DynamicsOptions:
        return DynamicsOptions(threads=threads, **self.dynamics)

    def ramp_names(self) -> list:
        if self.ramps:
            return sorted(self.ramps)
        return ["ramp"] if self.ramp else []

    def _ramp_fields(self, name: str) -> dict:
        path = "ramp" if name == "ramp" and not self.ramps else f"ramps.{name}"
        r = dict(self.ramp if path == "ramp" else self.ramps[name])
        for key in ("alpha", "beta"):
            if key not in r:
                raise ConfigError(f"{path}.{key}", "missing")
        polar = {"radius", "theta"} & set(r)
        direct = {"dmu_i", "T_i"} & set(r)
        if polar and direct:
            raise ConfigError(path, "give either dmu_i/T_i or radius/theta")
        if polar:
            if set(polar) != {"radius", "theta"}:
                raise ConfigError(f"{path}.{'theta' if 'radius' in r else 'radius'}",
                                  "missing")
            if not r["radius"] > 0:
                raise ConfigError(f"{path}.radius", "must be > 0")
            if not 0.0 <= r["theta"] <= math.pi / 2 + 1e-15:
                raise ConfigError(f"{path}.theta", "must lie in [0, pi/2]")
            r["dmu_i"], r["T_i"] = theta_start(r.pop("radius"), r.pop("theta"),
                                               self.model.get("side", "below"))
        else:
            r.setdefault("dmu_i", 0.0)
            r.setdefault("T_i", 0.0)
        r.setdefault("t_f", 1.0)
        try:
            RampSpec(r["alpha"], r["beta"], r["dmu_i"], r["T_i"], r["t_f"])
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
        return r

    def ramp_spec(self, name: Optional[str] = None, t_f: Optional[float] = None) -> RampSpec:
        names = self.ramp_names()
        if not names:
            raise ConfigError("ramp", "no ramp configured")
        if name is None:
            if len(names) != 1:
                raise ConfigError("ramps", "several ramps configured; pick one")
            name = names[0]
        if name not in names:
            raise ConfigError(f"ramps.{name}", "no such ramp")
        r = self._ramp_fields(name)
        return RampSpec(r["alpha"], r["beta"], r["dmu_i"], r["T_i"],
                        r["t_f"] if t_f is None else t_f)

    def sweep_points(self) -> list:
        sw = self.sweep
        if "t_f" in sw:
            return list(sw["t_f"])
        if "n" in sw:
            n = sw["n"]
            if n == 1:
                return [10.0 ** sw["log_min"]]
            return [10.0 ** (sw["log_min"] + (sw["log_max"] - sw["log_min"]) * i / (n - 1))
                    for i in range(n)]
        return []

    # -- serialisation -----------------------------------------------------
    def items(self):
        for block in ("model", "bath", "dynamics", "ramp"):
            for k in sorted(getattr(self, block)):
                yield f"{block}.{k}", getattr(self, block)[k]
        for name in sorted(self.ramps):
            for k in sorted(self.ramps[name]):
                yield f"ramps.{name}.{k}", self.ramps[name][k]
        for block in ("sweep", "analysis", "output"):
            for k in sorted(getattr(self, block)):
                yield f"{block}.{k}", getattr(self, block)[k]

    def to_text(self) -> str:
        return "".join(f"{k} = {format_value(v)}\n" for k, v in self.items())

    def physics_text(self, name: Optional[str] = None) -> str:
        """Canonical text of everything that determines E(t_f) for a ramp."""
        lines = []
        m = {"kind": "kitaev", "J": 1.0, "Delta_p": 1.0, "side": "below"}
        m.update(self.model)
        for k in sorted(m):
            lines.append(f"model.{k} = {format_value(m[k])}")
        b = self.bath_params()
        for f in fields(b):
            lines.append(f"bath.{f.name} = {format_value(float(getattr(b, f.name)))}")
        d = self.dynamics_options()
        for f in fields(d):
            key = f"dynamics.{f.name}"
            if f.name == "threads" or key in _NON_PHYSICAL:
                continue
            lines.append(f"{key} = {format_value(getattr(d, f.name))}")
        names = self.ramp_names()
        if name is not None or len(names) == 1:
            r = self.ramp_spec(name)
            for k in ("alpha", "beta", "dmu_i", "T_i"):
                lines.append(f"ramp.{k} = {format_value(float(getattr(r, k)))}")
        else:
            for n in names:
                r = self.ramp_spec(n)
                for k in ("alpha", "beta", "dmu_i", "T_i"):
                    lines.append(f"ramps.{n}.{k} = {format_value(float(getattr(r, k)))}")
        return "\n".join(lines) + "\n"

    def fingerprint(self, name: Optional[str] = None) -> str:
        return hashlib.sha256(self.physics_text(name).encode()).hexdigest()


def load(path) -> ExperimentConfig:
    return ExperimentConfig.load(path)


def loads(text: str, header: bool = False) -> ExperimentConfig:
    return ExperimentConfig.from_text(text, header=header)
