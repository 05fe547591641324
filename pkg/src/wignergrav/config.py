"""Line-oriented ``key = value`` run configuration."""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

from .dynamics import PhysParams
from .errors import ConfigError
from .interferometer import PulseSequence
from .phasespace import GaussianState, GridSpec

__all__ = ["SCHEMA", "RunConfig", "parse_config_text", "load_config"]

TWO_PI = 2 * math.pi

# key -> (type, default, allowed values or None)
SCHEMA: Dict[str, tuple] = {
    "m_i": (float, 1.0, None),
    "m_g": (float, 1.0, None),
    "m_g_scale": (float, 1.0, None),
    "g": (float, 0.0, None),
    "Gamma": (float, 0.0, None),
    "hbar": (float, 1.0, None),
    "k": (float, 0.0, None),
    "T": (float, 1.0, None),
    "phi0": (float, 0.0, None),
    "phiT": (float, 0.0, None),
    "phi2T": (float, 0.0, None),
    "delta_phi": (float, None, None),
    "z_min": (float, -16.0, None),
    "z_max": (float, 16.0, None),
    "n_z": (int, 256, None),
    "p_min": (float, -8.0, None),
    "p_max": (float, 8.0, None),
    "n_p": (int, 256, None),
    "state": (str, "gaussian", ("gaussian", "harmonic", "thermal")),
    "z0": (float, 0.0, None),
    "p0": (float, 0.0, None),
    "sigma": (float, 1.0, None),
    "n": (int, 0, None),
    "omega": (float, 1.0, None),
    "kT": (float, 1.0, None),
    "path": (str, "exit", ("free", "upper", "lower", "interference", "exit")),
    "t": (float, 1.0, None),
    "sweep_param": (str, "delta_phi", ("delta_phi", "Gamma")),
    "sweep_points": (int, 64, None),
    "sweep_min": (float, 0.0, None),
    "sweep_max": (float, TWO_PI, None),
    "spectrum": (str, "bouncer", ("bouncer", "coulomb")),
    "n_max": (int, 10, None),
    "M": (float, 1.0, None),
    "G_newton": (float, 1.0, None),
    "oracle_steps": (int, 256, None),
    "oracle_points": (int, 1024, None),
}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNOPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e}


def _eval_number(text: str) -> float:
    """Evaluate a plain arithmetic expression such as ``3*pi/2``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNOPS:
            return _UNOPS[type(node.op)](ev(node.operand))
        raise ValueError(text)

    try:
        return float(text)
    except ValueError:
        return float(ev(ast.parse(text, mode="eval")))


def _convert(key: str, raw: str):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    typ, _, choices = SCHEMA[key]
    try:
        if typ is float:
            val = _eval_number(raw)
            if not math.isfinite(val):
                raise ValueError(raw)
        elif typ is int:
            val = _eval_number(raw)
            if val != int(val):
                raise ValueError(raw)
            val = int(val)
        else:
            val = raw
    except (ValueError, SyntaxError, ZeroDivisionError, OverflowError):
        raise ConfigError(f"bad value for {key!r}: {raw!r}") from None
    if choices is not None and val not in choices:
        raise ConfigError(f"bad value for {key!r}: {raw!r} (choose from {', '.join(choices)})")
    return val


def parse_config_text(text: str) -> Dict[str, Any]:
    out: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = _convert(key, raw)
    return out


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any]

    @classmethod
    def build(cls, file_values: Optional[Mapping[str, Any]] = None,
              overrides: Optional[Mapping[str, str]] = None) -> "RunConfig":
        vals = {key: spec[1] for key, spec in SCHEMA.items()}
        vals.update(file_values or {})
        for key, raw in (overrides or {}).items():
            vals[key] = _convert(key, raw) if isinstance(raw, str) else raw
        cfg = cls(vals)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        for builder in (self.params, self.sequence, self.grid):
            try:
                builder()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if self["sweep_points"] < 1:
            raise ConfigError("sweep_points must be positive")
        if self["oracle_steps"] < 1:
            raise ConfigError("oracle_steps must be positive")
        if self["sigma"] <= 0:
            raise ConfigError("sigma must be positive")

    def params(self) -> PhysParams:
        v = self.values
        return PhysParams(v["m_i"], v["m_g"] * v["m_g_scale"], v["g"], v["Gamma"], v["hbar"], v["k"])

    def sequence(self) -> PulseSequence:
        v = self.values
        seq = PulseSequence(v["T"], v["phi0"], v["phiT"], v["phi2T"], v["k"])
        if v["delta_phi"] is not None:
            seq = seq.with_delta_phi(v["delta_phi"])
        return seq

    def grid(self) -> GridSpec:
        v = self.values
        return GridSpec(v["z_min"], v["z_max"], v["n_z"], v["p_min"], v["p_max"], v["n_p"])

    def gaussian(self) -> GaussianState:
        return GaussianState(self["z0"], self["p0"], self["sigma"], self["hbar"])

    def echo(self):
        """Effective configuration as ``key = value`` lines in schema order."""
        lines = []
        for key in SCHEMA:
            val = self.values[key]
            if val is None:
                continue
            lines.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
        return lines


def load_config(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text)
