"""Run configuration files.

A configuration is a JSON object::

    {
      "units": "rad_s" | "hz",
      "params":  {"n_atoms": 100, "rabi_freq": 1, "detuning": 0,
                  "interaction": "0.4*pi/N", "duration": "pi"},
      "initial": {"kind": "antisymmetric" | "conventional" | "custom" | "pulse", ...},
      "noise":   {"sigma": 0},
      "grid":    {...command specific...},
      "search":  {"t_window": [lo, hi], "grid_points": 2000},
      "numerics": {"fd_step": null},
      "output":  {"path": "-", "format": "csv"},
      "preset":  "fig1c"
    }

Any number may instead be an arithmetic expression string.  Expressions see
``pi``, ``sqrt``, ``exp``, ``N`` (the atom number) and the already resolved
``params`` entries by name, all in the configuration's units.  Frequencies
given in ``hz`` are multiplied by ``2 pi`` after evaluation; times are always
seconds.
"""
from __future__ import annotations

import ast
import copy
import json
import math
import operator
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import spin
from .dynamics import RabiParams
from .errors import ConfigError, RabiSpecError
from .protocols import IDEAL, PHYSICAL, NoiseModel, PulseSpec

UNITS = ("rad_s", "hz")
FORMATS = ("csv", "json")
TWO_PI = 2 * math.pi
FREQUENCY_PARAMS = ("rabi_freq", "detuning", "interaction")
# resolution order for params, so later entries may reference earlier ones
PARAM_ORDER = ("n_atoms", "interaction", "rabi_freq", "detuning", "duration")
FREQUENCY_AXES = {"detuning", "delta", "rabi_freq", "interaction", "rabi_freq_pulse"}

SECTIONS = ("command", "units", "params", "initial", "noise", "grid", "search",
            "numerics", "output", "preset", "description")


# ---------------------------------------------------------------------------
# expression evaluation

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_FUNCS = {"sqrt": math.sqrt, "exp": math.exp, "log": math.log, "sin": math.sin, "cos": math.cos}


def evaluate(value, names: dict | None = None, where: str = "value") -> float:
    """Number or arithmetic expression string -> float."""
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{where}: expected a number or expression, got {value!r}")
    scope = {"pi": math.pi, "e": math.e, "inf": math.inf}
    scope.update(names or {})
    try:
        tree = ast.parse(value.strip(), mode="eval")
        return float(_eval_node(tree.body, scope))
    except ConfigError as exc:
        raise ConfigError(f"{where}: {exc}") from None
    except (SyntaxError, ZeroDivisionError, OverflowError, ValueError, TypeError) as exc:
        raise ConfigError(f"{where}: cannot evaluate {value!r}: {exc}") from None


def _eval_node(node, scope):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, scope), _eval_node(node.right, scope))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand, scope))
    if isinstance(node, ast.Name):
        if node.id not in scope:
            raise ConfigError(f"unknown name {node.id!r}")
        return scope[node.id]
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS \
            and len(node.args) == 1 and not node.keywords:
        return _FUNCS[node.func.id](_eval_node(node.args[0], scope))
    raise ConfigError(f"unsupported expression element {ast.dump(node)}")


# ---------------------------------------------------------------------------
# the config object


@dataclass
class RunConfig:
    command: str | None = None
    units: str = "rad_s"
    params: dict = field(default_factory=dict)
    initial: dict = field(default_factory=lambda: {"kind": "antisymmetric"})
    noise: dict = field(default_factory=lambda: {"sigma": 0})
    grid: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"path": "-", "format": "csv"})
    preset: str | None = None
    description: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration root must be a JSON object")
        unknown = sorted(set(data) - set(SECTIONS))
        if unknown:
            raise ConfigError(f"unknown top-level field(s): {', '.join(unknown)}")
        cfg = cls(**copy.deepcopy(data))
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return {name: copy.deepcopy(getattr(self, name)) for name in SECTIONS}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str, source: str = "<config>") -> "RunConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    def validate(self):
        if self.units not in UNITS:
            raise ConfigError(f"field 'units': must be one of {UNITS}, got {self.units!r}")
        for name in ("params", "initial", "noise", "grid", "search", "numerics", "output"):
            if not isinstance(getattr(self, name), dict):
                raise ConfigError(f"field {name!r}: must be an object")
        unknown = sorted(set(self.params) - set(PARAM_ORDER))
        if unknown:
            raise ConfigError(f"field 'params': unknown key(s) {', '.join(unknown)}")
        fmt = self.output.get("format", "csv")
        if fmt not in FORMATS:
            raise ConfigError(f"field 'output.format': must be one of {FORMATS}, got {fmt!r}")

    def with_overrides(self, assignments) -> "RunConfig":
        """Apply ``section.key=value`` overrides; values are JSON or expression strings."""
        data = self.to_dict()
        for item in assignments:
            if "=" not in item:
                raise ConfigError(f"--set {item!r}: expected key=value")
            key, raw = item.split("=", 1)
            path = key.strip().split(".")
            if path[0] not in SECTIONS:
                raise ConfigError(f"--set {item!r}: unknown section {path[0]!r}")
            try:
                value = json.loads(raw)
            except json.JSONDecodeError:
                value = raw
            target = data
            for part in path[:-1]:
                if target.get(part) is None:
                    target[part] = {}
                target = target[part]
                if not isinstance(target, dict):
                    raise ConfigError(f"--set {item!r}: {part!r} is not an object")
            target[path[-1]] = value
        return RunConfig.from_dict(data)

    # -- resolution ---------------------------------------------------------

    def _freq_factor(self):
        return TWO_PI if self.units == "hz" else 1.0

    def names(self) -> dict:
        """Raw parameter values (config units) available to expressions."""
        names: dict[str, Any] = {}
        pending = [k for k in PARAM_ORDER if k in self.params]
        # entries may reference each other in any order; resolve until stuck
        while pending:
            failed, error = [], None
            for key in pending:
                try:
                    value = evaluate(self.params[key], names, f"params.{key}")
                except ConfigError as exc:
                    failed.append(key)
                    error = error or exc
                    continue
                names[key] = value
                if key == "n_atoms":
                    names["N"] = value
            if len(failed) == len(pending):
                raise error
            pending = failed
        return names

    def rabi_params(self) -> RabiParams:
        names = self.names()
        if "n_atoms" not in names:
            raise ConfigError("field 'params.n_atoms': required")
        n = names["n_atoms"]
        if n != int(n) or n < 1:
            raise ConfigError(f"field 'params.n_atoms': must be a positive integer, got {n!r}")
        f = self._freq_factor()
        try:
            return RabiParams(
                n_atoms=int(n),
                rabi_freq=names.get("rabi_freq", 0.0) * f,
                detuning=names.get("detuning", 0.0) * f,
                interaction=names.get("interaction", 0.0) * f,
                duration=names.get("duration", 0.0),
            )
        except RabiSpecError as exc:
            raise ConfigError(f"field 'params': {exc}") from None

    def value(self, raw, where, frequency=False) -> float:
        x = evaluate(raw, self.names(), where)
        return x * self._freq_factor() if frequency else x

    def axis(self, spec, name, where) -> np.ndarray:
        """Grid axis from ``{"values": [...]}`` or ``{"start", "stop", "num"}``."""
        if not isinstance(spec, dict):
            raise ConfigError(f"field {where!r}: must be an object")
        freq = name in FREQUENCY_AXES
        if "values" in spec:
            raw = spec["values"]
            if not isinstance(raw, list):
                raise ConfigError(f"field '{where}.values': must be a list")
            values = np.array([self.value(v, f"{where}.values[{i}]", freq) for i, v in enumerate(raw)])
        else:
            missing = [k for k in ("start", "stop", "num") if k not in spec]
            if missing:
                raise ConfigError(f"field {where!r}: missing {', '.join(missing)}")
            num = spec["num"]
            if not isinstance(num, int) or isinstance(num, bool) or num < 0:
                raise ConfigError(f"field '{where}.num': must be a non-negative integer")
            start = self.value(spec["start"], f"{where}.start", freq)
            stop = self.value(spec["stop"], f"{where}.stop", freq)
            values = np.linspace(start, stop, num)
        if values.size == 0:
            raise ConfigError(f"field {where!r}: grid is empty")
        steps = np.diff(values)
        if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
            raise ConfigError(f"field {where!r}: values must be strictly monotone")
        return values

    def noise_model(self) -> NoiseModel:
        try:
            return NoiseModel(self.value(self.noise.get("sigma", 0), "noise.sigma"))
        except RabiSpecError as exc:
            raise ConfigError(f"field 'noise.sigma': {exc}") from None

    def initial_selector(self):
        kind = self.initial.get("kind", "antisymmetric")
        n = self.rabi_params().n_atoms
        if kind in ("antisymmetric", "conventional"):
            return kind
        if kind == "custom":
            theta = self.value(self.initial.get("theta", "pi/2"), "initial.theta")
            phi = self.value(self.initial.get("phi", 0), "initial.phi")
            return spin.coherent_state(theta, phi, n)
        if kind == "pulse":
            return self.pulse_spec()
        raise ConfigError(f"field 'initial.kind': unknown initial state {kind!r}")

    def pulse_spec(self, **overrides) -> PulseSpec:
        ini = self.initial
        mode = ini.get("mode", IDEAL)
        if mode not in (IDEAL, PHYSICAL):
            raise ConfigError(f"field 'initial.mode': must be {IDEAL!r} or {PHYSICAL!r}")
        fields = dict(
            rabi_freq_pulse=self.value(ini.get("rabi_freq_pulse", 0), "initial.rabi_freq_pulse", True),
            interaction_pulse=self.value(ini.get("interaction_pulse", 0), "initial.interaction_pulse", True),
            detuning=self.rabi_params().detuning,
            epsilon=self.value(ini.get("epsilon", 0), "initial.epsilon"),
            mode=mode,
        )
        fields.update(overrides)
        try:
            return PulseSpec(**fields)
        except RabiSpecError as exc:
            raise ConfigError(f"field 'initial': {exc}") from None

    def fd_step(self):
        raw = self.numerics.get("fd_step")
        if raw is None:
            return None
        h = self.value(raw, "numerics.fd_step", frequency=True)
        if not h > 0:
            raise ConfigError("field 'numerics.fd_step': must be positive")
        return h

    def window(self, section, key, frequency):
        raw = getattr(self, section).get(key)
        where = f"{section}.{key}"
        if not (isinstance(raw, list) and len(raw) == 2):
            raise ConfigError(f"field {where!r}: expected [lo, hi]")
        lo, hi = (self.value(v, f"{where}[{i}]", frequency) for i, v in enumerate(raw))
        if not hi > lo:
            raise ConfigError(f"field {where!r}: lo must be below hi")
        return lo, hi


# ---------------------------------------------------------------------------
# presets


def preset_names() -> list[str]:
    folder = resources.files("rabispec") / "presets"
    return sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json"))


def load_preset(name: str) -> RunConfig:
    path = resources.files("rabispec") / "presets" / f"{name}.json"
    if not path.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return RunConfig.loads(path.read_text(encoding="utf-8"), source=f"preset {name}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return RunConfig.loads(text, source=str(path))
