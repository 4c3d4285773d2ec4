"""Problem files (JSON) and deterministic report writing.

Problem file layout::

    {
      "alpha": 2.5, "mu": 2, "eta": "1/7", "beta": 1,
      "measure": {"atoms": [["3/7", 2], ["4/7", -1]],
                  "density": null, "density_breakpoints": []},
      "f": "1 - t + exp(t/4 - u)",
      "envelope": {"a": 0.4, "c": 3, "b": 58, "delta": 0.015, "x_max": 50},
      "numerics": {"grid": 257, "tol": 1e-10}
    }

Reals may be JSON numbers or rational strings such as ``"3/7"``.
"""

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import expr
from .existence import GrowthEnvelope
from .kernel import ProblemSpec, SpecError
from .measures import MeasureError, SignedMeasure

TOP_LEVEL = {"name", "description", "alpha", "mu", "eta", "beta", "measure", "f", "h",
             "envelope", "numerics"}
MEASURE_KEYS = {"atoms", "density", "density_breakpoints"}
ENVELOPE_KEYS = {"a", "c", "b", "delta", "x_max", "c1_global"}


class ConfigError(ValueError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


@dataclass(frozen=True)
class Numerics:
    grid: int = 257
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 0.5
    quad_order: int = 8
    quad_panels: int = 16
    quad_tol: float = 1e-10
    nystrom_n: int = 256
    h2_grid: int = 2001
    check_grid: int = 200
    seed: int = 0


@dataclass(frozen=True)
class ProblemConfig:
    spec: ProblemSpec
    f: object = None
    h: object = None
    envelope: GrowthEnvelope = None
    x_max: float = None
    c1_global: bool = False
    numerics: Numerics = field(default_factory=Numerics)
    name: str = None


def _real(value, path):
    if isinstance(value, bool):
        raise ConfigError(path, f"expected a real number, got {value!r}")
    if isinstance(value, (int, float)):
        x = float(value)
    elif isinstance(value, str):
        try:
            x = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(path, f"cannot read {value!r} as a real number") from None
    else:
        raise ConfigError(path, f"expected a real number, got {value!r}")
    if not math.isfinite(x):
        raise ConfigError(path, "value must be finite")
    return x


def _check_keys(obj, allowed, path):
    if not isinstance(obj, dict):
        raise ConfigError(path, "expected a JSON object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}" if path else extra[0], "unknown field")


def _expression(src, allowed, path):
    if not isinstance(src, str):
        raise ConfigError(path, "expected an expression string")
    try:
        return expr.parse(src, allowed_vars=allowed)
    except expr.ExprError as exc:
        raise ConfigError(path, str(exc)) from None


def parse_measure(obj, path="measure"):
    if obj is None:
        return SignedMeasure()
    _check_keys(obj, MEASURE_KEYS, path)
    atoms = []
    for k, atom in enumerate(obj.get("atoms", []) or []):
        p = f"{path}.atoms[{k}]"
        if not isinstance(atom, (list, tuple)) or len(atom) != 2:
            raise ConfigError(p, "atom must be a [location, weight] pair")
        atoms.append((_real(atom[0], p + "[0]"), _real(atom[1], p + "[1]")))
    bps = [_real(b, f"{path}.density_breakpoints[{k}]")
           for k, b in enumerate(obj.get("density_breakpoints", []) or [])]
    dens = obj.get("density")
    if dens is not None:
        _expression(dens, {"t", "s"}, f"{path}.density")
    try:
        return SignedMeasure(atoms=tuple(atoms), density=dens, density_breakpoints=tuple(bps))
    except (MeasureError, expr.ExprError) as exc:
        raise ConfigError(path, str(exc)) from None


def parse_numerics(obj, path="numerics"):
    if obj is None:
        return Numerics()
    allowed = {f.name for f in fields(Numerics)}
    _check_keys(obj, allowed, path)
    updates = {}
    for f in fields(Numerics):
        if f.name not in obj:
            continue
        p = f"{path}.{f.name}"
        value = obj[f.name]
        if f.type is int or f.type == "int":
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(p, f"expected an integer, got {value!r}")
        else:
            value = _real(value, p)
        if f.name != "seed" and value <= 0:
            raise ConfigError(p, "must be positive")
        updates[f.name] = value
    num = replace(Numerics(), **updates)
    if num.damping > 1:
        raise ConfigError(f"{path}.damping", "damping must lie in (0, 1]")
    return num


def config_from_dict(data):
    _check_keys(data, TOP_LEVEL, "")
    for key in ("alpha", "mu", "eta", "beta"):
        if key not in data:
            raise ConfigError(key, "missing required field")
    values = {k: _real(data[k], k) for k in ("alpha", "mu", "eta", "beta")}
    measure = parse_measure(data.get("measure"))
    f = _expression(data["f"], {"t", "u"}, "f") if data.get("f") is not None else None
    h = _expression(data["h"], {"t", "s"}, "h") if data.get("h") is not None else None
    try:
        spec = ProblemSpec(measure=measure, nonlinearity=f, **values)
    except SpecError as exc:
        msg = str(exc)
        key = next((k for k in ("alpha", "mu", "eta", "beta") if msg.startswith(k)), "")
        raise ConfigError(key, msg) from None

    envelope, x_max, c1_global = None, None, False
    env = data.get("envelope")
    if env is not None:
        _check_keys(env, ENVELOPE_KEYS, "envelope")
        for key in ("a", "c", "b", "delta", "x_max"):
            if key not in env:
                raise ConfigError(f"envelope.{key}", "missing required field")
        vals = {k: _real(env[k], f"envelope.{k}") for k in ("a", "c", "b", "delta", "x_max")}
        for k, v in vals.items():
            if v <= 0:
                raise ConfigError(f"envelope.{k}", "must be positive")
        x_max = vals.pop("x_max")
        envelope = GrowthEnvelope(**vals)
        c1_global = env.get("c1_global", False)
        if not isinstance(c1_global, bool):
            raise ConfigError("envelope.c1_global", "expected true or false")
    name = data.get("name")
    return ProblemConfig(spec=spec, f=spec.nonlinearity, h=h, envelope=envelope,
                         x_max=x_max, c1_global=c1_global,
                         numerics=parse_numerics(data.get("numerics")), name=name)


def load_problem(path):
    """Read and validate a problem file; errors carry the offending field path.

    A bare name such as ``example_3_1`` (or ``example_3_1.json``) that does
    not exist on disk falls back to the configs shipped with the package.
    """
    p = Path(path)
    if not p.exists() and p.parent == Path("."):
        shipped = example_path(p.stem)
        if shipped.is_file():
            p = shipped
    text = p.read_text()
    if not text.strip():
        raise ConfigError("", f"{path} is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {path}: {exc}") from None
    return config_from_dict(data)


def example_path(name="example_3_1"):
    return resources.files("fracbvp") / "data" / f"{name}.json"


def load_example(name="example_3_1"):
    return config_from_dict(json.loads(example_path(name).read_text()))


# -- output -----------------------------------------------------------------

def format_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj, indent=2, _level=0):
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [to_json(v, indent, _level + 1) for v in obj]
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(items) + "]"
        return "[\n" + ",\n".join(pad + i for i in items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    return json.dumps(str(obj))


def to_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    return buf.getvalue()


def write_report(report, path, format="json", header=None):
    """Write a dict (json) or a row sequence (csv, needs ``header``)."""
    if format == "json":
        text = to_json(report) + "\n"
    elif format == "csv":
        if header is None:
            raise ValueError("csv output needs a header")
        text = to_csv(header, report)
    else:
        raise ValueError(f"unknown report format {format!r}")
    if path is None or str(path) == "-":
        return text
    Path(path).write_text(text)
    return text
