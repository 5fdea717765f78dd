"""Flat ``key = value`` problem and run configuration files.

Example::

    # scalar problem with state and input limits
    name = example_1d
    states = 1
    inputs = 1
    noise = 1
    discount = 0.99
    f1 = x1 - 0.5*u1 + w1
    cost = x1^2 + u1^2
    g1 = 400 - x1^2
    g2 = 1 - u1^2
    noise_mean = 0
    noise_stddev = 1
    weight_box = -20 20
    weight = uniform
    degree = 4

Polynomials use the grammar of :mod:`sosadp.parse`.  ``weight_box`` lists
``lo hi`` pairs separated by commas; ``weight`` is ``uniform`` or a density
polynomial in the states.  Instead of defining a problem inline,
``problem = <builtin name>`` selects a built-in one.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Tuple

from .bellman import ControlProblem
from .parse import ParseError, parse
from .poly import format_polynomial
from .problems import BUILTIN
from .stochastic import NoiseSpec, WeightSpec

PROBLEM_KEYS = {"name", "states", "inputs", "noise", "discount", "cost", "noise_mean", "noise_stddev",
                "weight_box", "weight"}
RUN_KEYS = {"problem", "degree", "convex", "mult_degree", "tol", "max_iter", "seed", "rollouts", "horizon",
            "out", "x0", "samples"}
_INDEXED = re.compile(r"([fg])([1-9]\d*)$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column = line, column
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


@dataclass
class RunConfig:
    problem: ControlProblem
    degree: int = 2
    convex: bool = False
    multiplier_degree: Optional[int] = None
    tol: float = 1e-8
    max_iter: int = 100
    seed: int = 0
    rollouts: int = 500
    horizon: Optional[int] = None
    samples: int = 10_000
    out: Optional[str] = None
    x0: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.degree < 2 or self.degree % 2:
            raise ConfigError(f"degree must be even and at least 2, got {self.degree}")


def _entries(text: str):
    """Yield ``(key, value, line, value_column)`` for every assignment."""
    seen = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", ln, len(line) - len(line.lstrip()) + 1)
        key, _, val = line.partition("=")
        k = key.strip()
        if not k:
            raise ConfigError("missing key", ln, 1)
        if k in seen:
            raise ConfigError(f"duplicate key {k!r} (first on line {seen[k]})", ln, 1)
        seen[k] = ln
        col = len(key) + 2 + (len(val) - len(val.lstrip()))
        yield k, val.strip(), ln, col


def _floats(val: str, ln: int, col: int, what: str):
    try:
        return [float(t) for t in val.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{what} must be a list of numbers", ln, col) from None


def _int(val: str, ln: int, col: int, what: str) -> int:
    try:
        return int(val)
    except ValueError:
        raise ConfigError(f"{what} must be an integer, got {val!r}", ln, col) from None


def _bool(val: str, ln: int, col: int) -> bool:
    low = val.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {val!r}", ln, col)


def parse_weight(text: str, box, n: int) -> WeightSpec:
    """``uniform`` or a density polynomial in the states over ``box``."""
    if text.strip().lower() == "uniform":
        return WeightSpec.uniform(box)
    dens = parse(text, {"x": n})
    return WeightSpec(box, dens)


def parse_config(text: str) -> RunConfig:
    entries = {k: (v, ln, col) for k, v, ln, col in _entries(text)}
    for k, (_, ln, _) in entries.items():
        if k not in PROBLEM_KEYS | RUN_KEYS and not _INDEXED.match(k):
            raise ConfigError(f"unknown key {k!r}", ln, 1)

    inline = any(k in entries for k in PROBLEM_KEYS) or any(_INDEXED.match(k) for k in entries)
    if "problem" in entries:
        if inline:
            ln = entries["problem"][1]
            raise ConfigError("give either 'problem' or an inline problem definition, not both", ln, 1)
        v, ln, col = entries["problem"]
        if v not in BUILTIN:
            raise ConfigError(f"unknown problem {v!r}; built-ins are {sorted(BUILTIN)}", ln, col)
        prob = BUILTIN[v]()
    else:
        prob = _inline_problem(entries)

    kw = {}
    for key, name, conv in (("degree", "degree", "int"), ("mult_degree", "multiplier_degree", "int"),
                            ("max_iter", "max_iter", "int"), ("seed", "seed", "int"),
                            ("rollouts", "rollouts", "int"), ("horizon", "horizon", "int"),
                            ("samples", "samples", "int"), ("tol", "tol", "float"),
                            ("convex", "convex", "bool"), ("out", "out", "str"), ("x0", "x0", "vec")):
        if key not in entries:
            continue
        v, ln, col = entries[key]
        if conv == "int":
            kw[name] = _int(v, ln, col, key)
        elif conv == "float":
            kw[name] = _floats(v, ln, col, key)[0]
        elif conv == "bool":
            kw[name] = _bool(v, ln, col)
        elif conv == "vec":
            kw[name] = tuple(_floats(v, ln, col, key))
        else:
            kw[name] = v
    if "degree" in kw and (kw["degree"] < 2 or kw["degree"] % 2):
        v, ln, col = entries["degree"]
        raise ConfigError(f"degree must be even and at least 2, got {kw['degree']}", ln, col)
    return RunConfig(prob, **kw)


def _inline_problem(entries) -> ControlProblem:
    def need(k):
        if k not in entries:
            raise ConfigError(f"missing required key {k!r}")
        return entries[k]

    n = _int(*need("states"), "states")
    m = _int(entries["inputs"][0], *entries["inputs"][1:], "inputs") if "inputs" in entries else 0
    p = _int(entries["noise"][0], *entries["noise"][1:], "noise") if "noise" in entries else 0
    if n < 1 or m < 0 or p < 0:
        raise ConfigError("dimensions must satisfy states >= 1, inputs >= 0, noise >= 0")
    dims_xuw = {"x": n, "u": m, "w": p}
    dims_xu = {"x": n, "u": m}

    def poly(k, dims):
        v, ln, col = entries[k]
        try:
            return parse(v, dims)
        except ParseError as exc:
            raise ConfigError(str(exc).rsplit(" (column", 1)[0], ln, col + exc.pos) from None

    dyn = []
    for i in range(1, n + 1):
        if f"f{i}" not in entries:
            raise ConfigError(f"missing dynamics f{i}")
        dyn.append(poly(f"f{i}", dims_xuw))
    for k, (_, ln, _) in entries.items():
        mt = _INDEXED.match(k)
        if mt and mt.group(1) == "f" and int(mt.group(2)) > n:
            raise ConfigError(f"{k} exceeds the number of states", ln, 1)
    gkeys = sorted((k for k in entries if _INDEXED.match(k) and k[0] == "g"), key=lambda k: int(k[1:]))
    for j, k in enumerate(gkeys, start=1):
        if k != f"g{j}":
            raise ConfigError(f"constraint keys must be numbered g1, g2, ... without gaps; found {k}",
                              entries[k][1], 1)
    cons = [poly(k, dims_xu) for k in gkeys]
    cost = poly("cost", dims_xu) if "cost" in entries else need("cost")
    v, ln, col = need("discount")
    gamma = _floats(v, ln, col, "discount")[0]

    mean = _floats(*entries["noise_mean"], "noise_mean") if "noise_mean" in entries else [0.0] * p
    std = _floats(*entries["noise_stddev"], "noise_stddev") if "noise_stddev" in entries else [1.0] * p
    if len(mean) == 1 and p > 1:
        mean = mean * p
    if len(std) == 1 and p > 1:
        std = std * p
    if len(mean) != p or len(std) != p:
        raise ConfigError(f"noise_mean and noise_stddev need {p} entries")

    v, ln, col = need("weight_box")
    pairs = [_floats(piece, ln, col, "weight_box") for piece in v.split(",")]
    if len(pairs) != n or any(len(q) != 2 for q in pairs):
        raise ConfigError(f"weight_box needs {n} 'lo hi' pairs separated by commas", ln, col)
    try:
        if "weight" in entries:
            wv, wln, wcol = entries["weight"]
            try:
                weight = parse_weight(wv, pairs, n)
            except ParseError as exc:
                raise ConfigError(str(exc).rsplit(" (column", 1)[0], wln, wcol + exc.pos) from None
        else:
            weight = WeightSpec.uniform(pairs)
        return ControlProblem(n=n, m=m, p=p, dynamics=dyn, stage_cost=cost, discount=gamma, constraints=cons,
                              noise=NoiseSpec(tuple(mean), tuple(std)), weight=weight,
                              name=entries["name"][0] if "name" in entries else "config")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _num(v: float) -> str:
    return repr(float(v))


def problem_to_config(prob: ControlProblem) -> str:
    """Config text that reproduces ``prob`` exactly under :func:`parse_config`."""
    lines = [f"name = {prob.name}", f"states = {prob.n}", f"inputs = {prob.m}", f"noise = {prob.p}",
             f"discount = {_num(prob.discount)}"]
    for i, f in enumerate(prob.dynamics, start=1):
        lines.append(f"f{i} = {format_polynomial(f)}")
    lines.append(f"cost = {format_polynomial(prob.stage_cost)}")
    for j, g in enumerate(prob.constraints, start=1):
        lines.append(f"g{j} = {format_polynomial(g)}")
    if prob.p:
        lines.append("noise_mean = " + " ".join(_num(v) for v in prob.noise.mean))
        lines.append("noise_stddev = " + " ".join(_num(v) for v in prob.noise.stddev))
    lines.append("weight_box = " + ", ".join(f"{_num(a)} {_num(b)}" for a, b in prob.weight.box))
    dens = prob.weight.density
    lines.append("weight = " + ("uniform" if dens is None else format_polynomial(dens)))
    return "\n".join(lines) + "\n"


def default_weights() -> list:
    """Three state-relevance weights for the 1D family plot."""
    return ["uniform", "401 - x1^2", "1 + 0.01*x1^2"]

