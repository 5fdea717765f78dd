import math

import numpy as np
import pytest

from sosadp.config import ConfigError, RunConfig, default_weights, load_config, parse_config, parse_weight, \
    problem_to_config
from sosadp.problems import BUILTIN, example_1d

EXAMPLE = """\
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
"""


def same_problem(a, b):
    return (a.n, a.m, a.p, a.discount, a.name) == (b.n, b.m, b.p, b.discount, b.name) \
        and a.dynamics == b.dynamics and a.stage_cost == b.stage_cost and a.constraints == b.constraints \
        and a.noise == b.noise and a.weight.box == b.weight.box and a.weight.density == b.weight.density


def test_inline_example_matches_builtin():
    cfg = parse_config(EXAMPLE)
    assert cfg.degree == 4
    assert same_problem(cfg.problem, example_1d())


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_builtin_round_trip_is_exact(name):
    prob = BUILTIN[name]()
    assert same_problem(parse_config(problem_to_config(prob)).problem, prob)


def test_builtin_reference_and_run_keys():
    cfg = parse_config("problem = scalar_lqg\ndegree = 2\nconvex = yes\nseed = 7\nx0 = 1, 2\ntol = 1e-9\n")
    assert cfg.problem.name == "scalar_lqg" and cfg.convex and cfg.seed == 7
    assert cfg.x0 == (1.0, 2.0) and cfg.tol == 1e-9


def test_load_config_from_file(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text(EXAMPLE)
    assert load_config(path).problem.name == "example_1d"


@pytest.mark.parametrize("text,line,column", [
    ("problem = scalar_lqg\ndegree = 3\n", 2, 10),
    ("problem = nope\n", 1, 11),
    ("problem = scalar_lqg\ncolour = red\n", 2, 1),
    ("problem = scalar_lqg\nno equals sign\n", 2, 1),
    ("problem = scalar_lqg\nseed = 1.5\n", 2, 8),
    ("problem = scalar_lqg\nseed = 1\nseed = 2\n", 3, 1),
    (EXAMPLE.replace("f1 = x1 - 0.5*u1 + w1", "f1 = x1 - 0.5*u1 + + "), 7, 20),
    (EXAMPLE.replace("cost = x1^2 + u1^2", "cost = x1^2 + 2u1"), 8, 16),
])
def test_errors_carry_line_and_column(text, line, column):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert (exc.value.line, exc.value.column) == (line, column)
    assert f"line {line}, column {column}" in str(exc.value)


def test_missing_and_inconsistent_keys():
    with pytest.raises(ConfigError, match="f1"):
        parse_config(EXAMPLE.replace("f1 = x1 - 0.5*u1 + w1\n", ""))
    with pytest.raises(ConfigError, match="g1, g2"):
        parse_config(EXAMPLE.replace("g1 =", "g3 ="))
    with pytest.raises(ConfigError, match="weight_box"):
        parse_config(EXAMPLE.replace("weight_box = -20 20", "weight_box = -20"))
    with pytest.raises(ConfigError, match="not both"):
        parse_config("problem = scalar_lqg\n" + EXAMPLE)
    with pytest.raises(ConfigError):
        parse_config(EXAMPLE.replace("discount = 0.99", "discount = 1.5"))


def test_weight_parsing():
    w = parse_weight("401 - x1^2", [(-20, 20)], 1)
    assert w.density is not None
    assert parse_weight("uniform", [(-20, 20)], 1).density is None
    assert default_weights()[0] == "uniform" and len(default_weights()) >= 3


def test_run_config_rejects_odd_degree():
    with pytest.raises(ConfigError):
        RunConfig(example_1d(), degree=3)
