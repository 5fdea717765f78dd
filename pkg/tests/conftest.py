import json
import pathlib

import numpy as np
import pytest

from sosadp.bellman import fit_value
from sosadp.oracles import linear_quadratic_data, riccati_discounted, value_iteration_1d
from sosadp.problems import example_1d, helicopter10, scalar_lqg

EXPECTED = json.loads((pathlib.Path(__file__).parent / "expected.json").read_text())

# acceptance-criterion outcomes, printed at the end of the session
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def expected():
    return EXPECTED


@pytest.fixture(scope="session")
def lqg():
    return scalar_lqg()


@pytest.fixture(scope="session")
def lqg_fit(lqg):
    return fit_value(lqg, 2)


@pytest.fixture(scope="session")
def lqg_riccati(lqg):
    A, B, Q, R, E = linear_quadratic_data(lqg)
    return riccati_discounted(A, B, Q, R, lqg.discount, E @ E.T)


@pytest.fixture(scope="session")
def ex1d():
    return example_1d()


@pytest.fixture(scope="session")
def fit2(ex1d):
    return fit_value(ex1d, 2)


@pytest.fixture(scope="session")
def fit4(ex1d):
    return fit_value(ex1d, 4)


@pytest.fixture(scope="session")
def heli():
    return helicopter10()


@pytest.fixture(scope="session")
def heli_fit(heli):
    return fit_value(heli, 2, convex=True)


def scalar_riccati_closed_form(gamma, b=-0.5):
    """Positive root of the scalar discounted Riccati equation for a = q = r = 1.

    ``P = 1 + g P - g^2 b^2 P^2 / (1 + g b^2 P)`` reduces to
    ``g b^2 P^2 + (1 - g - g b^2) P - 1 = 0``.
    """
    c2, c1 = b * b * gamma, 1.0 - gamma - b * b * gamma
    return (-c1 + np.sqrt(c1 * c1 + 4 * c2)) / (2 * c2)


@pytest.fixture(scope="session")
def vi_oracle(ex1d):
    return value_iteration_1d(ex1d)

