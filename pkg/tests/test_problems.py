import math

import numpy as np
import pytest

from sosadp.problems import (BUILTIN, HELI_BOX, HelicopterModel, builtin, example_1d, helicopter10, scalar_lqg,
                             scenario, scenarios)


def test_example_1d_data():
    p = example_1d()
    assert p.cost(np.array([1.0]), np.array([1.0])) == 2.0
    assert p.step(np.array([1.0]), np.array([1.0]), np.array([0.0]))[0] == 0.5
    g = p.constraint_values(np.array([20.0]), np.array([0.0]))
    assert g.tolist() == [0.0, 1.0]
    assert p.discount == 0.99 and p.weight.box == ((-20.0, 20.0),)


def test_scalar_lqg_drops_constraints():
    p = scalar_lqg()
    assert p.constraints == [] and p.name == "scalar_lqg"
    assert p.input_box()[0].tolist() == [-math.inf]


def test_helicopter_continuous_matrices():
    m = HelicopterModel()
    A, B, c = m.A, m.B, m.c
    assert A[0, 4] == 1.0 and A[1, 5] == 1.0 and A[2, 6] == 1.0 and A[3, 7] == 1.0
    assert A[4, 4] == -0.5 and A[5, 5] == -0.5 and A[7, 7] == -5.0
    assert A[8, 0] == 0.3 and A[9, 1] == 0.3
    assert B[4, 0] == 2.0 and B[5, 1] == 2.1 and B[6, 2] == 18.0 and B[7, 3] == 111.0
    assert c[6] == -9.81
    assert np.count_nonzero(B) == 4


def test_helicopter_rotation_with_yaw():
    m = HelicopterModel(psi_star=math.pi / 2)
    np.testing.assert_allclose(m.A[:2, 4:6], [[0, -1], [1, 0]], atol=1e-15)


def test_reference_enters_through_affine_term():
    m = HelicopterModel(x_ref=1.0, y_ref=-2.0)
    assert m.c[8] == pytest.approx(-0.3) and m.c[9] == pytest.approx(0.6)


def test_trim_input_cancels_gravity():
    m = HelicopterModel()
    Ad, Bd, cd, _ = m.discrete()
    x = np.zeros(10)
    np.testing.assert_allclose(Ad @ x + Bd @ m.u_trim + cd, 0.0, atol=1e-15)


def test_discrete_spectral_radius():
    Ad = HelicopterModel().discrete()[0]
    assert np.max(np.abs(np.linalg.eigvals(Ad))) < 1.2


def test_open_loop_hover_at_trim_stays_put():
    prob = helicopter10()
    m = HelicopterModel()
    x = np.zeros(10)
    for _ in range(3000):
        x = prob.step(x, m.u_trim, np.zeros(4))
    assert np.max(np.abs(x)) <= 1e-12


def test_helicopter_problem_shape():
    prob = helicopter10()
    assert (prob.n, prob.m, prob.p) == (10, 4, 4)
    assert len(prob.constraints) == 14
    lo, hi = prob.input_box()
    assert lo.tolist() == [-1.0] * 4 and hi.tolist() == [1.0] * 4
    assert prob.state_box()[1].tolist() == list(HELI_BOX)
    # stage cost is zero at hover with trim input
    assert prob.cost(np.zeros(10), HelicopterModel().u_trim) == 0.0


def test_helicopter_noise_matrix_is_dt_scaled():
    E = HelicopterModel(dt=0.01).E
    assert E[4:8].tolist() == (0.01 * np.eye(4)).tolist()
    assert not E[:4].any() and not E[8:].any()


def test_bad_time_step():
    with pytest.raises(ValueError):
        helicopter10(dt=0.0)


def test_scenarios():
    box = scenario("box_1m")
    np.testing.assert_array_equal(box.reference(15.0), [1.0, 1.0, 0.0])
    np.testing.assert_array_equal(box.reference(0.0), [1.0, 0.0, 0.0])
    np.testing.assert_array_equal(box.reference(39.9), [0.0, 0.0, 0.0])
    assert box.legs == 4 and box.leg_end(3) == 40.0 and box.leg_end(0) == 10.0
    assert box.steps(0.02) == 2000
    hover = scenario("hover")
    assert hover.horizon == 60.0
    assert [s.name for s in scenarios()] == ["hover", "box_1m"]
    with pytest.raises(KeyError):
        scenario("loop")


def test_builtin_registry():
    assert set(BUILTIN) == {"example_1d", "scalar_lqg", "helicopter10"}
    assert builtin("scalar_lqg").name == "scalar_lqg"
    with pytest.raises(KeyError):
        builtin("pendulum")
