import math

import numpy as np
import pytest

from conftest import scalar_riccati_closed_form
from sosadp.bellman import (ControlProblem, FitError, NonBoxInputError, ValueApprox, bellman_gap,
                            bellman_residual_poly, build_program, expected_next_value, fit_value, fitting_sdp,
                            sample_constraint_set, verify_bellman)
from sosadp.parse import parse
from sosadp.poly import Polynomial
from sosadp.problems import example_1d
from sosadp.stochastic import NoiseSpec, WeightSpec


def test_riccati_oracle_matches_closed_form(lqg_riccati, expected):
    P = scalar_riccati_closed_form(0.99)
    assert lqg_riccati.P[0, 0] == pytest.approx(P, rel=1e-12)
    assert P == pytest.approx(expected["lqg_P"], rel=1e-10)
    assert lqg_riccati.residual <= 1e-10
    assert lqg_riccati.s == pytest.approx(0.99 / 0.01 * P, rel=1e-12)


def test_lqg_fit_recovers_riccati_value(lqg_fit, lqg_riccati):
    P, s = lqg_riccati.P[0, 0], lqg_riccati.s
    assert lqg_fit.status == "optimal"
    assert abs(lqg_fit.coefficient((2,)) - P) / P <= 1e-4
    assert abs(lqg_fit.coefficient((0,)) - s) / s <= 1e-3
    assert abs(lqg_fit.coefficient((1,))) <= 1e-6


def test_example_1d_objectives_frozen(fit2, fit4, expected):
    rtol = expected["objective_rtol"]
    assert fit2.objective_value == pytest.approx(expected["example_1d_objective_d2"], rel=rtol)
    assert fit4.objective_value == pytest.approx(expected["example_1d_objective_d4"], rel=rtol)
    assert fit4.objective_value >= fit2.objective_value


def test_fits_are_symmetric(fit2, fit4):
    for v in (fit2, fit4):
        for e, a in zip(v.exponents, v.alpha):
            if e[0] % 2:
                assert abs(a) <= 1e-6 * np.max(np.abs(v.alpha))


def test_certified_fits_satisfy_bellman_inequality(fit2, fit4, lqg_fit, ex1d, lqg):
    for v, prob in ((fit2, ex1d), (fit4, ex1d), (lqg_fit, lqg)):
        rep = verify_bellman(v, prob, samples=10_000, seed=3)
        assert rep.passed, rep.to_dict()
        assert rep.max_violation < 0


def test_corrupted_value_fails_verification(fit4, ex1d):
    rep = verify_bellman(fit4.shifted(50.0), ex1d, samples=10_000, seed=0)
    assert not rep.passed
    assert rep.max_violation == pytest.approx(50.0 * (1 - 0.99) + verify_bellman(fit4, ex1d, 10_000, 0)
                                              .max_violation, abs=1e-6)


def test_backoff_is_recorded_and_small(fit2, fit4):
    for v in (fit2, fit4):
        assert 0 <= v.backoff < 1e-3
        assert v.diagnostics["sdp_iterations"] > 0


def test_uncertified_fit_differs_only_by_backoff(ex1d, fit4):
    raw = fit_value(ex1d, 4, certify=False)
    np.testing.assert_allclose(raw.alpha[1:], fit4.alpha[1:], rtol=1e-12, atol=1e-15)
    assert raw.coefficient((0,)) - fit4.coefficient((0,)) == pytest.approx(fit4.backoff, rel=1e-12)


def test_value_approx_json_round_trip(fit4):
    back = ValueApprox.from_json(fit4.to_json())
    np.testing.assert_array_equal(back.alpha, fit4.alpha)
    assert back.exponents == fit4.exponents
    assert back.objective_value == fit4.objective_value
    x = np.linspace(-20, 20, 7)[:, None]
    np.testing.assert_array_equal(back(x), fit4(x))


def test_value_approx_evaluation_matches_polynomial(fit4):
    x = np.linspace(-20, 20, 11)[:, None]
    np.testing.assert_allclose(fit4(x), fit4.polynomial().evaluate(x=x), rtol=1e-12)


def test_expected_next_value_quadrature_is_exact():
    prob = example_1d()
    v = ValueApprox(1, [(2,), (4,)], [1.0, 0.01], 4)
    x = np.array([[3.0], [-7.0]])
    u = np.array([[0.5], [-1.0]])
    m = x - 0.5 * u
    exact = (m ** 2 + 1) + 0.01 * (m ** 4 + 6 * m ** 2 + 3)
    np.testing.assert_allclose(expected_next_value(v, prob, x, u), exact[:, 0], rtol=1e-12)


def test_bellman_gap_of_zero_value_is_minus_cost(ex1d):
    v = ValueApprox(1, [(0,)], [0.0], 2)
    x, u = np.array([[2.0]]), np.array([[0.5]])
    assert bellman_gap(v, ex1d, x, u)[0] == pytest.approx(-4.25)


def test_residual_polynomial_for_quadratic_basis(ex1d):
    basis = [parse("x1^2", {"x": 1})]
    r = bellman_residual_poly(ex1d, basis)
    want = parse("0.99*((x1 - 0.5*u1)^2 + 1) - x1^2", {"x": 1, "u": 1})
    assert r.linear[("alpha", 0)].allclose(want, atol=1e-12)
    assert r.base == ex1d.stage_cost


def test_odd_degree_rejected(ex1d):
    with pytest.raises(ValueError):
        build_program(ex1d, 3)


def test_fit_error_on_iteration_limit(ex1d):
    with pytest.raises(FitError) as exc:
        fit_value(ex1d, 4, max_iter=2)
    assert exc.value.status == "max_iter"


def test_fitting_sdp_sizes(ex1d):
    sdp, mp, program, sc = fitting_sdp(ex1d, 4)
    assert len(program.constraints) == 3
    assert sc.sx.tolist() == [20.0] and sc.su.tolist() == [1.0]
    assert all(s != 0 for s in sdp.block_sizes)


def test_boxes_of_example(ex1d, lqg):
    lo, hi = ex1d.input_box()
    assert lo.tolist() == [-1.0] and hi.tolist() == [1.0]
    assert ex1d.state_box()[1].tolist() == [20.0]
    assert lqg.sampling_box()[1].tolist() == [20.0, 20.0]


def test_non_box_input_constraint(ex1d):
    prob = ex1d.replace(constraints=[parse("1 - x1*u1", {"x": 1, "u": 1})])
    with pytest.raises(NonBoxInputError):
        prob.input_box()


def test_constraint_sampling_respects_constraints(ex1d):
    x, u, rate = sample_constraint_set(ex1d, 2000, seed=1)
    assert x.shape == (2000, 1)
    assert np.all(np.abs(x) <= 20) and np.all(np.abs(u) <= 1)
    assert rate == 1.0


def test_control_problem_validation(ex1d):
    with pytest.raises(ValueError):
        ex1d.replace(discount=1.0)
    with pytest.raises(ValueError):
        ex1d.replace(dynamics=[])
    with pytest.raises(ValueError):
        ex1d.replace(constraints=[Polynomial.constant(1.0, {"x": 1, "u": 1})])
    with pytest.raises(ValueError):
        ex1d.replace(noise=NoiseSpec.standard(2))
    with pytest.raises(ValueError):
        ex1d.replace(weight=WeightSpec.uniform([(-1, 1), (-1, 1)]))


def test_zero_discount_fit_is_stage_cost_minimum(ex1d):
    prob = ex1d.replace(discount=0.0)
    v = fit_value(prob, 2)
    # with gamma = 0 the optimal value is min_u x^2 + u^2 = x^2
    assert v.coefficient((2,)) == pytest.approx(1.0, abs=1e-6)
    assert v.coefficient((0,)) == pytest.approx(0.0, abs=1e-5)


def test_helicopter_convex_fit_frozen(heli_fit, heli, expected):
    assert heli_fit.status == "optimal" and heli_fit.convexity_enforced
    assert heli_fit.objective_value == pytest.approx(expected["helicopter_objective_d2_convex"],
                                                     rel=expected["objective_rtol"])
    # the convex quadratic fit has a positive semidefinite quadratic part
    Q = np.zeros((10, 10))
    for e, a in zip(heli_fit.exponents, heli_fit.alpha):
        idx = [i for i, k in enumerate(e) for _ in range(k)]
        if len(idx) == 2:
            i, j = idx
            Q[i, j] += a / (1 if i == j else 2)
            Q[j, i] += 0 if i == j else a / 2
    assert np.linalg.eigvalsh(Q)[0] >= -1e-9
