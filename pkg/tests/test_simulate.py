import csv
import math

import numpy as np
import pytest

from sosadp.bellman import ControlProblem, ValueApprox
from sosadp.parse import parse
from sosadp.simulate import (RolloutDivergence, estimate_cost, horizon_for, noise_draws, rollout, rollout_with,
                             trajectory_rows, write_csv)
from sosadp.stochastic import NoiseSpec, WeightSpec


def autonomous(a, gamma=0.9, noise=False):
    p = 1 if noise else 0
    dims = {"x": 1, "w": 1} if noise else {"x": 1}
    return ControlProblem(n=1, m=0, p=p, dynamics=[parse(f"{a}*x1" + (" + w1" if noise else ""), dims)],
                          stage_cost=parse("x1^2", {"x": 1}), discount=gamma, constraints=[],
                          noise=NoiseSpec.standard(p), weight=WeightSpec.uniform([(-1, 1)]), name="auto")


ZERO = ValueApprox(1, [(0,)], [0.0], 2)


@pytest.mark.parametrize("horizon", [1, 10, 200])
def test_geometric_series(horizon):
    prob = autonomous(1.0, gamma=0.9)
    traj = rollout(prob, ZERO, [1.0], horizon, noise=False)
    assert traj.discounted_cost == pytest.approx((1 - 0.9 ** horizon) / 0.1, rel=1e-13)
    assert traj.x.shape == (horizon + 1, 1) and traj.u.shape == (horizon, 0)


def test_zero_state_has_zero_cost():
    traj = rollout(autonomous(0.5), ZERO, [0.0], 50, noise=False)
    assert traj.discounted_cost == 0.0


def test_contracting_system_cost_in_closed_form():
    # x_t = 0.5^t, cost sum (0.9 * 0.25)^t
    traj = rollout(autonomous(0.5), ZERO, [1.0], 400, noise=False)
    assert traj.discounted_cost == pytest.approx(1 / (1 - 0.225), rel=1e-13)


def test_noisy_autonomous_mean_matches_expectation():
    # E sum 0.9^t x_t^2 with x0 = 0 and x_{t+1} = 0.5 x_t + w: E x_t^2 = (1 - 0.25^t)/(0.75)
    prob = autonomous(0.5, noise=True)
    rep = estimate_cost(prob, ZERO, [0.0], n_rollouts=4000, horizon=300, seed=1)
    exact = sum(0.9 ** t * (1 - 0.25 ** t) / 0.75 for t in range(300))
    assert abs(rep.mean_cost - exact) <= 4 * rep.stderr


def test_divergence_is_reported_with_step():
    with pytest.raises(RolloutDivergence) as exc:
        rollout(autonomous(10.0), ZERO, [1.0], 100, noise=False)
    assert exc.value.step == 7


def test_divergent_rollouts_are_excluded_and_counted():
    prob = autonomous(1.0, noise=True)
    prob = prob.replace(dynamics=[parse("x1 + 300000*w1", {"x": 1, "w": 1})])
    rep = estimate_cost(prob, ZERO, [0.0], n_rollouts=200, horizon=5, seed=0, keep=True)
    assert 0 < rep.n_diverged < 200
    assert rep.n_rollouts + rep.n_diverged == 200
    assert len(rep.costs) == rep.n_rollouts
    fn = lambda X: np.zeros((len(X), 0))
    bad = [t for t in (rollout_with(prob, fn, [0.0], 5, seed=k) for k in range(200)) if t.diverged]
    assert len(bad) == rep.n_diverged
    assert all(np.linalg.norm(t.x[t.diverged_at - 1]) <= 1e6 for t in bad)


def test_reproducible_and_keyed_per_rollout(lqg_fit, lqg):
    a = estimate_cost(lqg, lqg_fit, [1.0], n_rollouts=6, horizon=50, seed=10)
    b = estimate_cost(lqg, lqg_fit, [1.0], n_rollouts=6, horizon=50, seed=10)
    c = estimate_cost(lqg, lqg_fit, [1.0], n_rollouts=2, horizon=50, seed=13)
    np.testing.assert_array_equal(a.costs, b.costs)
    np.testing.assert_array_equal(a.costs[3:5], c.costs)
    assert len(set(a.costs.tolist())) == 6


def test_noise_draws_are_time_major_philox():
    prob = autonomous(0.5, noise=True)
    w = noise_draws(4, 10, prob)
    z = np.random.Generator(np.random.Philox(key=4)).standard_normal((10, 1))
    np.testing.assert_array_equal(w, z)


def test_lqg_deterministic_cost_equals_riccati_quadratic(lqg_fit, lqg, lqg_riccati):
    traj = rollout(lqg, lqg_fit, [3.0], 3000, noise=False)
    assert traj.discounted_cost == pytest.approx(lqg_riccati.P[0, 0] * 9.0, rel=1e-4)


def test_lqg_monte_carlo_matches_riccati(lqg_fit, lqg, lqg_riccati):
    rep = estimate_cost(lqg, lqg_fit, [1.0], n_rollouts=500, horizon=1000, seed=0)
    exact = lqg_riccati.P[0, 0] + lqg_riccati.s
    assert abs(rep.mean_cost - exact) <= 3 * rep.stderr + rep.truncation_bound
    assert rep.bound_holds


def test_report_fields(fit2, ex1d):
    rep = estimate_cost(ex1d, fit2, [10.0], n_rollouts=20, seed=0, keep=True)
    assert rep.horizon == horizon_for(0.99) == 688
    assert rep.n_rollouts == 20 and rep.n_diverged == 0
    lmax = max(t.stage_cost.max() for t in rep.trajectories)
    assert rep.truncation_bound == pytest.approx(0.99 ** 688 * lmax / 0.01)
    assert rep.stderr == pytest.approx(np.std(rep.costs, ddof=1) / math.sqrt(20))
    d = rep.to_dict()
    assert d["bound_value"] == fit2(np.array([10.0]))
    assert set(d) >= {"mean_cost", "stderr", "truncation_bound", "bound_holds"}


def test_horizon_for():
    assert horizon_for(0.99) == 688
    assert horizon_for(0.0) == 1
    assert 0.9 ** horizon_for(0.9) <= 1e-3 < 0.9 ** (horizon_for(0.9) - 1)


def test_estimate_needs_two_rollouts(fit2, ex1d):
    with pytest.raises(ValueError):
        estimate_cost(ex1d, fit2, [0.0], n_rollouts=1)


def test_csv_round_trip_is_exact(tmp_path, fit2, ex1d):
    traj = rollout(ex1d, fit2, [5.0], 30, seed=2)
    header, rows = trajectory_rows(traj)
    path = tmp_path / "traj.csv"
    write_csv(path, header, rows)
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["t", "x1", "u1", "l"]
    back = np.array(data[1:], float)
    np.testing.assert_array_equal(back[:, 1], traj.x[:30, 0])
    np.testing.assert_array_equal(back[:, 3], traj.stage_cost)
