"""Monte Carlo closed-loop rollouts of the greedy policy.

Noise for rollout ``i`` comes from a Philox counter-based generator keyed by
``seed + i``; draws are taken time-major (all components of step 0, then
step 1, ...), so a trajectory depends only on its own key.
"""
from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .bellman import ControlProblem, ValueApprox
from .policy import GreedyPolicy
from .problems import HelicopterModel, Scenario, helicopter10

DIVERGENCE_NORM = 1e6


class RolloutDivergence(RuntimeError):
    def __init__(self, step: int, norm: float):
        super().__init__(f"state norm {norm:.3g} exceeded {DIVERGENCE_NORM:g} at step {step}")
        self.step = step
        self.norm = norm


def horizon_for(discount: float, eps: float = 1e-3) -> int:
    """Smallest ``T`` with ``discount**T <= eps``."""
    if discount <= 0:
        return 1
    return int(math.ceil(math.log(eps) / math.log(discount)))


def noise_draws(seed: int, horizon: int, prob: ControlProblem, scale: float = 1.0) -> np.ndarray:
    """Noise samples of shape ``(horizon, p)`` for one rollout."""
    z = np.random.Generator(np.random.Philox(key=int(seed))).standard_normal((horizon, prob.p))
    return np.asarray(prob.noise.mean, float) + scale * np.asarray(prob.noise.stddev, float) * z


@dataclass
class Trajectory:
    x: np.ndarray
    u: np.ndarray
    stage_cost: np.ndarray
    discounted_cost: float
    diverged_at: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


@dataclass
class RolloutReport:
    mean_cost: float
    stderr: float
    horizon: int
    truncation_bound: float
    bound_value: float
    n_rollouts: int
    n_diverged: int = 0
    costs: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    trajectories: Optional[List[Trajectory]] = field(default=None, repr=False)

    @property
    def bound_holds(self) -> bool:
        """``V(x0) <= mean + 3 stderr + truncation bound``."""
        return self.bound_value <= self.mean_cost + 3.0 * self.stderr + self.truncation_bound

    def to_dict(self) -> dict:
        return {"mean_cost": self.mean_cost, "stderr": self.stderr, "horizon": self.horizon,
                "truncation_bound": self.truncation_bound, "bound_value": self.bound_value,
                "n_rollouts": self.n_rollouts, "n_diverged": self.n_diverged,
                "bound_holds": self.bound_holds}


def _simulate(prob: ControlProblem, policy, x0, horizon: int, seeds: Sequence[int], noise: bool,
              noise_scale: float, keep: bool):
    """Run all rollouts in lockstep; returns per-rollout costs, divergence steps, trajectories."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    N, n = len(seeds), prob.n
    X = np.broadcast_to(np.asarray(x0, float).reshape(-1), (N, n)).copy()
    if X.shape[1] != n:
        raise ValueError(f"x0 has {X.shape[1]} entries, problem has {n}")
    W = (np.stack([noise_draws(s, horizon, prob, noise_scale) for s in seeds], axis=1)
         if noise and prob.p else np.zeros((horizon, N, prob.p)))
    if not noise and prob.p:
        W += np.asarray(prob.noise.mean, float)
    xs = [X.copy()] if keep else None
    us, ls = ([], []) if keep else (None, None)
    total = np.zeros(N)
    diverged = np.full(N, -1)
    alive = np.ones(N, dtype=bool)
    disc = 1.0
    for t in range(horizon):
        U = np.zeros((N, prob.m))
        if alive.any():
            U[alive] = policy(X[alive])
        L = prob.cost(X, U)
        total += np.where(alive, disc * L, 0.0)
        Xn = prob.step(X, U, W[t])
        norm = np.linalg.norm(Xn, axis=1)
        bad = alive & ~(norm <= DIVERGENCE_NORM)
        diverged[bad] = t + 1
        alive &= ~bad
        X = np.where(alive[:, None], Xn, X)
        disc *= prob.discount
        if keep:
            xs.append(X.copy())
            us.append(U)
            ls.append(L)
    trajs = None
    if keep:
        xa, ua, la = np.stack(xs, 1), np.stack(us, 1), np.stack(ls, 1)
        trajs = [Trajectory(xa[i], ua[i], la[i], float(total[i]), None if diverged[i] < 0 else int(diverged[i]))
                 for i in range(N)]
    return total, diverged, trajs


def _batch_policy(v: ValueApprox, prob: ControlProblem, policy: Optional[GreedyPolicy]):
    pol = policy or GreedyPolicy(v, prob)
    return lambda X: pol.batch(X)[0]


def rollout(prob: ControlProblem, v: ValueApprox, x0, horizon: int, seed: int = 0, noise: bool = True,
            noise_scale: float = 1.0, policy: Optional[GreedyPolicy] = None) -> Trajectory:
    """One closed-loop trajectory under the greedy policy of ``v``.

    Raises :class:`RolloutDivergence` if the state norm exceeds 1e6.
    """
    _, div, trajs = _simulate(prob, _batch_policy(v, prob, policy), x0, horizon, [seed], noise, noise_scale, True)
    if div[0] >= 0:
        raise RolloutDivergence(int(div[0]), float(np.linalg.norm(trajs[0].x[div[0] - 1])))
    return trajs[0]


def rollout_with(prob: ControlProblem, policy_fn, x0, horizon: int, seed: int = 0, noise: bool = True) -> Trajectory:
    """Trajectory under an arbitrary batched policy ``policy_fn(X) -> U``."""
    _, _, trajs = _simulate(prob, policy_fn, x0, horizon, [seed], noise, 1.0, True)
    return trajs[0]


def estimate_cost(prob: ControlProblem, v: ValueApprox, x0, n_rollouts: int = 500, horizon: Optional[int] = None,
                  seed: int = 0, noise: bool = True, keep: bool = False,
                  policy: Optional[GreedyPolicy] = None) -> RolloutReport:
    """Monte Carlo estimate of the discounted cost from ``x0`` over seeds ``seed .. seed+n-1``.

    Diverged rollouts are excluded from the mean and counted.  The truncation
    bound is ``gamma**T * max l / (1 - gamma)`` with ``max l`` the largest
    stage cost seen along any kept rollout.
    """
    if n_rollouts < 2:
        raise ValueError("need at least two rollouts")
    horizon = horizon or horizon_for(prob.discount)
    seeds = [seed + i for i in range(n_rollouts)]
    fn = _batch_policy(v, prob, policy)
    total, div, trajs = _simulate(prob, fn, x0, horizon, seeds, noise, 1.0, True)
    ok = div < 0
    costs = total[ok]
    if len(costs) == 0:
        raise RolloutDivergence(int(div.max()), math.inf)
    mean = math.fsum(costs) / len(costs)
    stderr = float(np.std(costs, ddof=1) / math.sqrt(len(costs))) if len(costs) > 1 else math.nan
    lmax = max(float(t.stage_cost.max()) for t, good in zip(trajs, ok) if good)
    trunc = prob.discount ** horizon * lmax / (1.0 - prob.discount)
    return RolloutReport(mean, stderr, horizon, trunc, float(v(np.asarray(x0, float))), len(costs),
                         int((~ok).sum()), costs, trajs if keep else None)


# ---------------------------------------------------------------------------
# helicopter scenarios


@dataclass
class ScenarioTrace:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    ref: np.ndarray
    stage_cost: np.ndarray

    def position_error(self) -> np.ndarray:
        return np.linalg.norm(self.x[:, :3] - self.ref, axis=1)


def simulate_scenario(v: ValueApprox, scen: Scenario, seed: int = 0, noise: bool = True, dt: float = 0.02,
                      x0=None, model: Optional[HelicopterModel] = None,
                      policy: Optional[GreedyPolicy] = None) -> ScenarioTrace:
    """Fly a helicopter scenario with the greedy policy of ``v``.

    The plant integrates the position error through the affine term of the
    model; the policy sees the state shifted by the active setpoint, which is
    exactly the reference-free problem ``v`` was fitted on.
    """
    base = model or HelicopterModel(dt=dt)
    prob = helicopter10(psi_star=base.psi_star, dt=base.dt, model=base)
    pol = policy or GreedyPolicy(v, prob)
    steps = scen.steps(base.dt)
    x = np.asarray(scen.x0 if x0 is None else x0, float).copy()
    w = (noise_draws(seed, steps, prob, scen.noise_scale) if noise else np.zeros((steps, prob.p)))
    plants = {}
    ts, xs, us, refs, ls = [], [], [], [], []
    for k in range(steps):
        t = k * base.dt
        leg = scen.leg_at(t)
        ref = scen.reference(t)
        if leg not in plants:
            m = dataclasses.replace(base, x_ref=float(ref[0]), y_ref=float(ref[1]))
            plants[leg] = m.discrete()
        Ad, Bd, cd, E = plants[leg]
        shift = np.zeros(10)
        shift[:3] = ref
        u = pol.batch((x - shift)[None, :])[0][0]
        ts.append(t)
        xs.append(x)
        us.append(u)
        refs.append(ref)
        ls.append(float(prob.cost((x - shift)[None, :], u[None, :])[0]))
        x = Ad @ x + Bd @ u + cd + E @ w[k]
        if not np.linalg.norm(x) <= DIVERGENCE_NORM:
            raise RolloutDivergence(k + 1, float(np.linalg.norm(x)))
    ts.append(steps * base.dt)
    xs.append(x)
    return ScenarioTrace(np.array(ts), np.array(xs), np.array(us), np.array(refs + [refs[-1]]), np.array(ls))


# ---------------------------------------------------------------------------
# CSV


def write_csv(path, header: Sequence[str], rows) -> None:
    """Comma-separated file with a header row and 17 significant digits."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in rows:
            wr.writerow(["%.17g" % float(v) for v in row])


def trajectory_rows(traj: Trajectory):
    """Header and rows ``t, x..., u..., l`` for a rollout."""
    T = len(traj.u)
    n, m = traj.x.shape[1], traj.u.shape[1]
    header = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)] + ["l"]
    rows = [[t, *traj.x[t], *traj.u[t], traj.stage_cost[t]] for t in range(T)]
    return header, rows


def scenario_rows(trace: ScenarioTrace):
    n, m = trace.x.shape[1], trace.u.shape[1]
    header = (["t"] + [f"x{i + 1}" for i in range(n)] + [f"u{j + 1}" for j in range(m)]
              + ["ref_x", "ref_y", "ref_z", "l"])
    rows = [[trace.t[k], *trace.x[k], *trace.u[k], *trace.ref[k], trace.stage_cost[k]] for k in range(len(trace.u))]
    return header, rows
