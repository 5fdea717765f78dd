"""Built-in benchmark problems."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from .bellman import ControlProblem
from .parse import parse
from .poly import Polynomial, VarBlock
from .stochastic import NoiseSpec, WeightSpec

GRAVITY = 9.81


def example_1d(discount: float = 0.99) -> ControlProblem:
    """Scalar linear system with state and input limits: x+ = x - 0.5u + w."""
    dims = {"x": 1, "u": 1, "w": 1}
    return ControlProblem(
        n=1, m=1, p=1,
        dynamics=[parse("x1 - 0.5*u1 + w1", dims)],
        stage_cost=parse("x1^2 + u1^2", {"x": 1, "u": 1}),
        discount=discount,
        constraints=[parse("400 - x1^2", {"x": 1, "u": 1}), parse("1 - u1^2", {"x": 1, "u": 1})],
        noise=NoiseSpec.standard(1),
        weight=WeightSpec.uniform([(-20.0, 20.0)]),
        name="example_1d",
    )


def scalar_lqg(discount: float = 0.99) -> ControlProblem:
    """The same dynamics and cost as :func:`example_1d` without any constraints."""
    base = example_1d(discount)
    return base.replace(constraints=[], name="scalar_lqg")


# ---------------------------------------------------------------------------
# helicopter


HELI_PARAMS = {"b_x": 2.0, "k_x": -0.5, "b_y": 2.1, "k_y": -0.5, "b_psi": 111.0, "k_psi": -5.0, "b_z": 18.0}
HELI_STATE_NAMES = ("X_I", "Y_I", "Z_I", "Psi", "Xd_B", "Yd_B", "Zd_B", "Psid", "X_int", "Y_int")
HELI_Q = (10.0, 10.0, 10.0, 1.0, 1.0, 1.0, 1.0, 0.1, 0.5, 0.5)
HELI_R = (1.0, 1.0, 1.0, 1.0)
HELI_BOX = (2.0, 2.0, 2.0, math.pi / 2, 2.0, 2.0, 2.0, 2.0, 1.0, 1.0)
HELI_KI = 0.3
HELI_DISCOUNT = 0.995


@dataclass(frozen=True)
class HelicopterModel:
    """Continuous-time model ``xdot = A x + B u + c``."""

    b_x: float = HELI_PARAMS["b_x"]
    k_x: float = HELI_PARAMS["k_x"]
    b_y: float = HELI_PARAMS["b_y"]
    k_y: float = HELI_PARAMS["k_y"]
    b_psi: float = HELI_PARAMS["b_psi"]
    k_psi: float = HELI_PARAMS["k_psi"]
    b_z: float = HELI_PARAMS["b_z"]
    g: float = GRAVITY
    k_i: float = HELI_KI
    psi_star: float = 0.0
    x_ref: float = 0.0
    y_ref: float = 0.0
    dt: float = 0.02

    @property
    def A(self) -> np.ndarray:
        A = np.zeros((10, 10))
        cp, sp = math.cos(self.psi_star), math.sin(self.psi_star)
        A[0, 4], A[0, 5] = cp, -sp
        A[1, 4], A[1, 5] = sp, cp
        A[2, 6] = 1.0
        A[3, 7] = 1.0
        A[4, 4] = self.k_x
        A[5, 5] = self.k_y
        A[7, 7] = self.k_psi
        A[8, 0] = self.k_i
        A[9, 1] = self.k_i
        return A

    @property
    def B(self) -> np.ndarray:
        B = np.zeros((10, 4))
        B[4, 0] = self.b_x
        B[5, 1] = self.b_y
        B[6, 2] = self.b_z
        B[7, 3] = self.b_psi
        return B

    @property
    def c(self) -> np.ndarray:
        c = np.zeros(10)
        c[6] = -self.g
        c[8] = -self.k_i * self.x_ref
        c[9] = -self.k_i * self.y_ref
        return c

    @property
    def E(self) -> np.ndarray:
        """Noise input: unit-variance acceleration noise, forward-Euler scaled by ``dt``."""
        E = np.zeros((10, 4))
        for k in range(4):
            E[4 + k, k] = self.dt
        return E

    @property
    def u_trim(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.g / self.b_z, 0.0])

    def discrete(self):
        """Forward-Euler matrices ``(Ad, Bd, cd, E)``."""
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        return np.eye(10) + self.dt * self.A, self.dt * self.B, self.dt * self.c, self.E


def linear_dynamics(Ad, Bd, cd, E) -> List[Polynomial]:
    n, m = Bd.shape
    p = E.shape[1]
    layout = (VarBlock("x", n), VarBlock("u", m), VarBlock("w", p))
    nv = n + m + p
    out = []
    for i in range(n):
        terms = {}
        row = np.concatenate([Ad[i], Bd[i], E[i]])
        for j, a in enumerate(row):
            if a != 0.0:
                e = [0] * nv
                e[j] = 1
                terms[tuple(e)] = float(a)
        if cd[i] != 0.0:
            terms[(0,) * nv] = float(cd[i])
        out.append(Polynomial(terms, layout))
    return out


def quadratic_cost(Q, R, u0=None) -> Polynomial:
    """``x'Qx + (u - u0)'R(u - u0)`` for diagonal weights."""
    Q, R = np.asarray(Q, float), np.asarray(R, float)
    n, m = len(Q), len(R)
    u0 = np.zeros(m) if u0 is None else np.asarray(u0, float)
    layout = (VarBlock("x", n), VarBlock("u", m))
    xs = [Polynomial.var("x", i, n, layout) for i in range(n)]
    us = [Polynomial.var("u", j, m, layout) for j in range(m)]
    out = Polynomial.zero(layout)
    for i in range(n):
        out = out + (xs[i] * xs[i]).scale(Q[i])
    for j in range(m):
        d = us[j] - Polynomial.constant(u0[j], layout)
        out = out + (d * d).scale(R[j])
    return out


def helicopter10(psi_star: float = 0.0, dt: float = 0.02, discount: float = HELI_DISCOUNT,
                 model: HelicopterModel | None = None) -> ControlProblem:
    """Ten-state helicopter hover model around yaw ``psi_star``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    model = model or HelicopterModel(psi_star=psi_star, dt=dt)
    Ad, Bd, cd, E = model.discrete()
    layout = (VarBlock("x", 10), VarBlock("u", 4))
    cons = []
    for i, h in enumerate(HELI_BOX):
        xi = Polynomial.var("x", i, 10, layout)
        cons.append(Polynomial.constant(h * h, layout) - xi * xi)
    for j in range(4):
        uj = Polynomial.var("u", j, 4, layout)
        cons.append(Polynomial.constant(1.0, layout) - uj * uj)
    return ControlProblem(
        n=10, m=4, p=4,
        dynamics=linear_dynamics(Ad, Bd, cd, E),
        stage_cost=quadratic_cost(HELI_Q, HELI_R, model.u_trim),
        discount=discount,
        constraints=cons,
        noise=NoiseSpec.standard(4),
        weight=WeightSpec.uniform([(-h, h) for h in HELI_BOX]),
        name="helicopter10",
    )


@dataclass(frozen=True)
class Scenario:
    """Waypoint path flown leg by leg.

    ``setpoints[0]`` is the starting position; during leg ``k`` (from
    ``switch_times[k]`` until the next switch or the horizon) the reference
    is ``setpoints[k + 1]``.
    """

    name: str
    x0: tuple
    setpoints: tuple
    switch_times: tuple
    horizon: float
    noise_scale: float = 1.0

    def __post_init__(self):
        if len(self.setpoints) != len(self.switch_times) + 1:
            raise ValueError("a path with k legs needs k + 1 setpoints")
        if any(b <= a for a, b in zip(self.switch_times, self.switch_times[1:])):
            raise ValueError("switch times must be strictly increasing")
        if self.switch_times and self.switch_times[-1] >= self.horizon:
            raise ValueError("the last leg must start before the horizon")

    @property
    def legs(self) -> int:
        return len(self.switch_times)

    def steps(self, dt: float) -> int:
        return int(round(self.horizon / dt))

    def leg_at(self, t: float) -> int:
        return max(int(np.searchsorted(self.switch_times, t, side="right")) - 1, 0)

    def reference(self, t: float) -> np.ndarray:
        """Position setpoint ``(x_ref, y_ref, z_ref)`` in force at time ``t``."""
        return np.asarray(self.setpoints[self.leg_at(t) + 1], float)

    def leg_end(self, k: int) -> float:
        return self.switch_times[k + 1] if k + 1 < len(self.switch_times) else self.horizon


def scenarios() -> List[Scenario]:
    origin = (0.0, 0.0, 0.0)
    return [
        Scenario("hover", (0.0,) * 10, (origin, origin), (0.0,), 60.0),
        Scenario("box_1m", (0.0,) * 10,
                 (origin, (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0), origin),
                 (0.0, 10.0, 20.0, 30.0), 40.0),
    ]


def scenario(name: str) -> Scenario:
    for s in scenarios():
        if s.name == name:
            return s
    raise KeyError(f"unknown scenario {name!r}")


BUILTIN = {"example_1d": example_1d, "scalar_lqg": scalar_lqg, "helicopter10": helicopter10}


def builtin(name: str) -> ControlProblem:
    try:
        return BUILTIN[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; choose from {sorted(BUILTIN)}") from None
