"""Reference solutions: discounted Riccati recursion and 1D value iteration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .bellman import ControlProblem


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Riccati


@dataclass
class RiccatiSolution:
    P: np.ndarray
    K: np.ndarray
    s: float
    iterations: int
    residual: float


def _riccati_map(P, A, B, Q, R, gamma):
    S = R + gamma * B.T @ P @ B
    BPA = B.T @ P @ A
    return Q + gamma * A.T @ P @ A - gamma ** 2 * BPA.T @ np.linalg.solve(S, BPA)


def riccati_residual(P, A, B, Q, R, gamma) -> float:
    """Frobenius norm of ``P - RiccatiMap(P)``."""
    A, B, Q, R, P = (np.atleast_2d(np.asarray(M, float)) for M in (A, B, Q, R, P))
    return float(np.linalg.norm(P - _riccati_map(P, A, B, Q, R, gamma)))


def riccati_discounted(A, B, Q, R, gamma: float, noise_cov, tol: float = 1e-12,
                       max_iter: int = 100_000) -> RiccatiSolution:
    """Discounted LQG value ``V(x) = x'Px + s`` and optimal gain ``u = -Kx``.

    Fixed-point iteration on the discounted Riccati map started from ``Q``.
    """
    A, B, Q, R, W = (np.atleast_2d(np.asarray(M, float)) for M in (A, B, Q, R, noise_cov))
    P = Q.copy()
    for it in range(1, max_iter + 1):
        Pn = _riccati_map(P, A, B, Q, R, gamma)
        Pn = 0.5 * (Pn + Pn.T)
        if not np.all(np.isfinite(Pn)):
            raise OracleError("Riccati iteration diverged")
        delta = np.max(np.abs(Pn - P))
        P = Pn
        if delta <= tol * max(1.0, np.max(np.abs(P))):
            break
    else:
        raise OracleError(f"Riccati iteration did not converge in {max_iter} steps")
    K = gamma * np.linalg.solve(R + gamma * B.T @ P @ B, B.T @ P @ A)
    s = gamma / (1.0 - gamma) * float(np.trace(P @ W)) if gamma < 1 else math.inf
    return RiccatiSolution(P, K, s, it, riccati_residual(P, A, B, Q, R, gamma))


def linear_quadratic_data(prob: ControlProblem):
    """Extract ``(A, B, Q, R, E)`` from a problem with linear dynamics and quadratic cost."""
    n, m, p = prob.n, prob.m, prob.p
    A, B, E = np.zeros((n, n)), np.zeros((n, m)), np.zeros((n, p))
    for i, f in enumerate(prob.dynamics):
        if f.degree > 1:
            raise OracleError("dynamics are not linear")
        for e, c in f.terms.items():
            j = int(np.argmax(e)) if sum(e) else None
            if j is None:
                if c != 0:
                    raise OracleError("dynamics contain an affine offset")
            elif j < n:
                A[i, j] = c
            elif j < n + m:
                B[i, j - n] = c
            else:
                E[i, j - n - m] = c
    H = np.zeros((n + m, n + m))
    for e, c in prob.stage_cost.terms.items():
        idx = [k for k, v in enumerate(e) for _ in range(v)]
        if len(idx) != 2:
            raise OracleError("stage cost is not a pure quadratic form")
        a, b = idx
        H[a, b] += c / 2
        H[b, a] += c / 2
    if np.any(H[:n, n:]):
        raise OracleError("stage cost couples state and input")
    return A, B, H[:n, :n], H[n:, n:], E


# ---------------------------------------------------------------------------
# value iteration


@dataclass
class GridValueFunction:
    lo: float
    hi: float
    step: float
    values: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    policy: Optional[np.ndarray] = None
    iterations: int = 0
    history: list = field(default_factory=list, repr=False)

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, len(self.values))

    def __call__(self, x) -> np.ndarray:
        return np.interp(x, self.grid, self.values)


def gauss_hermite(k: int = 11):
    """Nodes and weights for expectations under N(0, 1)."""
    t, w = np.polynomial.hermite_e.hermegauss(k)
    return t, w / w.sum()


class _Operator:
    """Discretized Bellman operator on a uniform grid (1 state, 1 input)."""

    def __init__(self, prob: ControlProblem, grid: np.ndarray, nodes, weights, n_u: int):
        if prob.n != 1 or prob.m != 1:
            raise OracleError("value iteration is implemented for one state and one input")
        if prob.p not in (0, 1):
            raise OracleError("value iteration supports at most one noise component")
        lo, hi = prob.input_box()
        if not (np.isfinite(lo[0]) and np.isfinite(hi[0])):
            raise OracleError("value iteration needs a bounded input interval")
        self.prob = prob
        self.grid = grid
        self.ulo, self.uhi = float(lo[0]), float(hi[0])
        self.u_grid = np.linspace(self.ulo, self.uhi, n_u)
        if prob.p:
            mu, sd = prob.noise.mean[0], prob.noise.stddev[0]
            self.w = mu + sd * np.asarray(nodes)
            self.qw = np.asarray(weights)
        else:
            self.w, self.qw = np.zeros(1), np.ones(1)
        self.gamma = prob.discount
        self.h = grid[1] - grid[0]

    def _next(self, x, u):
        x = np.asarray(x, float)[..., None]
        u = np.asarray(u, float)[..., None]
        xs = np.broadcast_to(x, np.broadcast(x, u, self.w).shape)
        us = np.broadcast_to(u, xs.shape)
        ws = np.broadcast_to(self.w, xs.shape)
        return self.prob.step(xs[..., None], us[..., None], ws[..., None])[..., 0]

    def interp(self, V, x):
        """Linear interpolation on the uniform grid, constant beyond its ends."""
        pos = np.clip((x - self.grid[0]) / self.h, 0.0, len(self.grid) - 1.0)
        i0 = np.minimum(pos.astype(np.int64), len(self.grid) - 2)
        t = pos - i0
        return V[i0] * (1.0 - t) + V[i0 + 1] * t

    def q(self, V, x, u):
        """``l(x,u) + gamma sum_j q_j V(f(x,u,w_j))`` with clamped linear interpolation."""
        nxt = self._next(x, u)
        ev = self.interp(V, nxt) @ self.qw
        return self.prob.cost(np.asarray(x, float)[..., None], np.asarray(u, float)[..., None]) + self.gamma * ev

    def apply(self, V, refine: bool = True):
        X, U = np.meshgrid(self.grid, self.u_grid, indexing="ij")
        Qv = self.q(V, X, U)
        k = np.argmin(Qv, axis=1)
        best_u = self.u_grid[k]
        best = Qv[np.arange(len(self.grid)), k]
        if refine:
            du = self.u_grid[1] - self.u_grid[0]
            a = np.maximum(best_u - du, self.ulo)
            b = np.minimum(best_u + du, self.uhi)
            u_ref, q_ref = self._golden(V, a, b)
            better = q_ref < best
            best = np.where(better, q_ref, best)
            best_u = np.where(better, u_ref, best_u)
        return best, best_u

    def _golden(self, V, a, b, iters: int = 40):
        r = (math.sqrt(5) - 1) / 2
        c = b - r * (b - a)
        d = a + r * (b - a)
        fc, fd = self.q(V, self.grid, c), self.q(V, self.grid, d)
        for _ in range(iters):
            left = fc < fd
            b = np.where(left, d, b)
            a = np.where(left, a, c)
            d_new = np.where(left, c, a + r * (b - a))
            c_new = np.where(left, b - r * (b - a), d)
            fd_new = np.where(left, fc, np.nan)
            fc_new = np.where(left, np.nan, fd)
            c, d = c_new, d_new
            fc = np.where(left, self.q(V, self.grid, c), fc_new)
            fd = np.where(left, fd_new, self.q(V, self.grid, d))
        u = 0.5 * (a + b)
        return u, self.q(V, self.grid, u)

    def policy_matrix(self, u):
        """Sparse transition matrix of the interpolated chain under policy ``u``."""
        nxt = self._next(self.grid, u)
        pos = np.clip((nxt - self.grid[0]) / self.h, 0, len(self.grid) - 1)
        i0 = np.minimum(np.floor(pos).astype(int), len(self.grid) - 2)
        t = pos - i0
        rows = np.repeat(np.arange(len(self.grid)), len(self.qw) * 2)
        cols = np.stack([i0, i0 + 1], axis=-1).reshape(len(self.grid), -1)
        vals = np.stack([(1 - t) * self.qw, t * self.qw], axis=-1).reshape(len(self.grid), -1)
        return sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(len(self.grid),) * 2)


def value_iteration_1d(prob: ControlProblem, lo: float = -24.0, hi: float = 24.0, points: int = 3201,
                       max_iters: int = 100_000, vi_tol: float = 1e-6, quad_nodes: int = 11,
                       n_u: int = 201, policy_steps: bool = True) -> GridValueFunction:
    """Value iteration for one-state problems on a uniform grid.

    Expectations use Gauss-Hermite quadrature, values between grid points are
    interpolated linearly and clamped beyond the grid ends, and the inner
    minimization is a grid search over the input interval refined by
    golden-section search.  With ``policy_steps`` each Bellman update is
    followed by an exact evaluation of the current greedy policy on the
    interpolated chain, which keeps the same fixed point but needs far fewer
    sweeps.  Iteration stops when ``sup |TV - V| <= vi_tol (1 - gamma)``.
    """
    grid = np.linspace(lo, hi, points)
    nodes, weights = gauss_hermite(quad_nodes)
    op = _Operator(prob, grid, nodes, weights, n_u)
    V = np.zeros(points)
    history = []
    stop = vi_tol * (1.0 - prob.discount)
    u = np.zeros(points)
    for it in range(1, max_iters + 1):
        TV, u = op.apply(V)
        delta = float(np.max(np.abs(TV - V)))
        history.append(delta)
        if not np.all(np.isfinite(TV)):
            raise OracleError("value iteration produced non-finite values")
        if delta <= stop:
            V = TV
            break
        V = TV
        if policy_steps:
            P = op.policy_matrix(u)
            cost = prob.cost(grid[:, None], u[:, None])
            M = sp.identity(points, format="csr") - prob.discount * P
            # an inexact evaluation is enough: the stopping test is on TV - V
            V, _ = spla.gmres(M, cost, x0=V, rtol=1e-12, atol=0.0, restart=50, maxiter=20)
    else:
        raise OracleError(f"value iteration did not converge in {max_iters} sweeps")
    return GridValueFunction(lo, hi, grid[1] - grid[0], V, nodes, weights, u, it, history)


def apply_operator(prob: ControlProblem, V: np.ndarray, lo: float = -24.0, hi: float = 24.0,
                   quad_nodes: int = 11, n_u: int = 201, refine: bool = True) -> np.ndarray:
    """One application of the discretized Bellman operator to grid values ``V``."""
    grid = np.linspace(lo, hi, len(V))
    nodes, weights = gauss_hermite(quad_nodes)
    return _Operator(prob, grid, nodes, weights, n_u).apply(np.asarray(V, float), refine)[0]
