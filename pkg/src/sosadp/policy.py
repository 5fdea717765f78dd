"""Greedy policy: minimize ``l(x,u) + gamma E_w V(f(x,u,w))`` over the input box.

The objective is expanded symbolically once per value function.  For every
state only the coefficients of its monomials in ``u`` change, so they are
stored as a matrix acting on the state monomials.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.stats import qmc

from .bellman import ControlProblem, NonBoxInputError, ValueApprox
from .poly import Polynomial, VarBlock, grlex_key
from .stochastic import expect_noise

ARMIJO_BACKTRACK = 0.5
ARMIJO_C = 1e-4
MAX_STARTS = 17


class PolicyError(RuntimeError):
    pass


class IndefiniteHessianWarning(UserWarning):
    pass


@dataclass
class PolicyObjective:
    poly_in_u: Polynomial
    lo: np.ndarray
    hi: np.ndarray

    @property
    def input_box(self):
        return list(zip(self.lo.tolist(), self.hi.tolist()))


@dataclass
class PolicyResult:
    u: np.ndarray
    objective_value: float
    method: str
    iterations: int
    wall_time: float


# ---------------------------------------------------------------------------
# box QP


def _masked_system(H, G, free):
    """Newton system restricted to free coordinates, identity on the rest."""
    m = G.shape[-1]
    both = free[..., :, None] & free[..., None, :]
    eye = np.eye(m, dtype=bool)
    Hm = np.where(both, H, np.where(eye, 1.0, 0.0))
    rhs = np.where(free, -G, 0.0)
    return Hm, rhs


def _active_set(H, f, lo, hi, tol, max_iter):
    """Primal active-set method for a strictly convex box QP (finite termination)."""
    m = len(f)
    x = np.clip(-np.linalg.solve(H, f), lo, hi)
    at_lo = x <= lo
    at_hi = (x >= hi) & ~at_lo
    it = 0
    for it in range(1, max_iter + 1):
        g = H @ x + f
        free = ~(at_lo | at_hi)
        p = np.zeros(m)
        if free.any():
            p[free] = -np.linalg.solve(H[np.ix_(free, free)], g[free])
        if np.max(np.abs(p)) <= tol * (1.0 + np.max(np.abs(x))):
            lam = np.where(at_lo, g, np.where(at_hi, -g, 0.0))
            k = int(np.argmin(lam))
            if lam[k] >= -tol * (1.0 + np.max(np.abs(g))):
                break
            at_lo[k] = at_hi[k] = False
            continue
        # longest feasible fraction of the step, and the constraint that blocks it
        ratio = np.full(m, np.inf)
        neg, pos = free & (p < 0), free & (p > 0)
        ratio[neg] = (lo[neg] - x[neg]) / p[neg]
        ratio[pos] = (hi[pos] - x[pos]) / p[pos]
        k = int(np.argmin(ratio))
        if ratio[k] < 1.0:
            x = x + ratio[k] * p
            if p[k] < 0:
                x[k], at_lo[k] = lo[k], True
            else:
                x[k], at_hi[k] = hi[k], True
        else:
            x = x + p
    return x, it


def qp_box_solve_batch(H, F, lo, hi, tol: float = 1e-12, max_iter: int = 100):
    """Minimize ``0.5 u'Hu + F[k]'u`` over ``lo <= u <= hi`` for every row ``k``.

    ``H`` is shared by all rows and must be positive semidefinite; a tiny
    diagonal shift makes it definite.  Returns ``(U, iterations)`` where
    ``iterations`` is the largest count over rows.
    """
    H = np.asarray(H, float)
    F = np.atleast_2d(np.asarray(F, float))
    N, m = F.shape
    lo = np.broadcast_to(np.asarray(lo, float), (m,))
    hi = np.broadcast_to(np.asarray(hi, float), (m,))
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    Hr = H + 1e-10 * scale * np.eye(m)
    # rows whose unconstrained minimizer is feasible are done in one solve
    U = -np.linalg.solve(Hr, F.T).T
    its = 1
    for k in np.flatnonzero(np.any((U < lo) | (U > hi), axis=1)):
        U[k], it = _active_set(Hr, F[k], lo, hi, tol, max_iter)
        its = max(its, it)
    return U, its


def qp_box_solve(H, f, box=None, lo=None, hi=None, x0=None) -> np.ndarray:
    """Minimizer of ``0.5 u'Hu + f'u`` on a box.

    ``box`` is a list of ``(lo, hi)`` pairs (alternatively pass ``lo``/``hi``).
    A Hessian with a clearly negative eigenvalue is handed to the general
    projected-Newton solver with a warning.
    """
    H = np.atleast_2d(np.asarray(H, float))
    H = 0.5 * (H + H.T)
    f = np.atleast_1d(np.asarray(f, float))
    if box is not None:
        lo, hi = np.array([b[0] for b in box], float), np.array([b[1] for b in box], float)
    lo = np.full(len(f), -np.inf) if lo is None else np.asarray(lo, float)
    hi = np.full(len(f), np.inf) if hi is None else np.asarray(hi, float)
    lam = np.linalg.eigvalsh(H)
    if lam[0] < -1e-9 * max(1.0, abs(lam[-1])):
        warnings.warn("QP Hessian is indefinite; using projected Newton", IndefiniteHessianWarning)
        m = len(f)
        B = [tuple(int(k == j) * 2 for k in range(m)) for j in range(m)]
        coefs = {}
        for i in range(m):
            for j in range(m):
                e = [0] * m
                e[i] += 1
                e[j] += 1
                coefs[tuple(e)] = coefs.get(tuple(e), 0.0) + 0.5 * H[i, j]
            e = [0] * m
            e[i] = 1
            coefs[tuple(e)] = coefs.get(tuple(e), 0.0) + f[i]
        up = _UPoly(list(coefs), np.array(list(coefs.values()))[None, :], m)
        U, J, _ = projected_newton(up, lo, hi, _starts(lo, hi))
        return _pick(U, J)[0][0]
    U, _ = qp_box_solve_batch(H, f[None, :], lo, hi)
    return U[0]


# ---------------------------------------------------------------------------
# general polynomial objectives in u


class _UPoly:
    """Batch of polynomials in ``u`` sharing one exponent list ``B``.

    ``coef`` has shape ``(N, len(B))``: one polynomial per row.
    """

    def __init__(self, B, coef, m):
        self.B = np.array(B, dtype=np.int64).reshape(-1, m)
        self.coef = np.asarray(coef, float)
        self.m = m
        eye = np.eye(m, dtype=np.int64)
        self.gB = [np.maximum(self.B - eye[j], 0) for j in range(m)]
        self.gc = [self.B[:, j].astype(float) for j in range(m)]
        self.hB, self.hc = {}, {}
        for j in range(m):
            for k in range(j, m):
                self.hB[j, k] = np.maximum(self.B - eye[j] - eye[k], 0)
                self.hc[j, k] = self.B[:, j] * (self.B[:, k] - (1 if j == k else 0)).astype(float)

    def rows(self, idx) -> "_UPoly":
        """View restricted to the given rows (derivative tables are shared)."""
        out = object.__new__(_UPoly)
        out.__dict__.update(self.__dict__)
        out.coef = self.coef[idx]
        return out

    def _powers(self, U):
        """Table ``P[..., j, k] = U[..., j] ** k`` for every exponent in use."""
        d = int(self.B.max()) if self.B.size else 0
        P = np.empty(U.shape + (d + 1,))
        P[..., 0] = 1.0
        for k in range(1, d + 1):
            P[..., k] = P[..., k - 1] * U
        return P

    def _mono(self, P, B):
        out = P[..., 0, B[:, 0]]
        for j in range(1, self.m):
            out = out * P[..., j, B[:, j]]
        return out

    def value(self, U, P=None):
        """``U`` has shape ``(N, S, m)``; returns ``(N, S)``."""
        P = self._powers(U) if P is None else P
        return np.einsum("nsb,nb->ns", self._mono(P, self.B), self.coef)

    def grad(self, U, P=None):
        P = self._powers(U) if P is None else P
        return np.stack([np.einsum("nsb,nb->ns", self._mono(P, self.gB[j]), self.coef * self.gc[j])
                         for j in range(self.m)], axis=-1)

    def hess(self, U, P=None):
        P = self._powers(U) if P is None else P
        H = np.empty(U.shape + (self.m,))
        for (j, k), Bjk in self.hB.items():
            H[..., j, k] = np.einsum("nsb,nb->ns", self._mono(P, Bjk), self.coef * self.hc[j, k])
            H[..., k, j] = H[..., j, k]
        return H


def _starts(lo, hi, count: Optional[int] = None):
    """Box corners plus the centre (at most 17 points); quasi-random when m > 4."""
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    flo = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi - 2.0, -1.0))
    fhi = np.where(np.isfinite(hi), hi, flo + 2.0)
    m = len(lo)
    centre = 0.5 * (flo + fhi)
    if m <= 4:
        grid = np.array(np.meshgrid(*[[0.0, 1.0]] * m, indexing="ij")).reshape(m, -1).T if m else np.zeros((1, 0))
        pts = flo + grid * (fhi - flo)
        return np.vstack([pts, centre[None, :]])
    sob = qmc.Sobol(m, scramble=False).random(MAX_STARTS - 1)
    return np.vstack([flo + sob * (fhi - flo), centre[None, :]])


def projected_newton(up: _UPoly, lo, hi, starts, tol: float = 1e-10, max_iter: int = 60):
    """Projected Newton with Armijo backtracking from every start, for every row.

    Returns ``(U, J, iterations)`` with shapes ``(N, S, m)``, ``(N, S)``.
    Each (row, start) pair is iterated independently; finished pairs drop
    out of the working set.
    """
    N, m = up.coef.shape[0], up.m
    starts = np.atleast_2d(np.asarray(starts, float))
    S = len(starts)
    lo = np.asarray(lo, float)
    hi = np.asarray(hi, float)
    flat = up.rows(np.repeat(np.arange(N), S))
    U = np.tile(np.clip(starts, lo, hi), (N, 1))[:, None, :]
    J = flat.value(U)[:, 0]
    idx = np.arange(N * S)
    it = 0
    for it in range(1, max_iter + 1):
        sub = flat.rows(idx)
        Ui, Ji = U[idx], J[idx]
        P = sub._powers(Ui)
        G = sub.grad(Ui, P)[:, 0]
        u = Ui[:, 0]
        free = ~(((u <= lo) & (G > 0)) | ((u >= hi) & (G < 0)))
        pg = np.where(free, G, 0.0)
        keep = np.max(np.abs(pg), axis=-1) > tol * (1.0 + np.abs(Ji))
        idx, sub, Ui, Ji, G, u, free, P = (idx[keep], sub.rows(np.flatnonzero(keep)), Ui[keep], Ji[keep],
                                           G[keep], u[keep], free[keep], P[keep])
        if not len(idx):
            break
        H = sub.hess(Ui, P)[:, 0]
        Hm, rhs = _masked_system(H, G, free)
        w, V = np.linalg.eigh(Hm)
        floor = 1e-8 * (1.0 + np.max(np.abs(w), axis=-1, keepdims=True))
        w = np.maximum(np.abs(w), floor)
        D = np.einsum("kij,kj->ki", V, np.einsum("kji,kj->ki", V, rhs) / w)
        step = np.ones(len(idx))
        new = np.clip(u + D, lo, hi)
        Jn = sub.value(new[:, None, :])[:, 0]
        pred = np.einsum("ki,ki->k", G, new - u)
        # below round-off the function values cannot confirm a decrease; trust the Newton step
        ok = (Jn <= Ji + ARMIJO_C * pred) | (np.abs(pred) <= 1e-12 * (1.0 + np.abs(Ji)))
        for _ in range(40):
            if ok.all():
                break
            bad = np.flatnonzero(~ok)
            step[bad] *= ARMIJO_BACKTRACK
            new[bad] = np.clip(u[bad] + step[bad, None] * D[bad], lo, hi)
            Jn[bad] = sub.rows(bad).value(new[bad][:, None, :])[:, 0]
            ok[bad] = Jn[bad] <= Ji[bad] + ARMIJO_C * np.einsum("ki,ki->k", G[bad], new[bad] - u[bad])
        # steps at the round-off level end the iteration for that pair
        moved = np.max(np.abs(new - u), axis=-1) > 1e-13 * (1.0 + np.max(np.abs(u), axis=-1))
        acc = ok & moved
        U[idx[acc], 0] = new[acc]
        J[idx[acc]] = Jn[acc]
        idx = idx[acc]
        if not len(idx):
            break
    return U[:, 0].reshape(N, S, m), J.reshape(N, S), it


def _pick(U, J):
    """Best start per row; near-ties go to the lexicographically smallest u."""
    N, S, m = U.shape
    best = np.min(J, axis=1, keepdims=True)
    cand = J <= best + 1e-10 * (1.0 + np.abs(best))
    key = np.round(U, 9)
    for j in range(m):
        col = np.where(cand, key[..., j], np.inf)
        cand &= col <= np.min(col, axis=1, keepdims=True)
    k = np.argmax(cand, axis=1)
    rows = np.arange(N)
    return U[rows, k], J[rows, k]


# ---------------------------------------------------------------------------


class GreedyPolicy:
    """Precompiled greedy policy for a value function and a problem."""

    def __init__(self, v: ValueApprox, prob: ControlProblem):
        if v.n != prob.n:
            raise ValueError(f"value function has {v.n} states, problem has {prob.n}")
        self.prob = prob
        self.v = v
        self.lo, self.hi = prob.input_box()
        vp = v.polynomial()
        comp = vp.substitute({"x": prob.dynamics}) if vp.degree > 0 else vp.embed(prob.layout_xuw)
        comp = comp.embed(prob.layout_xuw)
        ev = expect_noise(comp, prob.noise) if prob.p else comp
        J = prob.stage_cost + ev.embed(prob.layout_xu).scale(prob.discount)
        self.J = J
        n, m = prob.n, prob.m
        # split exponents into (x part, u part)
        table = {}
        for e, c in J.terms.items():
            ex, eu = e[:n], e[n:n + m]
            table.setdefault(eu, {})[ex] = c
        self.B = sorted(table, key=grlex_key)
        self.Ex = sorted({ex for d in table.values() for ex in d}, key=grlex_key)
        col = {ex: i for i, ex in enumerate(self.Ex)}
        self.Cmat = np.zeros((len(self.B), len(self.Ex)))
        for r, eu in enumerate(self.B):
            for ex, c in table[eu].items():
                self.Cmat[r, col[ex]] = c
        self.ExA = np.array(self.Ex, dtype=np.int64).reshape(len(self.Ex), n)
        self.degree_u = max((sum(b) for b in self.B), default=0)
        self.quadratic = self.degree_u <= 2
        self.H_const = None
        if self.quadratic:
            self._setup_qp()

    def _setup_qp(self):
        m = self.prob.m
        lin = [None] * m
        quad_rows = {}
        for r, eu in enumerate(self.B):
            d = sum(eu)
            if d == 1:
                lin[int(np.argmax(eu))] = r
            elif d == 2:
                idx = [j for j, k in enumerate(eu) for _ in range(k)]
                quad_rows[tuple(idx)] = r
        self.lin_rows = lin
        zero = (0,) * m
        self.const_row = self.B.index(zero) if zero in self.B else None
        self.quad_rows = quad_rows
        # constant Hessian when the quadratic coefficients do not depend on x
        const_col = self.Ex.index((0,) * self.prob.n) if (0,) * self.prob.n in self.Ex else None
        depends = any(np.any(np.delete(self.Cmat[r], const_col) if const_col is not None else self.Cmat[r])
                      for r in quad_rows.values())
        if not depends:
            c = np.zeros(len(self.Ex))
            if const_col is not None:
                c[const_col] = 1.0
            self.H_const = self._hessian_from(self.Cmat @ c)
            lam = np.linalg.eigvalsh(self.H_const) if m else np.zeros(1)
            self.convex = bool(lam[0] >= -1e-9 * max(1.0, abs(lam[-1])))
        else:
            self.convex = None

    def _hessian_from(self, coef):
        m = self.prob.m
        H = np.zeros((m, m))
        for (i, j), r in self.quad_rows.items():
            if i == j:
                H[i, i] += 2.0 * coef[r]
            else:
                H[i, j] += coef[r]
                H[j, i] += coef[r]
        return H

    def coefficients(self, X) -> np.ndarray:
        """Coefficients of ``J(x, .)`` in ``u`` for states ``X`` of shape ``(N, n)``."""
        X = np.atleast_2d(np.asarray(X, float))
        mono = np.prod(X[:, None, :] ** self.ExA, axis=-1)
        return mono @ self.Cmat.T

    def objective(self, x) -> PolicyObjective:
        c = self.coefficients(np.asarray(x, float)[None, :])[0]
        poly = Polynomial(dict(zip(self.B, c)), (VarBlock("u", self.prob.m),))
        return PolicyObjective(poly, self.lo.copy(), self.hi.copy())

    def value(self, X, U) -> np.ndarray:
        coef = self.coefficients(X)
        up = _UPoly(self.B, coef, self.prob.m)
        return up.value(np.asarray(U, float)[:, None, :])[:, 0]

    def batch(self, X):
        """Greedy inputs for many states; returns ``(U, J, method, iterations)``."""
        X = np.atleast_2d(np.asarray(X, float))
        coef = self.coefficients(X)
        if not np.all(np.isfinite(coef)):
            raise PolicyError("non-finite policy objective coefficients")
        m = self.prob.m
        if m == 0:
            return np.zeros((len(X), 0)), coef[:, 0], "qp", 0
        if self.quadratic and self.H_const is not None and self.convex:
            F = np.stack([coef[:, r] if r is not None else np.zeros(len(X)) for r in self.lin_rows], axis=1)
            U, it = qp_box_solve_batch(self.H_const, F, self.lo, self.hi)
            c0 = coef[:, self.const_row] if self.const_row is not None else 0.0
            J = c0 + np.einsum("ki,ki->k", F, U) + 0.5 * np.einsum("ki,ij,kj->k", U, self.H_const, U)
            return U, J, "qp", it
        if self.quadratic and self.H_const is None:
            return self._qp_rows(X, coef)
        up = _UPoly(self.B, coef, m)
        Us, Js, it = projected_newton(up, self.lo, self.hi, _starts(self.lo, self.hi))
        if not np.all(np.isfinite(Js)):
            raise PolicyError("NaN in the policy objective")
        U, J = _pick(Us, Js)
        return U, J, "projected_newton", it

    def _qp_rows(self, X, coef):
        m = self.prob.m
        up = _UPoly(self.B, coef, m)
        U = np.empty((len(X), m))
        its, method = 0, "qp"
        for k in range(len(X)):
            H = self._hessian_from(coef[k])
            lam = np.linalg.eigvalsh(H)
            if lam[0] < -1e-9 * max(1.0, abs(lam[-1])):
                sub = _UPoly(self.B, coef[k:k + 1], m)
                Us, Js, it = projected_newton(sub, self.lo, self.hi, _starts(self.lo, self.hi))
                U[k] = _pick(Us, Js)[0][0]
                method = "projected_newton"
            else:
                f = np.array([coef[k, r] if r is not None else 0.0 for r in self.lin_rows])
                Uk, it = qp_box_solve_batch(H, f[None, :], self.lo, self.hi)
                U[k] = Uk[0]
            its = max(its, it)
        return U, up.value(U[:, None, :])[:, 0], method, its

    def __call__(self, x) -> PolicyResult:
        t0 = time.perf_counter()
        U, J, method, it = self.batch(np.asarray(x, float)[None, :])
        return PolicyResult(U[0], float(J[0]), method, it, time.perf_counter() - t0)


def policy_objective(v: ValueApprox, prob: ControlProblem, x) -> PolicyObjective:
    """``u -> l(x,u) + gamma E_w V(f(x,u,w))`` at a fixed state."""
    x = np.asarray(x, float).reshape(-1)
    if len(x) != prob.n:
        raise ValueError(f"state has {len(x)} entries, problem has {prob.n}")
    lo, hi = prob.state_box()
    if np.any(x < lo) or np.any(x > hi):
        warnings.warn("state lies outside the relevance box", RuntimeWarning)
    return GreedyPolicy(v, prob).objective(x)


def evaluate_policy(v: ValueApprox, prob: ControlProblem, x, policy: GreedyPolicy | None = None) -> PolicyResult:
    """Greedy input at state ``x``.  Pass a prebuilt ``policy`` to skip compilation."""
    x = np.asarray(x, float).reshape(-1)
    if len(x) != prob.n:
        raise ValueError(f"state has {len(x)} entries, problem has {prob.n}")
    return (policy or GreedyPolicy(v, prob))(x)
