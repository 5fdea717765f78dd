"""Polynomial value-function lower bounds from the Bellman inequality.

The fit solves

    maximize    int c(x) V(x) dx
    subject to  V(x) <= l(x,u) + gamma * E_w V(f(x,u,w))   on {g(x,u) >= 0}

with ``V = sum_k alpha_k x^{e_k}``.  Positivity on the constraint set is
replaced by an SOS certificate built with the S-procedure.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .poly import MonomialBasis, Polynomial, VarBlock, grlex_key
from .sos import (AffinePoly, SosConstraint, SosProgram, compile_sos, convexity_constraint,
                  lower, s_procedure)
from .sdp import solve as sdp_solve
from .stochastic import NoiseSpec, WeightSpec, box_integral, expect_noise


class FitError(RuntimeError):
    """The SDP behind a fit did not reach an optimal solution."""

    def __init__(self, status: str, message: str = ""):
        self.status = status
        super().__init__(f"SDP status {status}" + (f": {message}" if message else ""))


class NonBoxInputError(ValueError):
    """The input constraints do not describe a box."""


def _univariate_interval(g: Polynomial, kind: str):
    """Interval {v : g(v) >= 0} when ``g`` depends on a single variable of ``kind``.

    Returns ``(index, lo, hi)`` or None when ``g`` is not of that shape.
    """
    used = set()
    for e in g.terms:
        for b in g.blocks:
            ex = g.block_exponents(e, b.kind)
            for i, k in enumerate(ex):
                if k:
                    used.add((b.kind, i))
    if len(used) != 1:
        return None
    (k, idx), = used
    if k != kind:
        return None
    c = [0.0, 0.0, 0.0]
    for e, v in g.terms.items():
        deg = sum(e)
        if deg > 2:
            return None
        c[deg] += v
    c0, c1, c2 = c
    if c2 == 0.0:
        if c1 > 0:
            return idx, -c0 / c1, math.inf
        return idx, -math.inf, -c0 / c1
    if c2 > 0:
        return None
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        raise ValueError(f"constraint {g} >= 0 has an empty feasible set")
    r = math.sqrt(disc)
    lo, hi = sorted(((-c1 - r) / (2 * c2), (-c1 + r) / (2 * c2)))
    return idx, lo, hi


@dataclass
class ControlProblem:
    """Discounted stochastic control problem with polynomial data.

    ``dynamics[i]`` is a polynomial in ``(x, u, w)``; ``stage_cost`` and every
    entry of ``constraints`` are polynomials in ``(x, u)``.
    """

    n: int
    m: int
    p: int
    dynamics: List[Polynomial]
    stage_cost: Polynomial
    discount: float
    constraints: List[Polynomial]
    noise: NoiseSpec
    weight: WeightSpec
    name: str = "problem"

    def __post_init__(self):
        if not 0 <= self.discount < 1:
            raise ValueError("discount must lie in [0, 1)")
        if len(self.dynamics) != self.n:
            raise ValueError(f"expected {self.n} dynamics polynomials, got {len(self.dynamics)}")
        if self.noise.dim != self.p:
            raise ValueError(f"noise spec has dim {self.noise.dim}, problem has p={self.p}")
        if self.weight.dim != self.n:
            raise ValueError("weight box dimension differs from the state dimension")
        xu = self.layout_xu
        xuw = self.layout_xuw
        self.dynamics = [_fit_layout(f, xuw, "dynamics") for f in self.dynamics]
        self.stage_cost = _fit_layout(self.stage_cost, xu, "stage cost")
        self.constraints = [_fit_layout(g, xu, "constraint") for g in self.constraints]
        for g in self.constraints:
            if g.degree <= 0:
                raise ValueError("constraint polynomials must be non-constant")

    @property
    def layout_x(self):
        return (VarBlock("x", self.n),)

    @property
    def layout_xu(self):
        return tuple(b for b in (VarBlock("x", self.n), VarBlock("u", self.m) if self.m else None) if b)

    @property
    def layout_xuw(self):
        return self.layout_xu + ((VarBlock("w", self.p),) if self.p else ())

    # -- boxes ----------------------------------------------------------
    def _boxes(self, kind: str, dim: int):
        lo, hi = np.full(dim, -np.inf), np.full(dim, np.inf)
        other = []
        for g in self.constraints:
            iv = _univariate_interval(g, kind)
            if iv is None:
                if g.degree_in(kind) > 0:
                    other.append(g)
                continue
            i, a, b = iv
            lo[i], hi[i] = max(lo[i], a), min(hi[i], b)
        return lo, hi, other

    def input_box(self):
        """``(lo, hi)`` arrays of the input box; infinite where unconstrained.

        Raises :class:`NonBoxInputError` if some constraint couples inputs
        with other variables or is not an interval constraint.
        """
        lo, hi, other = self._boxes("u", self.m)
        if other:
            raise NonBoxInputError(f"input constraint {other[0]} >= 0 is not a box constraint")
        return lo, hi

    def state_box(self):
        """Bounding box of the state constraints, falling back to the weight box."""
        lo, hi, _ = self._boxes("x", self.n)
        wl, wh = self.weight.lo, self.weight.hi
        lo = np.where(np.isfinite(lo), lo, wl)
        hi = np.where(np.isfinite(hi), hi, wh)
        return lo, hi

    def sampling_box(self):
        """Box covering the certificate region used by the numeric checks.

        Unbounded input directions use the largest state half-width.
        """
        xl, xh = self.state_box()
        try:
            ul, uh = self.input_box()
        except NonBoxInputError:
            ul, uh = np.full(self.m, -np.inf), np.full(self.m, np.inf)
        wide = float(np.max(np.maximum(np.abs(xl), np.abs(xh)))) if self.n else 1.0
        ul = np.where(np.isfinite(ul), ul, -wide)
        uh = np.where(np.isfinite(uh), uh, wide)
        return np.concatenate([xl, ul]), np.concatenate([xh, uh])

    # -- numeric helpers -----------------------------------------------
    def step(self, x, u, w) -> np.ndarray:
        """Vectorized ``f(x, u, w)``; leading batch dimensions broadcast."""
        pt = {"x": x}
        if self.m:
            pt["u"] = u
        if self.p:
            pt["w"] = w
        return np.stack([np.asarray(f.evaluate(pt), float) * np.ones(np.shape(x)[:-1]) for f in self.dynamics], axis=-1)

    def cost(self, x, u) -> np.ndarray:
        pt = {"x": x}
        if self.m:
            pt["u"] = u
        return np.asarray(self.stage_cost.evaluate(pt), float) * np.ones(np.shape(x)[:-1])

    def constraint_values(self, x, u) -> np.ndarray:
        pt = {"x": x}
        if self.m:
            pt["u"] = u
        if not self.constraints:
            return np.zeros(np.shape(x)[:-1] + (0,))
        return np.stack([np.asarray(g.evaluate(pt), float) * np.ones(np.shape(x)[:-1]) for g in self.constraints], axis=-1)

    def replace(self, **changes) -> "ControlProblem":
        fields_ = dict(n=self.n, m=self.m, p=self.p, dynamics=self.dynamics, stage_cost=self.stage_cost,
                       discount=self.discount, constraints=self.constraints, noise=self.noise,
                       weight=self.weight, name=self.name)
        fields_.update(changes)
        return ControlProblem(**fields_)


def _fit_layout(p: Polynomial, layout, what: str) -> Polynomial:
    allowed = {b.kind: b.dim for b in layout}
    for b in p.blocks:
        if allowed.get(b.kind) != b.dim:
            raise ValueError(f"{what} {p} uses block {b.kind}:{b.dim}, expected one of {allowed}")
    return p.embed(layout)


# ---------------------------------------------------------------------------


@dataclass
class ValueApprox:
    """``V(x) = sum_k alpha[k] * x^exponents[k]``."""

    n: int
    exponents: List[tuple]
    alpha: np.ndarray
    degree: int
    convexity_enforced: bool = False
    objective_value: float = math.nan
    status: str = "optimal"
    gap: float = math.nan
    backoff: float = 0.0
    diagnostics: Dict = field(default_factory=dict)

    def __post_init__(self):
        self.exponents = [tuple(int(k) for k in e) for e in self.exponents]
        self.alpha = np.asarray(self.alpha, float).reshape(-1)
        if len(self.alpha) != len(self.exponents):
            raise ValueError("alpha and basis lengths differ")

    @property
    def basis(self) -> List[Polynomial]:
        lay = (VarBlock("x", self.n),)
        return [Polynomial({e: 1.0}, lay) for e in self.exponents]

    def polynomial(self) -> Polynomial:
        return Polynomial(dict(zip(self.exponents, self.alpha)), (VarBlock("x", self.n),))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        E = np.array(self.exponents, dtype=np.int64)
        out = np.prod(x[..., None, :] ** E, axis=-1) @ self.alpha
        return float(out) if np.ndim(out) == 0 else out

    def coefficient(self, e) -> float:
        e = tuple(e)
        return float(sum(a for ex, a in zip(self.exponents, self.alpha) if ex == e))

    def shifted(self, c: float) -> "ValueApprox":
        """Copy with ``c`` added to the constant term."""
        alpha = self.alpha.copy()
        zero = (0,) * self.n
        if zero in self.exponents:
            alpha[self.exponents.index(zero)] += c
            return ValueApprox(self.n, self.exponents, alpha, self.degree, self.convexity_enforced,
                               self.objective_value, self.status, self.gap, self.backoff, dict(self.diagnostics))
        return ValueApprox(self.n, [zero] + self.exponents, np.r_[c, alpha], self.degree, self.convexity_enforced,
                           self.objective_value, self.status, self.gap, self.backoff, dict(self.diagnostics))

    def to_dict(self) -> dict:
        return {
            "format": "sosadp-value/1",
            "n": self.n,
            "degree": self.degree,
            "exponents": [list(e) for e in self.exponents],
            "alpha": [float(a) for a in self.alpha],
            "polynomial": str(self.polynomial()),
            "convexity_enforced": self.convexity_enforced,
            "objective_value": self.objective_value,
            "status": self.status,
            "gap": self.gap,
            "backoff": self.backoff,
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ValueApprox":
        return cls(d["n"], [tuple(e) for e in d["exponents"]], d["alpha"], d["degree"],
                   d.get("convexity_enforced", False), d.get("objective_value", math.nan),
                   d.get("status", "optimal"), d.get("gap", math.nan), d.get("backoff", 0.0),
                   d.get("diagnostics", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ValueApprox":
        return cls.from_dict(json.loads(text))


# ---------------------------------------------------------------------------


def value_basis(n: int, degree: int) -> MonomialBasis:
    return MonomialBasis.full((VarBlock("x", n),), degree)


def bellman_residual_poly(prob: ControlProblem, basis: Sequence[Polynomial], ids=None) -> AffinePoly:
    """``l(x,u) + gamma E_w V(f(x,u,w)) - V(x)`` as a polynomial affine in alpha."""
    ids = list(ids) if ids is not None else [("alpha", k) for k in range(len(basis))]
    layout = prob.layout_xu
    gamma = prob.discount
    lin = {}
    for k, v in zip(ids, basis):
        if any(b.kind != "x" for b in v.blocks) or v.dim("x") not in (0, prob.n):
            raise ValueError(f"basis function {v} must be a polynomial in the {prob.n} states")
        v = v.embed(prob.layout_x)
        comp = v.substitute({"x": prob.dynamics}) if v.degree > 0 else v.embed(prob.layout_xuw)
        comp = comp.embed(prob.layout_xuw)
        ev = expect_noise(comp, prob.noise) if prob.p else comp
        lin[k] = ev.embed(layout).scale(gamma) - v.embed(layout)
    return AffinePoly(prob.stage_cost.embed(layout), lin)


def objective_vector(prob: ControlProblem, basis: Sequence[Polynomial]) -> np.ndarray:
    return np.array([box_integral(v, prob.weight) for v in basis])


def build_program(prob: ControlProblem, degree: int, convex: bool = False, multiplier_degree=None,
                  prune: bool = False) -> SosProgram:
    """SOS program whose optimal alpha gives the best certified lower bound."""
    if degree < 2 or degree % 2:
        raise ValueError(f"value-function degree must be even and >= 2, got {degree}")
    basis = value_basis(prob.n, degree).polynomials()
    ids = [("alpha", k) for k in range(len(basis))]
    p = bellman_residual_poly(prob, basis, ids)
    b = objective_vector(prob, basis)
    constraints = s_procedure(p, prob.constraints, multiplier_degree, prune=prune)
    if convex:
        constraints.append(convexity_constraint(AffinePoly.unknown(basis, ids), prune=prune))
    return SosProgram(dict(zip(ids, b)), constraints, list(ids))


# ---------------------------------------------------------------------------
# conditioning


@dataclass
class _Scaling:
    sx: np.ndarray
    su: np.ndarray
    cost: float


def _scaled_problem(prob: ControlProblem):
    xl, xh = prob.state_box()
    sx = np.maximum(np.abs(xl), np.abs(xh))
    sx = np.where(sx > 0, sx, 1.0)
    try:
        ul, uh = prob.input_box()
        su = np.maximum(np.abs(ul), np.abs(uh))
        su = np.where(np.isfinite(su) & (su > 0), su, 1.0)
    except NonBoxInputError:
        su = np.ones(prob.m)
    xs = [Polynomial.var("x", i, prob.n).scale(sx[i]) for i in range(prob.n)]
    us = [Polynomial.var("u", j, prob.m).scale(su[j]) for j in range(prob.m)]

    def sub(p: Polynomial) -> Polynomial:
        bind = {}
        if p.dim("x"):
            bind["x"] = xs
        if p.dim("u"):
            bind["u"] = us
        return p.substitute(bind) if bind else p

    dyn = [sub(f).scale(1.0 / sx[i]).embed(prob.layout_xuw) for i, f in enumerate(prob.dynamics)]
    cost = sub(prob.stage_cost)
    kappa = cost.max_abs_coefficient() or 1.0
    cons = []
    for g in prob.constraints:
        gs = sub(g)
        cons.append(gs.scale(1.0 / gs.max_abs_coefficient()))
    w = prob.weight
    dens = sub(w.density) if w.density is not None and w.density.dim("x") else w.density
    weight = WeightSpec(tuple((lo / s, hi / s) for (lo, hi), s in zip(w.box, sx)), dens)
    scaled = prob.replace(dynamics=dyn, stage_cost=cost.scale(1.0 / kappa), constraints=cons, weight=weight)
    return scaled, _Scaling(sx, su, kappa)


def _box_monomial_max(E: np.ndarray, bound: np.ndarray) -> np.ndarray:
    """max over the box |v_i| <= bound_i of |v^e| for each exponent row."""
    return np.prod(bound[None, :] ** E, axis=1) if len(E) else np.zeros(0)


def _poly_box_bound(p: Polynomial, bound: np.ndarray) -> float:
    if p.is_zero():
        return 0.0
    E = np.array(list(p.terms), dtype=np.int64)
    c = np.abs(np.array(list(p.terms.values())))
    return float(c @ _box_monomial_max(E, bound))


def _gram_slack(c: SosConstraint, Q: np.ndarray, values, bound_xu: np.ndarray):
    """(negative-eigenvalue term, coefficient-residual term) bounding ``sigma - z'Qz`` on the box."""
    target = c.target.instantiate(values)
    if not Q.size:
        return 0.0, _poly_box_bound(target, _layout_bound(target.blocks, bound_xu))
    E = np.array(c.gram_basis.entries, dtype=np.int64).reshape(len(c.gram_basis), -1)
    zmax = _box_monomial_max(E, _layout_bound(c.gram_basis.blocks, bound_xu))
    neg = max(0.0, -float(np.linalg.eigvalsh(Q).min()))
    resid = c.gram_polynomial(Q) - target
    return neg * float(zmax @ zmax), _poly_box_bound(resid, _layout_bound(resid.blocks, bound_xu))


def _layout_bound(blocks, bound_xu: np.ndarray) -> np.ndarray:
    out = []
    for b in blocks:
        if b.kind == "x":
            out.append(bound_xu[:b.dim])
        elif b.kind == "u":
            out.append(bound_xu[-b.dim:] if b.dim else np.zeros(0))
        else:
            raise ValueError(f"unexpected block {b.kind} in a certificate")
    return np.concatenate(out) if out else np.zeros(0)


def fitting_sdp(prob: ControlProblem, degree: int, convex: bool = False, multiplier_degree=None,
                prune: bool = True):
    """The SDP solved by :func:`fit_value`, in normalized coordinates.

    Returns ``(sdp, sdp_map, sos_program, scaling)``.
    """
    scaled, sc = _scaled_problem(prob)
    program = build_program(scaled, degree, convex, multiplier_degree, prune=prune)
    sdp, mp = lower(program)
    return sdp, mp, program, sc


def fit_value(prob: ControlProblem, degree: int, convex: bool = False, multiplier_degree=None,
              tol: float = 1e-8, max_iter: int = 100, prune: bool = True, certify: bool = True) -> ValueApprox:
    """Fit a degree-``degree`` polynomial lower bound on the optimal value function.

    The SDP is assembled in coordinates normalized by the state and input box
    half-widths; coefficients are mapped back afterwards.  With ``certify``
    the constant term is lowered by the smallest amount that turns the
    floating-point solution into a valid inequality on the constraint box.
    """
    t0 = time.perf_counter()
    sdp, mp, program, sc = fitting_sdp(prob, degree, convex, multiplier_degree, prune)
    if mp.infeasible_rows:
        raise FitError("infeasible", "coefficient matching is structurally inconsistent")
    sol = sdp_solve(sdp, tol=tol, max_iter=max_iter)
    if sol.status != "optimal":
        raise FitError(sol.status, sol.message)
    values = mp.free_values(sol)
    grams = mp.gram_matrices(sol)

    exps = list(value_basis(prob.n, degree).entries)
    beta = np.array([values[("alpha", k)] for k in range(len(exps))])
    scale = np.array([np.prod(sc.sx ** np.array(e)) for e in exps])
    alpha = sc.cost * beta / scale

    backoff = 0.0
    eps = 0.0
    if certify:
        bl, bh = prob.sampling_box()
        bound = np.maximum(np.abs(bl), np.abs(bh)) / np.concatenate([sc.sx, sc.su])
        eps = _certify(program, values, grams, bound, len(prob.constraints))
        if eps > 0:
            backoff = 1.01 * sc.cost * eps / (1.0 - prob.discount)
            alpha[exps.index((0,) * prob.n)] -= backoff

    b = objective_vector(prob, [Polynomial({e: 1.0}, prob.layout_x) for e in exps])
    v = ValueApprox(prob.n, exps, alpha, degree, convex, float(b @ alpha), sol.status, sol.gap, backoff)
    v.diagnostics = {
        "problem": prob.name,
        "sdp_iterations": sol.iterations,
        "sdp_primal_objective": sol.primal_objective,
        "sdp_dual_objective": sol.dual_objective,
        "sdp_primal_residual": sol.primal_residual,
        "sdp_dual_residual": sol.dual_residual,
        "sdp_rows": sdp.m,
        "sdp_blocks": list(sdp.block_sizes),
        "certificate_slack": eps * sc.cost,
        "state_scale": sc.sx.tolist(),
        "input_scale": sc.su.tolist(),
        "cost_scale": sc.cost,
        "solve_seconds": time.perf_counter() - t0,
    }
    return v


def _certify(program: SosProgram, values, grams, bound: np.ndarray, n_mult: int) -> float:
    """Slack ``eps`` such that ``p >= -eps`` holds on the constraint set inside ``bound``.

    ``p = sigma_0 + r_0 + sum_i lam_i g_i`` where ``r_0`` is the coefficient
    mismatch; each ``lam_i`` is bounded below on the box the same way and
    ``g_i`` lies in ``[0, max g_i]`` on the set.
    """
    neg, res = _gram_slack(program.constraints[0], grams[0], values, bound)
    eps = neg + res
    for i in range(n_mult):
        neg, res = _gram_slack(program.constraints[1 + i], grams[1 + i], values, bound)
        eps += (neg + res) * _constraint_max(program, i, bound)
    return eps


def _constraint_max(program: SosProgram, i: int, bound: np.ndarray) -> float:
    """Upper bound of ``|g_i|`` on the box, read off the constant-multiplier column."""
    poly = program.constraints[0].target.linear.get(("lam", i, 0))
    if poly is None:
        return 0.0
    return _poly_box_bound(poly, _layout_bound(poly.blocks, bound))


# ---------------------------------------------------------------------------


@dataclass
class BellmanReport:
    max_violation: float
    worst_x: np.ndarray
    worst_u: np.ndarray
    samples: int
    acceptance_rate: float
    tolerance: float = 1e-6

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_dict(self) -> dict:
        return {"max_violation": self.max_violation, "worst_x": self.worst_x.tolist(),
                "worst_u": self.worst_u.tolist(), "samples": self.samples,
                "acceptance_rate": self.acceptance_rate, "tolerance": self.tolerance,
                "passed": self.passed}


def _noise_quadrature(noise: NoiseSpec, degree: int):
    """Tensor Gauss-Hermite rule exact for polynomials of the given degree in w."""
    k = max(1, degree // 2 + 1)
    t, wts = np.polynomial.hermite_e.hermegauss(k)
    wts = wts / wts.sum()
    grids = np.meshgrid(*[noise.mean[i] + noise.stddev[i] * t for i in range(noise.dim)], indexing="ij")
    pts = np.stack([g.reshape(-1) for g in grids], axis=-1)
    wg = np.meshgrid(*[wts] * noise.dim, indexing="ij")
    w = np.prod(np.stack([g.reshape(-1) for g in wg], axis=-1), axis=-1)
    return pts, w


def expected_next_value(v: ValueApprox, prob: ControlProblem, x, u) -> np.ndarray:
    """``E_w V(f(x,u,w))`` by quadrature (no symbolic expansion)."""
    x = np.asarray(x, float)
    u = np.asarray(u, float)
    if prob.p == 0:
        return v(prob.step(x, u, None))
    fdeg = max(f.degree_in("w") for f in prob.dynamics)
    pts, w = _noise_quadrature(prob.noise, int(max(fdeg, 0)) * v.degree)
    xs = np.broadcast_to(x[..., None, :], x.shape[:-1] + (len(w), x.shape[-1]))
    us = np.broadcast_to(u[..., None, :], u.shape[:-1] + (len(w), u.shape[-1]))
    nxt = prob.step(xs, us, pts)
    return v(nxt) @ w


def bellman_gap(v: ValueApprox, prob: ControlProblem, x, u) -> np.ndarray:
    """``V(x) - l(x,u) - gamma E_w V(f(x,u,w))``; non-positive where the inequality holds."""
    return v(x) - prob.cost(x, u) - prob.discount * expected_next_value(v, prob, x, u)


def sample_constraint_set(prob: ControlProblem, samples: int, seed=0, max_rounds: int = 200):
    """Uniform samples from ``{g >= 0}`` inside the sampling box by rejection."""
    rng = np.random.default_rng(seed)
    lo, hi = prob.sampling_box()
    got_x, got_u, drawn, kept = [], [], 0, 0
    batch = max(1024, samples)
    for _ in range(max_rounds):
        z = rng.uniform(lo, hi, size=(batch, prob.n + prob.m))
        x, u = z[:, :prob.n], z[:, prob.n:]
        ok = np.all(prob.constraint_values(x, u) >= 0, axis=-1)
        drawn += batch
        got_x.append(x[ok])
        got_u.append(u[ok])
        kept += int(ok.sum())
        if kept >= samples:
            break
        if drawn >= 100 * batch and kept < 1e-3 * drawn:
            break
    if kept < samples:
        raise RuntimeError(
            f"rejection sampling accepted {kept} of {drawn} draws; the constraint set is too thin in its bounding box")
    return np.concatenate(got_x)[:samples], np.concatenate(got_u)[:samples], kept / drawn


def verify_bellman(v: ValueApprox, prob: ControlProblem, samples: int = 10_000, seed=0,
                   tolerance: float = 1e-6) -> BellmanReport:
    """Largest sampled violation of the Bellman inequality on the constraint set."""
    x, u, rate = sample_constraint_set(prob, samples, seed)
    gap = np.concatenate([bellman_gap(v, prob, x[i:i + 4096], u[i:i + 4096]) for i in range(0, len(x), 4096)])
    k = int(np.argmax(gap))
    return BellmanReport(float(gap[k]), x[k], u[k], len(x), rate, tolerance)
