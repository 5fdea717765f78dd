"""Sum-of-squares constraints compiled to Gram-matrix SDP form.

A polynomial ``F`` of degree ``2d`` is SOS iff ``F = z' Q z`` for some PSD
``Q``, where ``z`` holds the monomials of degree ``<= d``.  Matching the
coefficients of ``z' Q z`` against ``F`` gives linear equalities between the
Gram entries and whatever unknowns ``F`` depends on affinely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import count
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .poly import MonomialBasis, Polynomial, VarBlock, hessian, merge_blocks, monomials
from .sdp import SdpProblem, SdpSolution, solve as sdp_solve

COEF_ATOL = 1e-12


class StructuralInfeasibility(ValueError):
    """The constraint cannot hold for any choice of unknowns (detected before solving)."""


class DegreeError(ValueError):
    """Inconsistent degree bookkeeping in an S-procedure."""


class AffinePoly:
    """``base + sum_i var_i * linear[var_i]`` with polynomial parts.

    Decision variables are identified by arbitrary hashable ids.
    """

    __slots__ = ("base", "linear", "blocks")

    def __init__(self, base: Polynomial | None = None, linear: Mapping[Hashable, Polynomial] | None = None):
        base = base if base is not None else Polynomial.zero()
        linear = {k: v for k, v in (linear or {}).items() if not v.is_zero()}
        layout = merge_blocks(base.blocks, *[v.blocks for v in linear.values()])
        self.blocks = layout
        self.base = base.embed(layout)
        self.linear = {k: v.embed(layout) for k, v in linear.items()}

    @classmethod
    def fixed(cls, p: Polynomial) -> "AffinePoly":
        return cls(p, {})

    @classmethod
    def unknown(cls, basis: Sequence[Polynomial], ids: Sequence[Hashable]) -> "AffinePoly":
        """Polynomial whose coefficients on ``basis`` are all unknowns."""
        return cls(None, dict(zip(ids, basis)))

    def variables(self) -> list:
        return list(self.linear)

    def is_fixed(self) -> bool:
        return not self.linear

    def embed(self, blocks) -> "AffinePoly":
        return AffinePoly(self.base.embed(blocks), {k: v.embed(blocks) for k, v in self.linear.items()})

    @property
    def degree(self) -> float:
        return max([self.base.degree] + [v.degree for v in self.linear.values()])

    def __add__(self, other):
        if isinstance(other, Polynomial):
            other = AffinePoly.fixed(other)
        if not isinstance(other, AffinePoly):
            return NotImplemented
        lin = dict(self.linear)
        for k, v in other.linear.items():
            lin[k] = lin[k] + v if k in lin else v
        return AffinePoly(self.base + other.base, lin)

    __radd__ = __add__

    def __neg__(self):
        return AffinePoly(-self.base, {k: -v for k, v in self.linear.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Multiply by a number or a fixed polynomial."""
        if isinstance(other, (int, float)):
            return AffinePoly(self.base.scale(other), {k: v.scale(other) for k, v in self.linear.items()})
        if isinstance(other, Polynomial):
            return AffinePoly(self.base * other, {k: v * other for k, v in self.linear.items()})
        return NotImplemented

    __rmul__ = __mul__

    def map(self, fn) -> "AffinePoly":
        """Apply a linear map on polynomials to every part."""
        return AffinePoly(fn(self.base), {k: fn(v) for k, v in self.linear.items()})

    def instantiate(self, values: Mapping[Hashable, float]) -> Polynomial:
        out = self.base
        for k, v in self.linear.items():
            out = out + v.scale(values[k])
        return out

    def coefficient_table(self) -> Dict[tuple, Tuple[float, Dict[Hashable, float]]]:
        """monomial -> (base coefficient, {var: coefficient})."""
        table: Dict[tuple, list] = {}
        for e, c in self.base.terms.items():
            table[e] = [c, {}]
        for k, v in self.linear.items():
            for e, c in v.terms.items():
                table.setdefault(e, [0.0, {}])[1][k] = c
        return {e: (b, lin) for e, (b, lin) in table.items()}

    def __repr__(self):
        return f"AffinePoly(base={self.base!s}, unknowns={len(self.linear)})"


@dataclass
class SosConstraint:
    target: AffinePoly
    gram_basis: MonomialBasis
    gram_var_id: Hashable = None

    @property
    def size(self) -> int:
        return len(self.gram_basis)

    def gram_polynomial(self, Q: np.ndarray) -> Polynomial:
        """``z' Q z`` as a polynomial."""
        terms: Dict[tuple, float] = {}
        ent = self.gram_basis.entries
        for i, ei in enumerate(ent):
            for j, ej in enumerate(ent):
                e = tuple(a + b for a, b in zip(ei, ej))
                terms[e] = terms.get(e, 0.0) + Q[i, j]
        return Polynomial(terms, self.gram_basis.blocks)

    def equalities(self):
        """Coefficient-matching rows.

        Returns a list of ``(monomial, [(i, j), ...], base, {var: coef})``;
        each row reads ``sum_{(i,j)} Q_ij  -  sum_v coef_v * v = base`` where
        the pair list holds both ``(i, j)`` and ``(j, i)``.
        """
        table = self.target.coefficient_table()
        pairs: Dict[tuple, list] = {}
        ent = self.gram_basis.entries
        for i, ei in enumerate(ent):
            for j, ej in enumerate(ent):
                e = tuple(a + b for a, b in zip(ei, ej))
                pairs.setdefault(e, []).append((i, j))
        rows = []
        for e in sorted(set(table) | set(pairs), key=lambda e: (sum(e), tuple(-k for k in e))):
            base, lin = table.get(e, (0.0, {}))
            rows.append((e, pairs.get(e, []), base, lin))
        return rows


def _structurally_zero(entry) -> bool:
    if entry is None:
        return True
    base, lin = entry
    return abs(base) <= COEF_ATOL and all(abs(c) <= COEF_ATOL for c in lin.values())


def prune_basis(target: AffinePoly, basis: MonomialBasis) -> MonomialBasis:
    """Drop monomials whose Gram diagonal entry is forced to zero.

    ``Q_mm`` is forced to zero when the coefficient of ``m^2`` in the target is
    identically zero and no other pair of kept monomials multiplies to
    ``m^2``; PSD-ness then forces the whole row to zero.  Repeated to a fixed
    point.
    """
    table = target.coefficient_table()
    keep = list(basis.entries)
    changed = True
    while changed:
        changed = False
        kept = set(keep)
        for m in list(keep):
            sq = tuple(2 * k for k in m)
            if not _structurally_zero(table.get(sq)):
                continue
            other = False
            for a in kept:
                if a == m:
                    continue
                b = tuple(s - k for s, k in zip(sq, a))
                if min(b) >= 0 and b != m and b in kept:
                    other = True
                    break
            if not other:
                keep.remove(m)
                kept.discard(m)
                changed = True
    return basis.restrict(keep)


def compile_sos(target, prune: bool = False, gram_var_id: Hashable = None) -> SosConstraint:
    """Build the Gram parametrization certifying ``target`` is SOS.

    The Gram basis is the complete graded-lex basis of degree
    ``ceil(deg/2)`` over the target's variables; ``prune=True`` removes
    monomials whose Gram rows are provably zero.
    """
    if isinstance(target, Polynomial):
        target = AffinePoly.fixed(target)
    deg = target.degree
    if deg == -math.inf:
        return SosConstraint(target, MonomialBasis(target.blocks, 0, []), gram_var_id)
    if target.is_fixed() and deg % 2 == 1:
        raise StructuralInfeasibility(f"fixed polynomial of odd degree {deg} cannot be SOS")
    half = int(math.ceil(deg / 2))
    basis = MonomialBasis.full(target.blocks, half)
    if prune:
        basis = prune_basis(target, basis)
    return SosConstraint(target, basis, gram_var_id)


def _even_up(k: int) -> int:
    return k + (k % 2)


def default_multiplier_degree(p: AffinePoly, g: Polynomial) -> int:
    """Degree making ``deg(lambda * g)`` match ``deg(p)`` rounded up to even."""
    target = _even_up(int(max(p.degree, 0)))
    k = target - int(g.degree)
    return max(0, k - (k % 2))


def s_procedure(p, g: Sequence[Polynomial], multiplier_degree=None, name: str = "lam",
                prune: bool = False, gram_degree: Optional[int] = None) -> List[SosConstraint]:
    """Certify ``p >= 0`` on ``{g_i >= 0 for all i}``.

    Introduces one SOS multiplier per inequality and returns the constraints
    ``[p - sum_i lambda_i g_i in SOS, lambda_1 in SOS, ...]``.
    ``multiplier_degree`` is an int for all multipliers, a per-inequality
    list, or None for :func:`default_multiplier_degree`.
    """
    if isinstance(p, Polynomial):
        p = AffinePoly.fixed(p)
    g = list(g)
    if multiplier_degree is None or isinstance(multiplier_degree, (int, np.integer)):
        degs = [multiplier_degree] * len(g)
    else:
        degs = list(multiplier_degree)
        if len(degs) != len(g):
            raise DegreeError("one multiplier degree per inequality is required")
    layout = merge_blocks(p.blocks, *[gi.blocks for gi in g])
    nv = sum(b.dim for b in layout)
    residual = p.embed(layout)
    multipliers = []
    for i, gi in enumerate(g):
        d = default_multiplier_degree(p, gi) if degs[i] is None else int(degs[i])
        if d < 0 or d % 2:
            raise DegreeError(f"multiplier degree must be even and non-negative, got {d}")
        if gram_degree is not None and d + gi.degree > 2 * gram_degree:
            raise DegreeError(
                f"deg(lambda_{i} g_{i}) = {d + gi.degree} exceeds Gram capacity {2 * gram_degree}")
        mons = monomials(nv, d)
        basis = [Polynomial({e: 1.0}, layout) for e in mons]
        lam = AffinePoly.unknown(basis, [(name, i, k) for k in range(len(mons))])
        multipliers.append(lam)
        residual = residual - lam * gi.embed(layout)
    if gram_degree is not None and residual.degree > 2 * gram_degree:
        raise DegreeError(f"certificate degree {residual.degree} exceeds Gram capacity {2 * gram_degree}")
    out = [compile_sos(residual, prune=prune)]
    out += [compile_sos(lam, prune=prune) for lam in multipliers]
    return out


def convexity_constraint(vhat, prune: bool = False) -> SosConstraint:
    """SOS constraint on ``y' Hess(vhat)(x) y`` over the state and an auxiliary block."""
    if isinstance(vhat, Polynomial):
        vhat = AffinePoly.fixed(vhat)
    if any(b.kind != "x" for b in vhat.blocks):
        raise ValueError("convexity constraint expects a polynomial in the state only")
    n = vhat.base.dim("x") or max((v.dim("x") for v in vhat.linear.values()), default=0)
    ys = Polynomial.variables("y", n)

    def quad_form(poly: Polynomial) -> Polynomial:
        if poly.degree < 2:
            return Polynomial.zero([VarBlock("x", n), VarBlock("y", n)])
        H = hessian(poly, "x")
        q = Polynomial.zero([VarBlock("x", n), VarBlock("y", n)])
        for i in range(n):
            for j in range(n):
                if not H[i][j].is_zero():
                    q = q + H[i][j] * ys[i] * ys[j]
        return q

    return compile_sos(vhat.map(quad_form), prune=prune)


# ---------------------------------------------------------------------------
# programs


@dataclass
class SosProgram:
    """maximize ``sum_v objective[v] * v`` subject to SOS constraints.

    ``variables`` lists every free decision variable in a fixed order.
    """

    objective: Dict[Hashable, float]
    constraints: List[SosConstraint]
    variables: List[Hashable] = field(default_factory=list)

    def __post_init__(self):
        seen = list(self.variables)
        known = set(seen)
        for c in self.constraints:
            for v in c.target.variables():
                if v not in known:
                    known.add(v)
                    seen.append(v)
        for v in self.objective:
            if v not in known:
                raise ValueError(f"objective variable {v!r} appears in no constraint")
        self.variables = seen
        for k, c in enumerate(self.constraints):
            if c.gram_var_id is None:
                c.gram_var_id = ("Q", k)


@dataclass
class SdpMap:
    """Where each SOS-program quantity lives in the lowered SDP."""

    free: Dict[Hashable, Tuple[int, int]]      # var -> (pos index, neg index) in diagonal block
    grams: List[tuple]                          # ("psd", block) | ("lp", index) | ("none",)
    lp_block: int
    row_scale: np.ndarray
    infeasible_rows: List[tuple] = field(default_factory=list)

    def free_values(self, sol: SdpSolution) -> Dict[Hashable, float]:
        lp = sol.X[self.lp_block] if self.lp_block is not None else None
        return {v: float(lp[i] - lp[j]) for v, (i, j) in self.free.items()}

    def gram_matrices(self, sol: SdpSolution) -> list:
        out = []
        for g in self.grams:
            if g[0] == "psd":
                out.append(np.array(sol.X[g[1]]))
            elif g[0] == "lp":
                out.append(np.array([[sol.X[self.lp_block][g[1]]]]))
            else:
                out.append(np.zeros((0, 0)))
        return out


def lower(program: SosProgram) -> Tuple[SdpProblem, SdpMap]:
    """Lower to a standard-form SDP: ``minimize -objective``.

    Free variables become differences of two non-negative scalars; 1x1 Gram
    matrices are stored as scalars in the same diagonal block.
    """
    lp_index = 0
    free = {}
    for v in program.variables:
        free[v] = (lp_index, lp_index + 1)
        lp_index += 2
    grams = []
    psd_sizes = []
    for c in program.constraints:
        if c.size == 0:
            grams.append(("none",))
        elif c.size == 1:
            grams.append(("lp", lp_index))
            lp_index += 1
        else:
            grams.append(("psd", len(psd_sizes)))
            psd_sizes.append(c.size)
    lp_block = len(psd_sizes) if lp_index else None
    block_sizes = psd_sizes + ([-lp_index] if lp_index else [])

    ent, val, b = [], [], []
    for v, coef in program.objective.items():
        i, j = free[v]
        ent += [(0, lp_block, i, i), (0, lp_block, j, j)]
        val += [-coef, coef]
    infeasible = []
    scales = []
    for c, gram in zip(program.constraints, grams):
        for mono, pairs, base, lin in c.equalities():
            row = []
            for (i, j) in pairs:
                if i > j:
                    continue
                w = 1.0 if i == j else 2.0
                if gram[0] == "psd":
                    row.append((gram[1], i, j, w))
                else:
                    row.append((lp_block, gram[1], gram[1], w))
            for v, coef in lin.items():
                if abs(coef) <= COEF_ATOL:
                    continue
                p, q = free[v]
                row.append((lp_block, p, p, -coef))
                row.append((lp_block, q, q, coef))
            if not row:
                if abs(base) > COEF_ATOL:
                    infeasible.append((c.gram_var_id, mono, base))
                continue
            s = max(abs(r[3]) for r in row)
            k = len(b) + 1
            for blk, i, j, w in row:
                # the off-diagonal weight 2 is split over (i,j),(j,i) by symmetric storage
                ent.append((k, blk, i, j))
                val.append(w / s if i == j else 0.5 * w / s)
            b.append(base / s)
            scales.append(s)
    prob = SdpProblem(block_sizes, np.array(b), np.array(ent, dtype=np.int64).reshape(-1, 4), np.array(val))
    return prob, SdpMap(free, grams, lp_block, np.array(scales), infeasible)


@dataclass
class SosSolution:
    status: str
    values: Dict[Hashable, float]
    grams: List[np.ndarray]
    objective: float
    sdp: Optional[SdpSolution]
    problem: Optional[SdpProblem] = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def solve_program(program: SosProgram, tol: float = 1e-8, max_iter: int = 100) -> SosSolution:
    prob, mp = lower(program)
    if mp.infeasible_rows:
        return SosSolution("infeasible", {}, [], math.nan, None, prob)
    sol = sdp_solve(prob, tol=tol, max_iter=max_iter)
    values = mp.free_values(sol)
    obj = sum(c * values[v] for v, c in program.objective.items())
    return SosSolution(sol.status, values, mp.gram_matrices(sol), obj, sol, prob)


def reconstruction_error(constraint: SosConstraint, Q: np.ndarray, values: Mapping[Hashable, float]) -> float:
    """max |coef(z'Qz - target)| for the given unknown values."""
    diff = constraint.gram_polynomial(Q) - constraint.target.instantiate(values)
    return diff.max_abs_coefficient()
