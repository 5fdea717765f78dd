"""Sparse multivariate polynomials over disjoint variable blocks.

Variables live in up to four blocks, always laid out in the order
state ``x``, input ``u``, noise ``w`` and auxiliary ``y``.  A polynomial
stores a map from dense exponent tuples (one entry per variable of its
layout) to float coefficients; zero coefficients are never stored.
"""
from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass
from numbers import Real
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

KINDS = ("x", "u", "w", "y")
KIND_NAMES = {"x": "state", "u": "input", "w": "noise", "y": "aux"}
_KIND_ALIASES = {
    "x": "x", "state": "x",
    "u": "u", "input": "u",
    "w": "w", "noise": "w",
    "y": "y", "aux": "y",
}

Exponent = Tuple[int, ...]


class IncompatibleBlocksError(ValueError):
    """Two polynomials disagree on the dimension of a shared block."""


def _kind(kind: str) -> str:
    try:
        return _KIND_ALIASES[kind]
    except KeyError:
        raise ValueError(f"unknown variable block {kind!r}") from None


@dataclass(frozen=True, order=True)
class VarBlock:
    kind: str
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "kind", _kind(self.kind))
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"block dimension must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))


def _normalize_blocks(blocks) -> Tuple[VarBlock, ...]:
    """Accept VarBlocks, ``(kind, dim)`` pairs or a ``{kind: dim}`` mapping."""
    if isinstance(blocks, Mapping):
        blocks = list(blocks.items())
    out = {}
    for b in blocks:
        if not isinstance(b, VarBlock):
            b = VarBlock(*b)
        if b.kind in out and out[b.kind] != b.dim:
            raise IncompatibleBlocksError(f"block {b.kind} given twice with different dims")
        out[b.kind] = b.dim
    return tuple(VarBlock(k, out[k]) for k in KINDS if k in out)


def merge_blocks(*layouts: Sequence[VarBlock]) -> Tuple[VarBlock, ...]:
    dims: Dict[str, int] = {}
    for layout in layouts:
        for b in layout:
            if dims.setdefault(b.kind, b.dim) != b.dim:
                raise IncompatibleBlocksError(
                    f"block {b.kind!r} has dimension {dims[b.kind]} in one operand and {b.dim} in the other")
    return tuple(VarBlock(k, dims[k]) for k in KINDS if k in dims)


def _offsets(blocks: Sequence[VarBlock]) -> Dict[str, int]:
    off, pos = {}, 0
    for b in blocks:
        off[b.kind] = pos
        pos += b.dim
    return off


def var_names(blocks: Sequence[VarBlock]) -> list:
    return [f"{b.kind}{i + 1}" for b in blocks for i in range(b.dim)]


def grlex_key(e: Exponent):
    return (sum(e), tuple(-k for k in e))


def monomials(nvars: int, max_degree: int) -> list:
    """All exponent tuples of total degree <= max_degree, graded-lex ordered."""
    out = []
    for deg in range(max_degree + 1):
        # compositions of deg into nvars parts, lex descending
        for combo in itertools.combinations_with_replacement(range(nvars), deg):
            e = [0] * nvars
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    out.sort(key=grlex_key)
    return out


class Polynomial:
    """Immutable sparse polynomial.

    Parameters
    ----------
    terms : mapping from exponent tuple to coefficient
    blocks : the variable layout, e.g. ``{"x": 2, "u": 1}``
    """

    __slots__ = ("blocks", "terms", "_compiled")

    def __init__(self, terms: Mapping[Exponent, float] | None = None, blocks=()):
        self.blocks = _normalize_blocks(blocks)
        nv = sum(b.dim for b in self.blocks)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != nv:
                raise ValueError(f"exponent {e} does not match layout with {nv} variables")
            if any(k < 0 for k in e):
                raise ValueError(f"negative exponent in {e}")
            c = float(c)
            if c != 0.0:
                clean[e] = clean.get(e, 0.0) + c
        self.terms = {e: c for e, c in clean.items() if c != 0.0}
        self._compiled = None

    # -- construction -------------------------------------------------
    @classmethod
    def constant(cls, value: float, blocks=()) -> "Polynomial":
        blocks = _normalize_blocks(blocks)
        nv = sum(b.dim for b in blocks)
        return cls({(0,) * nv: value}, blocks)

    @classmethod
    def zero(cls, blocks=()) -> "Polynomial":
        return cls({}, blocks)

    @classmethod
    def var(cls, kind: str, index: int, dim: int, blocks=()) -> "Polynomial":
        """The variable ``kind[index]`` (0-based) of a block of size ``dim``."""
        kind = _kind(kind)
        if not 0 <= index < dim:
            raise ValueError(f"index {index} out of range for block {kind} of dim {dim}")
        layout = merge_blocks(_normalize_blocks(blocks), (VarBlock(kind, dim),))
        e = [0] * sum(b.dim for b in layout)
        e[_offsets(layout)[kind] + index] = 1
        return cls({tuple(e): 1.0}, layout)

    @classmethod
    def variables(cls, kind: str, dim: int) -> list:
        return [cls.var(kind, i, dim) for i in range(dim)]

    @classmethod
    def from_coefficients(cls, entries: Sequence[Exponent], coefs, blocks) -> "Polynomial":
        return cls(dict(zip(map(tuple, entries), np.asarray(coefs, float))), blocks)

    # -- layout -------------------------------------------------------
    @property
    def nvars(self) -> int:
        return sum(b.dim for b in self.blocks)

    def dim(self, kind: str) -> int:
        kind = _kind(kind)
        for b in self.blocks:
            if b.kind == kind:
                return b.dim
        return 0

    def kinds(self) -> Tuple[str, ...]:
        return tuple(b.kind for b in self.blocks)

    def embed(self, blocks) -> "Polynomial":
        """Re-express over a larger layout (a superset of the current blocks)."""
        layout = merge_blocks(self.blocks, _normalize_blocks(blocks))
        if layout == self.blocks:
            return self
        src, dst = _offsets(self.blocks), _offsets(layout)
        nv = sum(b.dim for b in layout)
        moves = [(src[b.kind], dst[b.kind], b.dim) for b in self.blocks]
        terms = {}
        for e, c in self.terms.items():
            new = [0] * nv
            for s, d, n in moves:
                new[d:d + n] = e[s:s + n]
            terms[tuple(new)] = c
        return Polynomial(terms, layout)

    def block_exponents(self, e: Exponent, kind: str) -> Exponent:
        kind = _kind(kind)
        off = _offsets(self.blocks)
        if kind not in off:
            return ()
        return e[off[kind]:off[kind] + self.dim(kind)]

    def drop_unused_blocks(self) -> "Polynomial":
        """Remove blocks in which no stored term has a nonzero exponent."""
        keep = [b for b in self.blocks
                if any(any(self.block_exponents(e, b.kind)) for e in self.terms)]
        if len(keep) == len(self.blocks):
            return self
        off = _offsets(self.blocks)
        idx = [i for b in keep for i in range(off[b.kind], off[b.kind] + b.dim)]
        return Polynomial({tuple(e[i] for i in idx): c for e, c in self.terms.items()}, keep)

    # -- queries ------------------------------------------------------
    @property
    def degree(self) -> float:
        """Total degree; ``-inf`` for the zero polynomial."""
        if not self.terms:
            return -math.inf
        return max(sum(e) for e in self.terms)

    def degree_in(self, kind: str) -> float:
        kind = _kind(kind)
        if not self.terms:
            return -math.inf
        return max(sum(self.block_exponents(e, kind)) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, e: Exponent) -> float:
        return self.terms.get(tuple(e), 0.0)

    def constant_term(self) -> float:
        return self.terms.get((0,) * self.nvars, 0.0)

    def max_abs_coefficient(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def named_terms(self) -> dict:
        """Layout-free view: ``{((name, power), ...): coef}``."""
        names = var_names(self.blocks)
        return {tuple((names[i], k) for i, k in enumerate(e) if k): c
                for e, c in self.terms.items()}

    # -- arithmetic ---------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Polynomial):
            return other
        if isinstance(other, Real):
            return Polynomial.constant(float(other), self.blocks)
        return NotImplemented

    def _aligned(self, other):
        layout = merge_blocks(self.blocks, other.blocks)
        return self.embed(layout), other.embed(layout), layout

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b, layout = self._aligned(other)
        terms = dict(a.terms)
        for e, c in b.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return Polynomial(terms, layout)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self.terms.items()}, self.blocks)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, s: float) -> "Polynomial":
        s = float(s)
        return Polynomial({e: s * c for e, c in self.terms.items()}, self.blocks)

    def __mul__(self, other):
        if isinstance(other, Real):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        a, b, layout = self._aligned(other)
        terms: Dict[Exponent, float] = {}
        add = operator.add
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                e = tuple(map(add, e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return Polynomial(terms, layout)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if int(k) != k or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        out = Polynomial.constant(1.0, self.blocks)
        base = self
        k = int(k)
        while k:
            if k & 1:
                out = out * base
            k >>= 1
            if k:
                base = base * base
        return out

    def __eq__(self, other):
        if isinstance(other, Real):
            other = Polynomial.constant(float(other))
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.named_terms() == other.named_terms()

    def __hash__(self):
        return hash(frozenset(self.named_terms().items()))

    def allclose(self, other: "Polynomial", atol: float = 1e-12) -> bool:
        a, b, _ = self._aligned(other)
        keys = set(a.terms) | set(b.terms)
        return all(abs(a.terms.get(e, 0.0) - b.terms.get(e, 0.0)) <= atol for e in keys)

    def chop(self, atol: float) -> "Polynomial":
        return Polynomial({e: c for e, c in self.terms.items() if abs(c) > atol}, self.blocks)

    # -- calculus -----------------------------------------------------
    def differentiate(self, kind: str, index: int) -> "Polynomial":
        kind = _kind(kind)
        off = _offsets(self.blocks)
        if kind not in off or not 0 <= index < self.dim(kind):
            raise ValueError(f"variable {kind}{index + 1} is not part of this polynomial's blocks")
        pos = off[kind] + index
        terms = {}
        for e, c in self.terms.items():
            k = e[pos]
            if k:
                new = list(e)
                new[pos] = k - 1
                terms[tuple(new)] = c * k
        return Polynomial(terms, self.blocks)

    def gradient(self, kind: str = "x") -> list:
        return [self.differentiate(kind, i) for i in range(self.dim(kind))]

    # -- evaluation ---------------------------------------------------
    def _arrays(self):
        if self._compiled is None:
            if self.terms:
                E = np.array(list(self.terms.keys()), dtype=np.int64).reshape(len(self.terms), self.nvars)
                c = np.array(list(self.terms.values()))
            else:
                E = np.zeros((0, self.nvars), dtype=np.int64)
                c = np.zeros(0)
            self._compiled = (E, c)
        return self._compiled

    def _point_matrix(self, point) -> np.ndarray:
        """Assemble a ``(..., nvars)`` array from a per-block point."""
        if not isinstance(point, Mapping):
            arr = np.asarray(point, dtype=float)
            if arr.shape[-1:] != (self.nvars,) and not (self.nvars == 0):
                raise ValueError(f"expected {self.nvars} coordinates, got shape {arr.shape}")
            return arr
        point = {_kind(k): v for k, v in point.items()}
        E, _ = self._arrays()
        off = _offsets(self.blocks)
        parts, batch = [], None
        for b in self.blocks:
            if b.kind in point:
                v = np.asarray(point[b.kind], dtype=float)
                if v.ndim == 0:
                    v = v[None]
                if v.shape[-1] != b.dim:
                    raise ValueError(f"block {b.kind} expects {b.dim} values, got {v.shape[-1]}")
                parts.append(v)
                batch = v.shape[:-1] if batch is None else np.broadcast_shapes(batch, v.shape[:-1])
            else:
                sl = E[:, off[b.kind]:off[b.kind] + b.dim]
                if sl.any():
                    raise ValueError(f"missing values for block {b.kind!r} ({KIND_NAMES[b.kind]})")
                parts.append(None)
        batch = batch or ()
        cols = []
        for b, v in zip(self.blocks, parts):
            cols.append(np.zeros(batch + (b.dim,)) if v is None else np.broadcast_to(v, batch + (b.dim,)))
        if not cols:
            return np.zeros(batch + (0,))
        return np.concatenate(cols, axis=-1)

    def evaluate(self, point=None, **blocks):
        """Evaluate at a point given per block, e.g. ``p.evaluate(x=[1, 2], u=[0])``.

        Leading batch dimensions broadcast; a scalar is returned for a single point.
        """
        if point is None:
            point = blocks
        X = self._point_matrix(point)
        E, c = self._arrays()
        if not len(c):
            out = np.zeros(X.shape[:-1])
        elif X[..., 0:1].size <= 4096:
            out = np.prod(X[..., None, :] ** E, axis=-1) @ c
        else:
            out = _evaluate_large(X, E, c)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = evaluate

    # -- composition --------------------------------------------------
    def substitute(self, bindings: Mapping) -> "Polynomial":
        """Simultaneously replace variables by polynomials.

        ``bindings`` maps ``(kind, index)`` to a Polynomial (or number), or a
        block kind to a sequence with one entry per variable of that block.
        """
        flat = {}
        for key, val in bindings.items():
            if isinstance(key, str):
                kind = _kind(key)
                if len(val) != self.dim(kind):
                    raise ValueError(f"block {kind} needs {self.dim(kind)} bindings, got {len(val)}")
                for i, v in enumerate(val):
                    flat[(kind, i)] = v
            else:
                flat[(_kind(key[0]), int(key[1]))] = val
        off = _offsets(self.blocks)
        pos_binding = {}
        for (kind, i), v in flat.items():
            if kind not in off or not 0 <= i < self.dim(kind):
                raise ValueError(f"binding for {kind}{i + 1}, which is not in the polynomial's blocks")
            if not isinstance(v, Polynomial):
                v = Polynomial.constant(float(v))
            pos_binding[off[kind] + i] = v

        # unbound variables keep their identity but only their own block
        unbound_blocks = [b for b in self.blocks
                          if any(off[b.kind] + i not in pos_binding for i in range(b.dim))]
        layout = merge_blocks(unbound_blocks, *[v.blocks for v in pos_binding.values()])
        names = [(b.kind, i, b.dim) for b in self.blocks for i in range(b.dim)]
        factors = []
        for pos, (kind, i, dim) in enumerate(names):
            if pos in pos_binding:
                factors.append(pos_binding[pos].embed(layout))
            else:
                factors.append(Polynomial.var(kind, i, dim, layout))

        cache: Dict[Tuple[int, int], Polynomial] = {}

        def power(pos, k):
            if (pos, k) not in cache:
                cache[(pos, k)] = factors[pos] ** k
            return cache[(pos, k)]

        acc: Dict[Exponent, float] = {}
        one = Polynomial.constant(1.0, layout)
        for e, c in self.terms.items():
            term = one
            for pos, k in enumerate(e):
                if k:
                    term = term * power(pos, k)
            for te, tc in term.terms.items():
                acc[te] = acc.get(te, 0.0) + c * tc
        return Polynomial(acc, layout)

    # -- printing -----------------------------------------------------
    def __str__(self):
        return format_polynomial(self)

    def __repr__(self):
        layout = ", ".join(f"{b.kind}:{b.dim}" for b in self.blocks)
        return f"Polynomial({str(self)!r}, blocks=[{layout}])"


def _evaluate_large(X: np.ndarray, E: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Term-by-term evaluation with cached integer powers (large batches)."""
    powers: Dict[Tuple[int, int], np.ndarray] = {}

    def power(i, k):
        if (i, k) not in powers:
            powers[(i, k)] = X[..., i] if k == 1 else power(i, k - 1) * X[..., i]
        return powers[(i, k)]

    out = np.zeros(X.shape[:-1])
    for row, coef in zip(E, c):
        term = None
        for i in np.flatnonzero(row):
            f = power(int(i), int(row[i]))
            term = f if term is None else term * f
        out += coef if term is None else coef * term
    return out


def _fmt_number(c: float) -> str:
    if c.is_integer() and abs(c) < 1e15:
        return str(int(c))
    return repr(c)


def format_polynomial(p: Polynomial) -> str:
    """Text form accepted by :func:`sosadp.parse.parse` (lossless)."""
    if not p.terms:
        return "0"
    names = var_names(p.blocks)
    pieces = []
    for e in sorted(p.terms, key=grlex_key, reverse=True):
        c = p.terms[e]
        mono = "*".join(names[i] if k == 1 else f"{names[i]}^{k}" for i, k in enumerate(e) if k)
        mag = abs(c)
        if not mono:
            body = _fmt_number(mag)
        elif mag == 1.0:
            body = mono
        else:
            body = f"{_fmt_number(mag)}*{mono}"
        sign = "-" if c < 0 else "+"
        if not pieces:
            pieces.append(body if sign == "+" else f"-{body}")
        else:
            pieces.append(f" {sign} {body}")
    return "".join(pieces)


class MonomialBasis:
    """Graded-lex ordered monomials of total degree <= ``max_degree``.

    ``MonomialBasis.full`` builds the complete basis; ``restrict`` keeps a
    subset (used when provably-zero Gram rows are pruned).
    """

    def __init__(self, blocks, max_degree: int, entries: Iterable[Exponent] | None = None):
        self.blocks = _normalize_blocks(blocks)
        self.max_degree = int(max_degree)
        nv = sum(b.dim for b in self.blocks)
        if entries is None:
            entries = monomials(nv, self.max_degree) if self.max_degree >= 0 else []
        self.entries = tuple(sorted((tuple(e) for e in entries), key=grlex_key))

    @classmethod
    def full(cls, blocks, max_degree: int) -> "MonomialBasis":
        return cls(blocks, max_degree)

    @property
    def nvars(self) -> int:
        return sum(b.dim for b in self.blocks)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def is_complete(self) -> bool:
        return len(self.entries) == math.comb(self.nvars + self.max_degree, self.max_degree)

    def restrict(self, keep: Iterable[Exponent]) -> "MonomialBasis":
        keep = set(keep)
        return MonomialBasis(self.blocks, self.max_degree, [e for e in self.entries if e in keep])

    def polynomials(self) -> list:
        return [Polynomial({e: 1.0}, self.blocks) for e in self.entries]

    def index(self) -> Dict[Exponent, int]:
        return {e: i for i, e in enumerate(self.entries)}

    def evaluate(self, points) -> np.ndarray:
        """Monomial values at ``(..., nvars)`` points, shape ``(..., len(basis))``."""
        E = np.array(self.entries, dtype=np.int64).reshape(len(self.entries), self.nvars)
        X = np.asarray(points, dtype=float)
        return np.prod(X[..., None, :] ** E, axis=-1)

    def __repr__(self):
        layout = ", ".join(f"{b.kind}:{b.dim}" for b in self.blocks)
        return f"MonomialBasis([{layout}], degree={self.max_degree}, size={len(self)})"


def hessian(p: Polynomial, kind: str = "x") -> list:
    """Matrix (list of lists) of second partial derivatives over one block."""
    n = p.dim(kind)
    if n == 0:
        raise ValueError(f"polynomial has no {kind!r} block")
    first = p.gradient(kind)
    H = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            H[i][j] = H[j][i] = first[i].differentiate(kind, j)
    return H


def arith(p: Polynomial, q, op: str) -> Polynomial:
    """Functional form of the ring operations: ``add``, ``sub``, ``mul``, ``scale``."""
    if op == "add":
        return p + q
    if op == "sub":
        return p - q
    if op == "mul":
        return p * q
    if op == "scale":
        return p.scale(q)
    raise ValueError(f"unknown operation {op!r}")
