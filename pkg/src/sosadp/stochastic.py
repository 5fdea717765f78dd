"""Noise expectations via Gaussian moments and weighted box integrals."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .poly import Polynomial, VarBlock


@lru_cache(maxsize=4096)
def gaussian_moment(k: int, mean: float = 0.0, stddev: float = 1.0) -> float:
    """Raw moment E[w^k] of a scalar Gaussian.

    Uses M_k = mean*M_{k-1} + (k-1)*stddev^2*M_{k-2}, M_0 = 1.
    """
    if k < 0:
        raise ValueError("moment order must be non-negative")
    m_prev, m = 0.0, 1.0
    var = stddev * stddev
    for j in range(1, k + 1):
        m_prev, m = m, mean * m + (j - 1) * var * m_prev
    return m


@dataclass(frozen=True)
class NoiseSpec:
    """Independent Gaussian noise components."""

    mean: tuple
    stddev: tuple

    def __post_init__(self):
        mean = tuple(float(v) for v in np.atleast_1d(self.mean))
        std = tuple(float(v) for v in np.atleast_1d(self.stddev))
        if len(mean) != len(std):
            raise ValueError("mean and stddev must have the same length")
        if any(s < 0 for s in std):
            raise ValueError("stddev entries must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "stddev", std)

    @classmethod
    def standard(cls, dim: int) -> "NoiseSpec":
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.mean)

    def moment(self, component: int, k: int) -> float:
        return gaussian_moment(k, self.mean[component], self.stddev[component])

    @property
    def covariance(self) -> np.ndarray:
        return np.diag(np.square(self.stddev))

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        return rng.normal(self.mean, self.stddev, size=tuple(np.atleast_1d(size)) + (self.dim,))


def expect_noise(p: Polynomial, noise: NoiseSpec) -> Polynomial:
    """Replace every noise monomial by its expected value.

    The result no longer carries a noise block.
    """
    nw = p.dim("w")
    if nw == 0:
        return p
    if nw != noise.dim:
        raise ValueError(f"polynomial noise block has dim {nw}, noise spec has dim {noise.dim}")
    keep = [b for b in p.blocks if b.kind != "w"]
    off = 0
    for b in p.blocks:
        if b.kind == "w":
            break
        off += b.dim
    terms = {}
    for e, c in p.terms.items():
        we = e[off:off + nw]
        factor = 1.0
        for i, k in enumerate(we):
            if k:
                factor *= noise.moment(i, k)
                if factor == 0.0:
                    break
        if factor:
            rest = e[:off] + e[off + nw:]
            terms[rest] = terms.get(rest, 0.0) + c * factor
    return Polynomial(terms, keep)


@dataclass(frozen=True)
class WeightSpec:
    """State-relevance weight: a box with a polynomial (or uniform) density.

    The density is normalized internally so that it integrates to one.
    """

    box: tuple
    density: Optional[Polynomial] = None
    _mass: float = field(default=0.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        for lo, hi in box:
            if not lo < hi:
                raise ValueError(f"weight box needs lo < hi, got [{lo}, {hi}]")
        object.__setattr__(self, "box", box)
        if self.density is not None:
            d = self.density
            if d.dim("u") or d.dim("w") or d.dim("y"):
                raise ValueError("weight density must depend on the state only")
            if d.dim("x") not in (0, len(box)):
                raise ValueError("weight density dimension does not match the box")
        object.__setattr__(self, "_mass", self._raw_integral(Polynomial.constant(1.0)))
        if not self._mass > 0:
            raise ValueError("weight density must have positive mass on the box")

    @classmethod
    def uniform(cls, box) -> "WeightSpec":
        return cls(box)

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.box])

    @property
    def hi(self) -> np.ndarray:
        return np.array([b[1] for b in self.box])

    def _raw_integral(self, p: Polynomial) -> float:
        n = len(self.box)
        if p.dim("x") not in (0, n):
            raise ValueError(f"polynomial has {p.dim('x')} states, weight box has {n}")
        if any(b.kind != "x" for b in p.blocks):
            raise ValueError("box_integral expects a polynomial in the state only")
        p = p.embed([VarBlock("x", n)])
        if self.density is not None:
            p = p * self.density.embed([VarBlock("x", n)])
        total = 0.0
        for e, c in p.terms.items():
            term = c
            for (lo, hi), k in zip(self.box, e):
                term *= (hi ** (k + 1) - lo ** (k + 1)) / (k + 1)
            total += term
        return total

    def density_at(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.density is None:
            return np.full(x.shape[:-1], 1.0 / self._mass)
        return np.asarray(self.density.evaluate(x=x)) / self._mass


def box_integral(p: Polynomial, weight: WeightSpec) -> float:
    """Exact integral of ``c(x) p(x)`` over the weight box with normalized ``c``."""
    return weight._raw_integral(p) / weight._mass
