"""Primal-dual interior-point solver for standard-form semidefinite programs.

The problem is::

    minimize    <C, X>
    subject to  <A_k, X> = b_k,   k = 1..m
                X block diagonal, PSD blocks and non-negative diagonal blocks

with dual ``maximize b'y  s.t.  sum_k y_k A_k + Z = C, Z >= 0``.

Data are stored SDPA-style as entries ``(matno, block, i, j, value)`` with
``i <= j``; ``matno == 0`` is the objective ``C`` and ``matno == k`` is
``A_k``.  Block sizes follow the SDPA convention: a negative size ``-n``
denotes a diagonal block of ``n`` non-negative scalars.

The iteration is an infeasible-start path-following method with
Nesterov-Todd scaling and Mehrotra predictor-corrector steps; the Schur
complement system is formed and factored densely.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import scipy.linalg as sla

log = logging.getLogger(__name__)

STATUSES = ("optimal", "infeasible", "unbounded", "max_iter", "numerical_error")


@dataclass
class SdpProblem:
    """Standard-form SDP in sparse SDPA-like storage (0-based indices)."""

    block_sizes: tuple
    b: np.ndarray
    entries: np.ndarray          # int array (K, 4): matno, block, i, j  with i <= j
    values: np.ndarray           # float array (K,)

    def __post_init__(self):
        self.block_sizes = tuple(int(s) for s in self.block_sizes)
        if any(s == 0 for s in self.block_sizes):
            raise ValueError("block sizes must be non-zero")
        self.b = np.asarray(self.b, dtype=float).reshape(-1)
        ent = np.asarray(self.entries, dtype=np.int64).reshape(-1, 4)
        val = np.asarray(self.values, dtype=float).reshape(-1)
        if len(ent) != len(val):
            raise ValueError("entries and values differ in length")
        if not np.all(np.isfinite(val)) or not np.all(np.isfinite(self.b)):
            raise ValueError("SDP data must be finite")
        # canonical: upper triangle, merged duplicates, zeros dropped, sorted
        swap = ent[:, 2] > ent[:, 3]
        ent[swap, 2], ent[swap, 3] = ent[swap, 3], ent[swap, 2].copy()
        if len(ent):
            if ent[:, 0].min() < 0 or ent[:, 0].max() > self.m:
                raise ValueError("matrix number out of range")
            for blk in np.unique(ent[:, 1]):
                size = self.block_sizes[blk]
                sel = ent[:, 1] == blk
                if ent[sel, 2:].max() >= abs(size) or ent[sel, 2:].min() < 0:
                    raise ValueError(f"index out of range in block {blk}")
                if size < 0 and np.any(ent[sel, 2] != ent[sel, 3]):
                    raise ValueError(f"off-diagonal entry in diagonal block {blk}")
            keys, inv = np.unique(ent, axis=0, return_inverse=True)
            sums = np.zeros(len(keys))
            np.add.at(sums, inv.reshape(-1), val)
            nz = sums != 0.0
            ent, val = keys[nz], sums[nz]
        self.entries, self.values = ent, val

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def nblocks(self) -> int:
        return len(self.block_sizes)

    def structurally_equal(self, other: "SdpProblem", rtol: float = 0.0) -> bool:
        return (self.block_sizes == other.block_sizes
                and np.array_equal(self.entries, other.entries)
                and np.allclose(self.values, other.values, rtol=rtol, atol=0)
                and np.allclose(self.b, other.b, rtol=rtol, atol=0))

    def objective_entries(self):
        sel = self.entries[:, 0] == 0
        return self.entries[sel], self.values[sel]

    # dense views -------------------------------------------------------
    def dense_blocks(self, matno: int) -> list:
        """Dense per-block arrays (matrices for PSD blocks, vectors for diagonal ones)."""
        out = [np.zeros((s, s)) if s > 0 else np.zeros(-s) for s in self.block_sizes]
        sel = self.entries[:, 0] == matno
        for (_, blk, i, j), v in zip(self.entries[sel], self.values[sel]):
            if self.block_sizes[blk] > 0:
                out[blk][i, j] = v
                out[blk][j, i] = v
            else:
                out[blk][i] = v
        return out


@dataclass
class SdpSolution:
    status: str
    X: list
    y: np.ndarray
    Z: list
    primal_objective: float
    dual_objective: float
    gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    message: str = ""
    history: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# ---------------------------------------------------------------------------
# cone helpers.  A point is a list: one (n, n) array per PSD block followed by
# a single vector holding every diagonal-block entry.


class _Data:
    """Dense operator form of an SdpProblem."""

    def __init__(self, prob: SdpProblem, detect_free: bool = False):
        self.m = prob.m
        self.b = prob.b.copy()
        self.psd = [k for k, s in enumerate(prob.block_sizes) if s > 0]
        self.dims = [prob.block_sizes[k] for k in self.psd]
        lp_blocks = [k for k, s in enumerate(prob.block_sizes) if s < 0]
        lp_off, pos = {}, 0
        for k in lp_blocks:
            lp_off[k] = pos
            pos += -prob.block_sizes[k]
        self.nlp = pos
        self.lp_offsets = lp_off
        blk_pos = {k: i for i, k in enumerate(self.psd)}
        m = self.m
        self.A = [np.zeros((m, n, n)) for n in self.dims]
        self.C = [np.zeros((n, n)) for n in self.dims]
        self.A_lp = np.zeros((m, self.nlp))
        self.c_lp = np.zeros(self.nlp)
        for (mat, blk, i, j), v in zip(prob.entries, prob.values):
            if blk in blk_pos:
                t = blk_pos[blk]
                M = self.C[t] if mat == 0 else self.A[t][mat - 1]
                M[i, j] = v
                M[j, i] = v
            else:
                col = lp_off[blk] + i
                if mat == 0:
                    self.c_lp[col] = v
                else:
                    self.A_lp[mat - 1, col] = v
        self.nlp_full = self.nlp
        self.lp_cols = np.arange(self.nlp)
        self.free_pairs = np.zeros((0, 2), dtype=np.int64)
        if detect_free:
            self._extract_free()
        self.F = self.A_lp_full[:, self.free_pairs[:, 0]] if detect_free else np.zeros((m, 0))
        self.c_f = self.c_lp_full[self.free_pairs[:, 0]] if detect_free else np.zeros(0)
        self.nf = self.F.shape[1]
        self.A_flat = [A.reshape(m, -1) for A in self.A]
        self.nu = sum(self.dims) + self.nlp

    def _extract_free(self):
        """Recognize split free variables: diagonal columns ``j, k`` with
        ``(A_j, c_j) = -(A_k, c_k)``.  Each pair becomes one free variable."""
        self.A_lp_full, self.c_lp_full = self.A_lp, self.c_lp
        cols = np.vstack([self.A_lp, self.c_lp[None, :]]).T
        seen, pairs, used = {}, [], set()
        for j, col in enumerate(cols):
            if not np.any(col):
                continue
            key = (-col + 0.0).tobytes()
            k = seen.get(key)
            if k is not None and k not in used:
                pairs.append((k, j))
                used.update((k, j))
                del seen[key]
            else:
                seen.setdefault((col + 0.0).tobytes(), j)
        self.free_pairs = np.array(pairs, dtype=np.int64).reshape(-1, 2)
        keep = np.array([j for j in range(self.nlp_full) if j not in used], dtype=np.int64)
        self.lp_cols = keep
        self.A_lp = self.A_lp_full[:, keep]
        self.c_lp = self.c_lp_full[keep]
        self.nlp = len(keep)

    def lp_full(self, x_lp, x_free, dual=False):
        """Expand the reduced diagonal part and free variables to the original columns."""
        out = np.zeros(self.nlp_full)
        out[self.lp_cols] = x_lp
        if len(self.free_pairs):
            if dual:
                out[self.free_pairs[:, 0]] = x_free
                out[self.free_pairs[:, 1]] = -x_free
            else:
                out[self.free_pairs[:, 0]] = np.maximum(x_free, 0.0)
                out[self.free_pairs[:, 1]] = np.maximum(-x_free, 0.0)
        return out

    def op(self, X):
        out = self.A_lp @ X[-1]
        for Af, Xb in zip(self.A_flat, X[:-1]):
            out = out + Af @ Xb.reshape(-1)
        return out

    def adj(self, y):
        out = [np.tensordot(y, A, axes=1) for A in self.A]
        out.append(self.A_lp.T @ y)
        return out

    def cvec(self):
        return [C.copy() for C in self.C] + [self.c_lp.copy()]


def _inner(X, Z) -> float:
    return float(sum(np.vdot(a, b) for a, b in zip(X, Z)))


def _norm(X) -> float:
    return math.sqrt(sum(float(np.vdot(a, a)) for a in X))


def _sym(M):
    return 0.5 * (M + M.T)


def _nt_scaling(X, Z):
    """NT scaling per block: G with G^{-1} X G^{-T} = G^T Z G = diag(lam)."""
    scal = []
    for Xb, Zb in zip(X[:-1], Z[:-1]):
        Lx = np.linalg.cholesky(Xb)
        Lz = np.linalg.cholesky(Zb)
        U, s, Vt = np.linalg.svd(Lz.T @ Lx)
        G = Lx @ Vt.T / np.sqrt(s)
        Ginv = (U.T / np.sqrt(s)[:, None]) @ Lz.T
        scal.append((G, Ginv, s))
    x, z = X[-1], Z[-1]
    g = (x / z) ** 0.25
    scal.append((g, 1.0 / g, np.sqrt(x * z)))
    return scal


def _max_step(lam, D):
    """Largest t with diag(lam) + t*D >= 0 (scaled coordinates)."""
    if np.ndim(lam) and D.ndim == 1:
        neg = D < 0
        if not neg.any():
            return math.inf
        return float(np.min(-lam[neg] / D[neg]))
    r = 1.0 / np.sqrt(lam)
    S = (r[:, None] * D) * r[None, :]
    w = np.linalg.eigvalsh(_sym(S))
    return math.inf if w[0] >= 0 else -1.0 / w[0]


def _step_length(scal, DX, DZ):
    ap = ad = math.inf
    for (G, Ginv, lam), dx, dz in zip(scal, DX, DZ):
        if dx.ndim == 2:
            dxs = Ginv @ dx @ Ginv.T
            dzs = G.T @ dz @ G
        else:
            dxs = dx * Ginv * Ginv
            dzs = dz * G * G
        ap = min(ap, _max_step(lam, dxs))
        ad = min(ad, _max_step(lam, dzs))
    return ap, ad


def _initial_point(data: _Data):
    b = data.b
    X, Z = [], []
    for A, C, n in zip(data.A, data.C, data.dims):
        normA = np.sqrt(np.einsum("kij,kij->k", A, A))
        xi = max(10.0, math.sqrt(n), n * float(np.max((1 + np.abs(b)) / (1 + normA), initial=0.0)))
        eta = max(10.0, math.sqrt(n), float(np.max(normA, initial=0.0)), float(np.linalg.norm(C)))
        X.append(xi * np.eye(n))
        Z.append(eta * np.eye(n))
    if data.nlp:
        normA = np.linalg.norm(data.A_lp, axis=1)
        n = data.nlp
        xi = max(10.0, math.sqrt(n), math.sqrt(n) * float(np.max((1 + np.abs(b)) / (1 + normA), initial=0.0)))
        eta = max(10.0, math.sqrt(n), float(np.max(normA, initial=0.0)), float(np.linalg.norm(data.c_lp)))
        X.append(np.full(n, xi))
        Z.append(np.full(n, eta))
    else:
        X.append(np.zeros(0))
        Z.append(np.zeros(0))
    return X, np.zeros(data.m), Z


def _schur(data: _Data, scal):
    m = data.m
    M = np.zeros((m, m))
    for A, Af, (G, _, _) in zip(data.A, data.A_flat, scal[:-1]):
        W = G @ G.T
        WAW = np.matmul(np.matmul(W, A), W)
        M += Af @ WAW.reshape(m, -1).T
    if data.nlp:
        w = scal[-1][0] ** 4
        M += (data.A_lp * w) @ data.A_lp.T
    return _sym(M)


class _Factor:
    """Factorization of ``[[M, F], [F', 0]]`` (just ``M`` without free variables)."""

    def __init__(self, M, F):
        self.M, self.F = M, F
        m, nf = M.shape[0], F.shape[1]
        d = np.abs(np.diag(M))
        if nf:
            K = np.block([[M, F], [F.T, np.zeros((nf, nf))]])
        else:
            K = M
        # symmetric equilibration: unit diagonal on the M part, unit column norms on F
        dm = np.where(d > 0, 1.0 / np.sqrt(np.where(d > 0, d, 1.0)), 1.0)
        if nf:
            Fs = F * dm[:, None]
            fn = np.linalg.norm(Fs, axis=0)
            df = np.where(fn > 0, 1.0 / np.where(fn > 0, fn, 1.0), 1.0)
        else:
            df = np.zeros(0)
        self.D = np.concatenate([dm, df])
        self.K = K
        K = K * self.D[:, None] * self.D[None, :]
        scale = 1.0
        reg = 0.0
        for attempt in range(6):
            Kr = K.copy()
            if reg:
                Kr[np.arange(m), np.arange(m)] += reg
                Kr[np.arange(m, m + nf), np.arange(m, m + nf)] -= reg
            try:
                if nf:
                    self.lu = sla.lu_factor(Kr, check_finite=True)
                    piv = np.abs(np.diag(self.lu[0]))
                    if piv.min() <= 1e-15 * piv.max():
                        raise np.linalg.LinAlgError("singular KKT matrix")
                    self.kind = "lu"
                else:
                    self.cf = sla.cho_factor(Kr, lower=True, check_finite=True)
                    self.kind = "chol"
                self.reg = reg
                return
            except (np.linalg.LinAlgError, ValueError):
                reg = scale * (1e-14 * 100 ** attempt)
        self.kind = "lstsq"
        self.reg = reg

    def _raw(self, r):
        r = r * self.D
        if self.kind == "chol":
            x = sla.cho_solve(self.cf, r)
        elif self.kind == "lu":
            x = sla.lu_solve(self.lu, r)
        else:
            x = np.linalg.lstsq(self.K * self.D[:, None] * self.D[None, :], r, rcond=None)[0]
        return x * self.D

    def solve(self, r, rf):
        rhs = np.concatenate([r, rf])
        x = self._raw(rhs)
        # iterative refinement against the unregularized system, while it helps
        res = rhs - self.K @ x
        rn = np.linalg.norm(res)
        for _ in range(5 if self.reg or self.kind == "lu" else 0):
            if rn <= 1e-15 * (np.linalg.norm(rhs) + 1e-300):
                break
            xn = x + self._raw(res)
            resn = rhs - self.K @ xn
            rnn = np.linalg.norm(resn)
            if not rnn < 0.5 * rn:
                if rnn < rn:
                    x = xn
                break
            x, res, rn = xn, resn, rnn
        m = self.M.shape[0]
        return x[:m], x[m:]


def _direction(data, scal, fac, rp, Rd, rf, S):
    """Solve the Newton system given the scaled complementarity right-hand side S."""
    GSG, WRW = [], []
    for (G, _, _), Sb, Rb in zip(scal[:-1], S[:-1], Rd[:-1]):
        W = G @ G.T
        GSG.append(G @ Sb @ G.T)
        WRW.append(W @ Rb @ W)
    g = scal[-1][0]
    GSG.append(g * S[-1] * g)
    WRW.append(g * g * Rd[-1] * g * g)
    rhs = rp - data.op(GSG) + data.op(WRW)
    dy, dxf = fac.solve(rhs, rf)
    ATdy = data.adj(dy)
    dZ = [r - a for r, a in zip(Rd, ATdy)]
    dX = []
    for (G, _, _), gsg, dz in zip(scal[:-1], GSG[:-1], dZ[:-1]):
        W = G @ G.T
        dX.append(_sym(gsg - W @ dz @ W))
    dX.append(GSG[-1] - g * g * dZ[-1] * g * g)
    dZ = [_sym(d) if d.ndim == 2 else d for d in dZ]
    return dX, dy, dZ, dxf


def _scaled(scal, DX, DZ):
    out = []
    for (G, Ginv, lam), dx, dz in zip(scal, DX, DZ):
        if dx.ndim == 2:
            out.append((Ginv @ dx @ Ginv.T, G.T @ dz @ G))
        else:
            out.append((dx * Ginv * Ginv, dz * G * G))
    return out


def _lyap_solve(lam, R):
    """Solve lam o S = R (Jordan product with diagonal lam)."""
    if R.ndim == 1:
        return R / lam
    return 2.0 * R / (lam[:, None] + lam[None, :])


def solve(prob: SdpProblem, tol: float = 1e-8, max_iter: int = 100,
          infeas_tol: float = 1e-8, verbose: bool = False) -> SdpSolution:
    """Solve ``prob`` with a Mehrotra predictor-corrector NT method.

    Pairs of diagonal-block columns that are exact negatives of each other
    (the standard split ``v = v+ - v-`` of a free variable) are recognized
    and handled as free variables through an augmented Newton system, which
    avoids the drift and ill-conditioning the split causes.

    Convergence is declared when the relative duality gap and the relative
    primal/dual residual norms are all below ``tol``.  The returned point is
    the final iterate; for statuses other than ``optimal`` it is the best
    point found.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    data = _Data(prob, detect_free=True)
    C = data.cvec()
    b, F, cf = data.b, data.F, data.c_f
    normb = np.linalg.norm(b)
    normC = math.sqrt(_norm(C) ** 2 + float(cf @ cf))
    X, y, Z = _initial_point(data)
    xf = np.zeros(data.nf)
    history = []
    status, message = "max_iter", f"no convergence in {max_iter} iterations"
    best = None
    it = 0

    def measures(X, xf, y, Z):
        rp = b - data.op(X) - F @ xf
        ATy = data.adj(y)
        Rd = [c - z - a for c, z, a in zip(C, Z, ATy)]
        rf = cf - F.T @ y
        pobj, dobj = _inner(C, X) + float(cf @ xf), float(b @ y)
        relgap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
        pinf = np.linalg.norm(rp) / (1 + normb)
        dinf = math.sqrt(_norm(Rd) ** 2 + float(rf @ rf)) / (1 + normC)
        return rp, Rd, rf, pobj, dobj, relgap, pinf, dinf

    for it in range(max_iter + 1):
        rp, Rd, rf, pobj, dobj, relgap, pinf, dinf = measures(X, xf, y, Z)
        mu = _inner(X, Z) / data.nu
        history.append((it, pobj, dobj, relgap, pinf, dinf, mu))
        if verbose:
            log.info("%3d pobj=% .9e dobj=% .9e gap=%.2e pinf=%.2e dinf=%.2e",
                     it, pobj, dobj, relgap, pinf, dinf)
        merit = max(relgap, pinf, dinf)
        if best is None or merit < best[0]:
            best = (merit, [x.copy() for x in X], xf.copy(), y.copy(), [z.copy() for z in Z])
        if relgap <= tol and pinf <= tol and dinf <= tol:
            status, message = "optimal", "converged"
            break
        # infeasibility certificates
        if dobj > 0:
            ray = math.sqrt(_norm([c - r for c, r in zip(C, Rd)]) ** 2 + float((cf - rf) @ (cf - rf)))
            if ray <= infeas_tol * dobj and pinf > tol:
                status, message = "infeasible", "dual ray certifies primal infeasibility"
                break
        if pobj < 0:
            AX = np.linalg.norm(b - rp)
            if AX <= infeas_tol * abs(pobj) and dinf > tol:
                status, message = "unbounded", "primal ray certifies dual infeasibility"
                break
        if it == max_iter:
            break

        try:
            scal = _nt_scaling(X, Z)
            M = _schur(data, scal)
            if not np.all(np.isfinite(M)):
                raise np.linalg.LinAlgError("non-finite Schur complement")
            fac = _Factor(M, F)
        except np.linalg.LinAlgError as exc:
            status, message = "numerical_error", f"KKT system breakdown: {exc}"
            break

        lams = [s[2] for s in scal]
        # predictor
        S_aff = [-np.diag(lam) for lam in lams[:-1]] + [-lams[-1]]
        dX, dy, dZ, dxf = _direction(data, scal, fac, rp, Rd, rf, S_aff)
        ap, ad = _step_length(scal, dX, dZ)
        ap, ad = min(1.0, ap), min(1.0, ad)
        mu_aff = _inner([x + ap * d for x, d in zip(X, dX)], [z + ad * d for z, d in zip(Z, dZ)]) / data.nu
        sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3)) if mu > 0 else 0.0
        # corrector
        sc = _scaled(scal, dX, dZ)
        S = []
        for i, (lam, (dxs, dzs)) in enumerate(zip(lams, sc)):
            if i < len(lams) - 1:
                R = sigma * mu * np.eye(len(lam)) - np.diag(lam ** 2) - _sym(dxs @ dzs)
            else:
                R = sigma * mu - lam ** 2 - dxs * dzs
            S.append(_lyap_solve(lam, R))
        dX, dy, dZ, dxf = _direction(data, scal, fac, rp, Rd, rf, S)
        if not (all(np.all(np.isfinite(d)) for d in dX) and np.all(np.isfinite(dy))
                and np.all(np.isfinite(dxf))):
            status, message = "numerical_error", "non-finite search direction"
            break
        ap, ad = _step_length(scal, dX, dZ)
        frac = 0.9 + 0.09 * min(1.0, ap, ad)
        ap, ad = min(1.0, frac * ap), min(1.0, frac * ad)
        X = [x + ap * d for x, d in zip(X, dX)]
        xf = xf + ap * dxf
        y = y + ad * dy
        Z = [z + ad * d for z, d in zip(Z, dZ)]
        if ap < 1e-12 and ad < 1e-12:
            status, message = "numerical_error", "step length collapsed"
            break

    if status in ("max_iter", "numerical_error") and best is not None:
        _, X, xf, y, Z = best
    rp, Rd, rf, pobj, dobj, relgap, pinf, dinf = measures(X, xf, y, Z)
    return SdpSolution(status=status, X=_unpack(data, prob, X, xf), y=y,
                       Z=_unpack(data, prob, Z, rf, dual=True),
                       primal_objective=pobj, dual_objective=dobj, gap=relgap,
                       primal_residual=pinf, dual_residual=dinf, iterations=it,
                       message=message, history=history)


def _unpack(data: _Data, prob: SdpProblem, point, free=None, dual=False) -> list:
    """Solver point -> list ordered like ``prob.block_sizes``."""
    out = []
    psd_iter = iter(point[:-1])
    lp = data.lp_full(point[-1], np.zeros(data.nf) if free is None else free, dual)
    for k, s in enumerate(prob.block_sizes):
        if s > 0:
            out.append(next(psd_iter))
        else:
            off = data.lp_offsets[k]
            out.append(lp[off:off - s].copy())
    return out


def _pack(data: _Data, prob: SdpProblem, blocks) -> list:
    psd = [np.asarray(blocks[k], float) for k in data.psd]
    lp = np.zeros(data.nlp)
    for k, off in data.lp_offsets.items():
        lp[off:off - prob.block_sizes[k]] = np.asarray(blocks[k], float).reshape(-1)
    return psd + [lp]


@dataclass
class KktReport:
    primal_residual: float       # ||b - A(X)||
    dual_residual: float         # ||C - Z - A'y||
    complementarity: float       # |<X, Z>|
    gap: float                   # |<C,X> - b'y|
    min_eig_X: float
    min_eig_Z: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def check_kkt(prob: SdpProblem, sol) -> KktReport:
    """Absolute KKT residuals of ``sol`` (an SdpSolution or ``(X, y, Z)``)."""
    data = _Data(prob)
    if isinstance(sol, SdpSolution):
        Xb, y, Zb = sol.X, sol.y, sol.Z
    else:
        Xb, y, Zb = sol
    X, Z = _pack(data, prob, Xb), _pack(data, prob, Zb)
    y = np.asarray(y, float)
    C = data.cvec()
    rp = data.b - data.op(X)
    Rd = [c - z - a for c, z, a in zip(C, Z, data.adj(y))]

    def min_eig(P):
        vals = [np.linalg.eigvalsh(_sym(p))[0] for p in P[:-1] if p.size]
        if P[-1].size:
            vals.append(P[-1].min())
        return float(min(vals)) if vals else 0.0

    return KktReport(
        primal_residual=float(np.linalg.norm(rp)),
        dual_residual=_norm(Rd),
        complementarity=abs(_inner(X, Z)),
        gap=abs(_inner(C, X) - float(data.b @ y)),
        min_eig_X=min_eig(X),
        min_eig_Z=min_eig(Z),
    )
