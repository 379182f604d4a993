"""Dual semidefinite program for the overlaid-snapshot atomic norms.

The dual of the joint atomic-norm denoising program maximizes Re<q, y>
subject to both vector dual polynomials staying inside the unit ball on
the whole parameter torus.  Each sup-norm constraint is certified by a
bounded-real linear matrix inequality

    [[Q, Z^H], [Z, I]] >= 0,       Z = adjoint of the forward map at q,

plus multilevel-Toeplitz trace constraints forcing the Gram polynomial
phi(r)^H Q phi(r) to be identically one on the torus.  ``gram_mode``
chooses whether the two LMIs share one Gram matrix Q (as the dual is
usually written) or carry independent copies.

Everything is exported as a real conic standard form

    minimize c^T x   s.t.  A x = b,   x in R^free x PSD x PSD,

with complex Hermitian blocks realified by :func:`hermitian_embed` and
PSD blocks in isometric svec packing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ._json import complex_array_from_json, complex_array_to_json, dumps_canonical
from ._pack import (
    SQRT2,
    herm_diag_index,
    herm_len,
    herm_pair_index,
    herm_unpack,
    svec,
    svec_index,
    svec_len,
)
from .lifting import Measurement, _subspace_rows
from .scene import Dims, Subspaces

# Complex LMI blocks above this size make the realified SDP unreasonable
# for a desk machine; fail early with the offending numbers.
MAX_LMI_DIM = 600


# -----------------------------------------------------------------
# Toeplitz constraint enumeration
# -----------------------------------------------------------------

class ToeplitzIndex(NamedTuple):
    """Offset class (Doppler, delay, antenna) of Gram-matrix diagonals."""

    n1: int    # Doppler-axis offset, pulses
    n2: int    # delay-axis offset, frequency bins
    n3: int    # antenna-axis offset


def toeplitz_constraint_set(dims: Dims) -> list[ToeplitzIndex]:
    """Canonical halfspace of offset classes for the unit-trace rows.

    One representative per conjugate pair over the full offset box
    |n1| <= P-1, |n2| <= M-1, |n3| <= N_r-1: positive n1 first, then
    n1 = 0 with positive n2, then n1 = n2 = 0 with n3 >= 0.  The count
    is ((2P-1)(2M-1)(2N_r-1) + 1) / 2.
    """
    out = []
    for n1 in range(dims.P):
        if n1 == 0:
            n2_range = range(0, dims.M)
        else:
            n2_range = range(-(dims.M - 1), dims.M)
        for n2 in n2_range:
            if n1 == 0 and n2 == 0:
                n3_range = range(0, dims.N_r)
            else:
                n3_range = range(-(dims.N_r - 1), dims.N_r)
            for n3 in n3_range:
                out.append(ToeplitzIndex(n1, n2, n3))
    return out


def trace_constraint_row(idx: ToeplitzIndex, dims: Dims):
    """Entry pairs (j, j') of the Gram matrix in one offset class.

    Returns (pairs, rhs) where pairs is an integer array of shape (R, 2)
    listing all flat index pairs with component-wise index difference
    (p_j - p_j', n_j - n_j', a_j - a_j') == idx, and rhs is 1 for the
    zero offset and 0 otherwise.  The canonical halfspace guarantees
    j >= j' for every pair.
    """
    n1, n2, n3 = idx
    p_lo = np.arange(max(0, -n1), dims.P - max(0, n1))
    n_lo = np.arange(-dims.N + max(0, -n2), dims.N + 1 - max(0, n2))
    a_lo = np.arange(max(0, -n3), dims.N_r - max(0, n3))
    if p_lo.size == 0 or n_lo.size == 0 or a_lo.size == 0:
        return np.zeros((0, 2), dtype=int), 0.0
    P_, N_, A_ = np.meshgrid(p_lo, n_lo, a_lo, indexing="ij")
    j_from = ((P_ * dims.M + N_ + dims.N) * dims.N_r + A_).ravel()
    flat_step = (n1 * dims.M + n2) * dims.N_r + n3
    j_to = j_from + flat_step
    rhs = 1.0 if (n1, n2, n3) == (0, 0, 0) else 0.0
    return np.column_stack([j_to, j_from]), rhs


# -----------------------------------------------------------------
# Real embedding of Hermitian matrices
# -----------------------------------------------------------------

def hermitian_embed(H: np.ndarray) -> np.ndarray:
    """Realify a Hermitian matrix as [[Re, -Im], [Im, Re]].

    The embedding is symmetric and positive semidefinite exactly when H
    is, with every eigenvalue of H appearing twice.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("hermitian_embed expects a square matrix")
    scale = max(1.0, float(np.abs(H).max()) if H.size else 1.0)
    if np.abs(H - H.conj().T).max(initial=0.0) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian")
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


# -----------------------------------------------------------------
# Conic standard form container
# -----------------------------------------------------------------

@dataclass
class ConicProblem:
    """Real conic standard form with equality constraints.

    Variable vector x = [free variables, svec of each PSD block].  The
    ``offsets`` map records where the dual vector q and the Gram
    copies live inside the free segment so solutions can be unpacked.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    free_dim: int
    psd_dims: list[int]
    offsets: dict = field(default_factory=dict)
    dims: Dims | None = None
    gram_mode: str = "shared"
    toeplitz_count: int = 0
    y: np.ndarray | None = None

    @property
    def n_vars(self) -> int:
        return self.free_dim + sum(svec_len(D) for D in self.psd_dims)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    def block_slices(self):
        """(offset, D) per PSD block in packing order."""
        out = []
        base = self.free_dim
        for D in self.psd_dims:
            out.append((base, D))
            base += svec_len(D)
        return out

    def to_json(self) -> dict:
        A = self.A.tocsr().sorted_indices().tocoo()
        obj = {
            "schema": "conic-v1",
            "objective": self.c.tolist(),
            "rhs": self.b.tolist(),
            "rows": A.row.tolist(),
            "cols": A.col.tolist(),
            "vals": A.data.tolist(),
            "shape": [int(self.A.shape[0]), int(self.A.shape[1])],
            "free_dim": self.free_dim,
            "psd_dims": list(self.psd_dims),
            "offsets": self.offsets,
            "gram_mode": self.gram_mode,
            "toeplitz_count": self.toeplitz_count,
        }
        if self.dims is not None:
            obj["dims"] = self.dims.to_json()
        if self.y is not None:
            obj["y"] = complex_array_to_json(self.y)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ConicProblem":
        A = sp.coo_matrix(
            (np.asarray(obj["vals"], dtype=float),
             (np.asarray(obj["rows"]), np.asarray(obj["cols"]))),
            shape=tuple(obj["shape"])).tocsr()
        return cls(
            c=np.asarray(obj["objective"], dtype=float),
            A=A,
            b=np.asarray(obj["rhs"], dtype=float),
            free_dim=int(obj["free_dim"]),
            psd_dims=[int(D) for D in obj["psd_dims"]],
            offsets={k: v for k, v in obj.get("offsets", {}).items()},
            dims=Dims.from_json(obj["dims"]) if "dims" in obj else None,
            gram_mode=obj.get("gram_mode", "shared"),
            toeplitz_count=int(obj.get("toeplitz_count", 0)),
            y=complex_array_from_json(obj["y"]) if "y" in obj else None,
        )

    def dumps(self) -> str:
        return dumps_canonical(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "ConicProblem":
        return cls.from_json(json.loads(text))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "ConicProblem":
        with open(path) as fh:
            return cls.loads(fh.read())


@dataclass
class DualSolution:
    """Unpacked dual optimum: certificate vector q and Gram copies."""

    q: np.ndarray
    Q_gram: np.ndarray
    objective: float
    status: str
    iterations: int
    residuals: dict
    Q_gram_comms: np.ndarray | None = None

    def summary_json(self) -> dict:
        return {
            "schema": "solution-v1",
            "q": complex_array_to_json(self.q),
            "objective": self.objective,
            "status": self.status,
            "iterations": self.iterations,
            "residuals": self.residuals,
        }


# -----------------------------------------------------------------
# Row emission helpers
# -----------------------------------------------------------------

class _RowBuilder:
    """Accumulates sparse equality rows in coordinate form."""

    def __init__(self):
        self.rows = []
        self.cols = []
        self.vals = []
        self.rhs = []
        self.count = 0

    def emit_batch(self, col_arrays, val_arrays, rhs_vals):
        """Emit len(rhs_vals) rows with one entry per (col, val) pair."""
        n_rows = len(rhs_vals)
        ids = np.arange(self.count, self.count + n_rows)
        for cols, vals in zip(col_arrays, val_arrays):
            self.rows.append(ids)
            self.cols.append(np.broadcast_to(cols, (n_rows,)))
            self.vals.append(np.broadcast_to(vals, (n_rows,)))
        self.rhs.append(np.broadcast_to(rhs_vals, (n_rows,)))
        self.count += n_rows

    def emit_row(self, cols, vals, rhs):
        """Emit a single row with many entries."""
        cols = np.asarray(cols)
        self.rows.append(np.full(cols.shape, self.count))
        self.cols.append(cols)
        self.vals.append(np.broadcast_to(np.asarray(vals, dtype=float), cols.shape))
        self.rhs.append(np.array([rhs]))
        self.count += 1

    def assemble(self, n_vars):
        rows = np.concatenate([np.asarray(r).ravel() for r in self.rows])
        cols = np.concatenate([np.asarray(c).ravel() for c in self.cols])
        vals = np.concatenate([np.asarray(v, dtype=float).ravel() for v in self.vals])
        A = sp.coo_matrix((vals, (rows, cols)), shape=(self.count, n_vars)).tocsr()
        A.eliminate_zeros()
        b = np.concatenate([np.asarray(r, dtype=float).ravel() for r in self.rhs])
        return A, b


def _emit_lmi_pinning(rb: _RowBuilder, J: int, d: int, base: int,
                      gram_off: int, q_off: int, coef: np.ndarray):
    """Pin every entry of one realified LMI block.

    The complex block is [[Q, Z^H], [Z, I]] with Q the J x J Gram part,
    Z the adjoint image whose (k, i) entry is q[i] * conj(coef[i, k]),
    so the top-right entry (i, J+k) equals conj(q[i]) * coef[i, k].
    ``base`` is the packed offset of the block's svec segment and d the
    complex block dimension (embedded real dimension is 2d).
    """
    D = 2 * d

    def sv(i, j):
        return base + svec_index(D, i, j)

    # Gram diagonal: two Re copies plus the zero imaginary corner.
    i = np.arange(J)
    gd = gram_off + herm_diag_index(J, i)
    rb.emit_batch([sv(i, i), gd], [1.0, -1.0], np.zeros(J))
    rb.emit_batch([sv(i + d, i + d), gd], [1.0, -1.0], np.zeros(J))
    rb.emit_batch([sv(i, i + d)], [1.0], np.zeros(J))

    # Gram off-diagonal: 4 rows per complex entry.
    iu, ju = np.triu_indices(J, k=1)
    if iu.size:
        re = gram_off + herm_pair_index(J, iu, ju)
        im = re + 1
        zero = np.zeros(iu.size)
        rb.emit_batch([sv(iu, ju), re], [1.0, -SQRT2], zero)
        rb.emit_batch([sv(iu + d, ju + d), re], [1.0, -SQRT2], zero)
        rb.emit_batch([sv(iu, ju + d), im], [1.0, SQRT2], zero)
        rb.emit_batch([sv(ju, iu + d), im], [1.0, -SQRT2], zero)

    # Identity corner.
    t = np.arange(J, d)
    rb.emit_batch([sv(t, t)], [1.0], np.ones(t.size))
    rb.emit_batch([sv(t + d, t + d)], [1.0], np.ones(t.size))
    rb.emit_batch([sv(t, t + d)], [1.0], np.zeros(t.size))
    ti, tj = np.triu_indices(d - J, k=1)
    if ti.size:
        ti = ti + J
        tj = tj + J
        zero = np.zeros(ti.size)
        rb.emit_batch([sv(ti, tj)], [1.0], zero)
        rb.emit_batch([sv(ti + d, tj + d)], [1.0], zero)
        rb.emit_batch([sv(ti, tj + d)], [1.0], zero)
        rb.emit_batch([sv(tj, ti + d)], [1.0], zero)

    # Adjoint block: entry (i, J+k) = conj(q[i]) * coef[i, k], so
    # Re = tr*qr + ti*qi and Im = ti*qr - tr*qi per entry.
    n_cols = d - J
    ii = np.repeat(np.arange(J), n_cols)
    kk = np.tile(np.arange(n_cols), J)
    jj = J + kk
    tr = coef.real[ii, kk]
    ti_ = coef.imag[ii, kk]
    qr = q_off + ii
    qi = q_off + J + ii    # q packs as [Re q (J), Im q (J)]
    zero = np.zeros(ii.size)
    rb.emit_batch([sv(ii, jj), qr, qi], [1.0, -SQRT2 * tr, -SQRT2 * ti_], zero)
    rb.emit_batch([sv(ii + d, jj + d), qr, qi], [1.0, -SQRT2 * tr, -SQRT2 * ti_], zero)
    rb.emit_batch([sv(ii, jj + d), qr, qi], [1.0, SQRT2 * ti_, -SQRT2 * tr], zero)
    rb.emit_batch([sv(jj, ii + d), qr, qi], [1.0, -SQRT2 * ti_, SQRT2 * tr], zero)


def _emit_toeplitz_rows(rb: _RowBuilder, dims: Dims, gram_off: int,
                        index_set: list[ToeplitzIndex]):
    for idx in index_set:
        pairs, rhs = trace_constraint_row(idx, dims)
        if idx == (0, 0, 0):
            cols = gram_off + herm_diag_index(dims.J, pairs[:, 0])
            rb.emit_row(cols, 1.0, rhs)
        else:
            # pairs are (j, j') with j > j'; packed key is the upper
            # entry (j', j) whose value is conj of the class entry, so
            # the real and imaginary sums vanish together.
            re = gram_off + herm_pair_index(dims.J, pairs[:, 1], pairs[:, 0])
            rb.emit_row(re, 1.0, 0.0)
            rb.emit_row(re + 1, 1.0, 0.0)


# -----------------------------------------------------------------
# Builder
# -----------------------------------------------------------------

def build_dual_sdp(measurement: Measurement, subspaces: Subspaces,
                   gram_mode: str = "shared",
                   max_lmi_dim: int = MAX_LMI_DIM) -> ConicProblem:
    """Assemble the dual SDP in exported real conic standard form.

    Parameters
    ----------
    measurement : Measurement
        The overlaid snapshot y with its dims.
    subspaces : Subspaces
        Known representation subspaces (T, D).
    gram_mode : str
        "shared" ties both bounded-real LMIs to one Gram matrix;
        "split" gives each LMI its own copy with its own trace rows.
    """
    if gram_mode not in ("shared", "split"):
        raise ValueError(f"unknown gram_mode {gram_mode!r}")
    dims = measurement.dims
    J, K, PK = dims.J, dims.K, dims.P * dims.K
    if subspaces.T.shape != (dims.M, K):
        raise ValueError("subspace T shape does not match dims")
    if subspaces.D.shape != (dims.M * dims.P, PK):
        raise ValueError("subspace D shape does not match dims")
    d1, d2 = J + K, J + PK
    if max(d1, d2) > max_lmi_dim:
        raise ValueError(
            f"LMI blocks of complex dimension {d1} and {d2} exceed the cap "
            f"{max_lmi_dim}; this problem size is beyond the intended desk "
            "scale (reduce J = N_r*M*P or raise max_lmi_dim explicitly)")

    n_gram = 1 if gram_mode == "shared" else 2
    off_q = 0
    gram_offs = [2 * J + g * herm_len(J) for g in range(n_gram)]
    free_dim = 2 * J + n_gram * herm_len(J)
    psd_dims = [2 * d1, 2 * d2]
    base1 = free_dim
    base2 = free_dim + svec_len(2 * d1)
    n_vars = base2 + svec_len(2 * d2)

    t_rows, d_rows = _subspace_rows(subspaces, dims)

    rb = _RowBuilder()
    gram_for_comms = gram_offs[0] if gram_mode == "shared" else gram_offs[1]
    _emit_lmi_pinning(rb, J, d1, base1, gram_offs[0], off_q, t_rows)
    _emit_lmi_pinning(rb, J, d2, base2, gram_for_comms, off_q, d_rows)

    index_set = toeplitz_constraint_set(dims)
    for gram_off in gram_offs:
        _emit_toeplitz_rows(rb, dims, gram_off, index_set)

    A, b = rb.assemble(n_vars)

    # maximize Re<q, y> == minimize -(Re y . Re q + Im y . Im q)
    c = np.zeros(n_vars)
    c[off_q:off_q + J] = -measurement.y.real
    c[off_q + J:off_q + 2 * J] = -measurement.y.imag

    offsets = {"q": off_q, "gram": gram_offs, "blocks": [base1, base2]}
    return ConicProblem(c=c, A=A, b=b, free_dim=free_dim, psd_dims=psd_dims,
                        offsets=offsets, dims=dims, gram_mode=gram_mode,
                        toeplitz_count=len(index_set), y=measurement.y.copy())


# -----------------------------------------------------------------
# Solution extraction and structural helpers
# -----------------------------------------------------------------

def structural_feasible_point(problem: ConicProblem) -> np.ndarray:
    """Strictly feasible packed point: q = 0, Gram = I/J, identity corners."""
    dims = problem.dims
    J = dims.J
    x = np.zeros(problem.n_vars)
    for gram_off in problem.offsets["gram"]:
        x[gram_off:gram_off + J] = 1.0 / J
    for (base, D) in problem.block_slices():
        d = D // 2
        H = np.eye(d, dtype=complex)
        H[:J, :J] *= 1.0 / J
        x[base:base + svec_len(D)] = svec(hermitian_embed(H))
    return x


def extract_dual_solution(problem: ConicProblem, raw) -> DualSolution:
    """Unpack a solver result into the complex dual variables."""
    dims = problem.dims
    J = dims.J
    x = np.asarray(raw.primal, dtype=float)
    off_q = problem.offsets["q"]
    q = x[off_q:off_q + J] + 1j * x[off_q + J:off_q + 2 * J]

    grams = []
    for gram_off in problem.offsets["gram"]:
        H = herm_unpack(x[gram_off:gram_off + herm_len(J)], J)
        grams.append(0.5 * (H + H.conj().T))
    objective = float(-problem.c @ x)
    return DualSolution(
        q=q,
        Q_gram=grams[0],
        objective=objective,
        status=raw.status,
        iterations=raw.iterations,
        residuals=dict(raw.residuals),
        Q_gram_comms=grams[1] if len(grams) > 1 else None,
    )
