"""Packing conventions shared by the SDP builder and the conic solver.

Real symmetric cone blocks use the isometric upper-triangle packing
(off-diagonal entries carry sqrt(2)) so Euclidean projections in packed
coordinates equal Frobenius projections on matrices.  Hermitian free
variables are packed as [diagonal (d reals), then (Re, Im) per upper
pair in row-major order], d*d reals total.
"""

from __future__ import annotations

import numpy as np

SQRT2 = np.sqrt(2.0)


# -----------------------------------------------------------------
# Symmetric (svec) packing
# -----------------------------------------------------------------

def svec_len(D: int) -> int:
    return D * (D + 1) // 2


def svec_index(D: int, i, j):
    """Packed position of entry (i, j), i <= j, in row-major upper order."""
    i = np.asarray(i)
    j = np.asarray(j)
    return i * D - i * (i - 1) // 2 + (j - i)


def svec(S: np.ndarray) -> np.ndarray:
    D = S.shape[0]
    iu, ju = np.triu_indices(D)
    out = np.asarray(S, dtype=float)[iu, ju].copy()
    out[iu != ju] *= SQRT2
    return out


def unsvec(x: np.ndarray, D: int) -> np.ndarray:
    iu, ju = np.triu_indices(D)
    vals = np.asarray(x, dtype=float).copy()
    vals[iu != ju] /= SQRT2
    S = np.zeros((D, D))
    S[iu, ju] = vals
    S[ju, iu] = vals
    return S


# -----------------------------------------------------------------
# Hermitian free-variable packing
# -----------------------------------------------------------------

def herm_len(d: int) -> int:
    return d * d


def herm_diag_index(d: int, i):
    return np.asarray(i)


def herm_pair_index(d: int, i, j):
    """Index of the (Re, Im) pair for entry (i, j), i < j; Re part."""
    i = np.asarray(i)
    j = np.asarray(j)
    return d + 2 * (i * d - i * (i + 1) // 2 + (j - i - 1))


def herm_pack(H: np.ndarray) -> np.ndarray:
    d = H.shape[0]
    out = np.zeros(d * d)
    out[:d] = np.diag(H).real
    iu, ju = np.triu_indices(d, k=1)
    base = herm_pair_index(d, iu, ju)
    out[base] = H[iu, ju].real
    out[base + 1] = H[iu, ju].imag
    return out


def herm_unpack(x: np.ndarray, d: int) -> np.ndarray:
    H = np.zeros((d, d), dtype=complex)
    H[np.arange(d), np.arange(d)] = x[:d]
    iu, ju = np.triu_indices(d, k=1)
    base = herm_pair_index(d, iu, ju)
    vals = x[base] + 1j * x[base + 1]
    H[iu, ju] = vals
    H[ju, iu] = vals.conj()
    return H
