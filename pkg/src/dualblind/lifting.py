"""Lifted linear model for the overlaid measurements.

The bilinear unknowns (signal coefficients times channel) are lifted to
the rank-one matrices

    X_r = v h_r^H   (K x J),      X_c = u h_c^H   (PK x J),

where h_r, h_c are the sparse channel vectors built from the atoms.  The
measurement is linear in the lifted pair:

    y[j] = t_n^H X_r e_j + d_m^H X_c e_j,

with t_n^H the row n+N of T and d_m^H the row m of D, so the forward map
and its adjoints never materialize any per-entry selector matrices.
Adjoint conjugation is fixed by the real pairing
Re<q, B(X)> = Re<B*(q), X> with <A, B> = trace(A^H B).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._json import complex_array_from_json, complex_array_to_json, dumps_canonical
from .scene import Dims, Scene, Subspaces, atom_vector


@dataclass
class LiftedPair:
    """The pair of lifted rank-one matrices for a scene."""

    X_r: np.ndarray    # K x J
    X_c: np.ndarray    # PK x J

    def __post_init__(self):
        self.X_r = np.asarray(self.X_r, dtype=complex)
        self.X_c = np.asarray(self.X_c, dtype=complex)


@dataclass
class Measurement:
    """One overlaid snapshot y of length J, with its scene dims."""

    y: np.ndarray
    dims: Dims

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=complex).reshape(-1)
        if self.y.shape[0] != self.dims.J:
            raise ValueError("measurement length must equal J")

    def to_json(self) -> dict:
        return {"schema": "measurement-v1",
                "dims": self.dims.to_json(),
                "y": complex_array_to_json(self.y)}

    @classmethod
    def from_json(cls, obj: dict) -> "Measurement":
        return cls(y=complex_array_from_json(obj["y"]), dims=Dims.from_json(obj["dims"]))

    def dumps(self) -> str:
        return dumps_canonical(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Measurement":
        return cls.from_json(json.loads(text))


# -----------------------------------------------------------------
# Channel vectors and lifting
# -----------------------------------------------------------------

def channel_vector(triples, amps, dims: Dims) -> np.ndarray:
    """Sparse channel h = sum_k amps[k] * atom_vector(triples[k])."""
    triples = np.atleast_2d(np.asarray(triples, dtype=float))
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    h = np.zeros(dims.J, dtype=complex)
    for r, amp in zip(triples, amps):
        h += amp * atom_vector(r, dims)
    return h


def lift(scene: Scene) -> LiftedPair:
    """Lift a scene to its rank-one matrix pair (X_r, X_c)."""
    h_r = channel_vector(scene.radar.triples, scene.radar.amps, scene.dims)
    h_c = channel_vector(scene.comms.triples, scene.comms.amps, scene.dims)
    return LiftedPair(X_r=np.outer(scene.v, h_r.conj()),
                      X_c=np.outer(scene.u, h_c.conj()))


def _subspace_rows(subspaces: Subspaces, dims: Dims):
    """Rows of T and D aligned with the flat measurement index j."""
    n, _, _, m = dims.index_arrays()
    return subspaces.T[n + dims.N, :], subspaces.D[m, :]


# -----------------------------------------------------------------
# Forward map and adjoints
# -----------------------------------------------------------------

def apply_forward(pair: LiftedPair, subspaces: Subspaces, dims: Dims) -> np.ndarray:
    """Forward map y[j] = t_n^H X_r e_j + d_m^H X_c e_j."""
    t_rows, d_rows = _subspace_rows(subspaces, dims)
    y = np.einsum("jk,kj->j", t_rows, pair.X_r)
    y += np.einsum("jk,kj->j", d_rows, pair.X_c)
    return y


def adjoint_radar(q: np.ndarray, subspaces: Subspaces, dims: Dims) -> np.ndarray:
    """Adjoint of the radar part; column j equals q[j] * conj(t-row j).

    Satisfies Re<q, B_r(X)> = Re<adjoint_radar(q), X> exactly.
    """
    q = np.asarray(q, dtype=complex).reshape(-1)
    t_rows, _ = _subspace_rows(subspaces, dims)
    return (t_rows.conj() * q[:, None]).T


def adjoint_comms(q: np.ndarray, subspaces: Subspaces, dims: Dims) -> np.ndarray:
    """Adjoint of the comms part; column j is supported on pulse block p(j)."""
    q = np.asarray(q, dtype=complex).reshape(-1)
    _, d_rows = _subspace_rows(subspaces, dims)
    return (d_rows.conj() * q[:, None]).T


# -----------------------------------------------------------------
# Synthesis
# -----------------------------------------------------------------

def synthesize_measurements(scene: Scene, subspaces: Subspaces) -> Measurement:
    """Noiseless overlaid snapshot for a scene, summed target by target.

    Computes y[j] = sum_l conj(amps_r[l]) conj(w(r_l)[j]) (t_n^H v)
                  + sum_q conj(amps_c[q]) conj(w(c_q)[j]) (d_m^H u)
    directly from the atoms, which agrees with apply_forward(lift(scene))
    by construction of the lifted model.
    """
    dims = scene.dims
    t_rows, d_rows = _subspace_rows(subspaces, dims)
    s = t_rows @ scene.v     # radar signal sample per entry j
    g = d_rows @ scene.u     # comms signal sample per entry j

    y = np.zeros(dims.J, dtype=complex)
    for r, amp in zip(scene.radar.triples, scene.radar.amps):
        y += np.conj(amp) * np.conj(atom_vector(r, dims)) * s
    for c, amp in zip(scene.comms.triples, scene.comms.amps):
        y += np.conj(amp) * np.conj(atom_vector(c, dims)) * g
    return Measurement(y=y, dims=dims)
