"""Parameter recovery from a solved dual vector.

The dual vector q of the semidefinite program induces two vector-valued
trigonometric polynomials, one per channel,

    f_r(r) = B_r*(q) w(r)   in C^K,
    f_c(c) = B_c*(q) w(c)   in C^{PK},

where B*(q) are the adjoint matrices from the lifting module and w(.) is
the atom vector.  Dual feasibility bounds ||f||_2 by one everywhere, and
at an optimal point ||f|| touches one exactly on the true support, so
targets and paths are localized by peak-picking ||f|| and the signal
coefficients then follow from an overdetermined least-squares solve on
the identified atoms.

Localization is coarse-to-fine: an alias-free FFT evaluation on a grid of
a few times the bandwidth per axis, 26-neighborhood peak extraction, then
gradient ascent on ||f||^2 with the analytic gradient.  A dense uniform
grid at the final resolution would be billions of points in 3-D, which is
why the refinement stage exists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ._json import (
    complex_array_from_json,
    complex_array_to_json,
    dumps_canonical,
    real_array_from_json,
    real_array_to_json,
)
from .lifting import Measurement, adjoint_comms, adjoint_radar
from .scene import TWO_PI, Dims, ParamTriple, Scene, Subspaces, atom_vector, wrap_distance

# Coarse evaluation grid, as a multiple of the per-axis bandwidth.
GRID_OVERSAMPLE = 4

# Peak extraction defaults.
PEAK_FLOOR = 0.5
THRESHOLD_EPS = 1e-2

# Refinement loop limits.
REFINE_MAX_ITERS = 200
REFINE_MIN_STEP = 1e-10
# Relative gradient norm below which a point counts as stationary; this
# keeps an exactly-seeded maximum from wandering on rounding noise.
REFINE_GRAD_TOL = 1e-12


# -----------------------------------------------------------------
# Dual polynomial evaluation
# -----------------------------------------------------------------

def _dual_coefficients(q, subspaces: Subspaces, dims: Dims, which: str) -> np.ndarray:
    """Coefficient matrix C with f(r) = C @ w(r); rows are output coords."""
    if which == "radar":
        return adjoint_radar(q, subspaces, dims)
    if which == "comms":
        return adjoint_comms(q, subspaces, dims)
    raise ValueError(f"polynomial selector must be 'radar' or 'comms', got {which!r}")


def eval_dual_at(q, subspaces: Subspaces, dims: Dims, which: str, triples) -> np.ndarray:
    """Direct evaluation of the dual polynomial at arbitrary points.

    Returns an (R, K) or (R, PK) complex array, one row per triple.  This
    is the reference implementation the FFT grid evaluation must match;
    it costs O(J) per output coordinate and point, so use it for spot
    checks and refinement only.
    """
    C = _dual_coefficients(q, subspaces, dims, which)
    triples = np.atleast_2d(np.asarray(triples, dtype=float))
    n, p, a, _ = dims.index_arrays()
    phases = (np.outer(n, triples[:, 0])
              + np.outer(p, triples[:, 1])
              + np.outer(a, triples[:, 2]))
    return (C @ np.exp(-1j * TWO_PI * phases)).T


def _value_and_grad(C: np.ndarray, index_arrays, r: np.ndarray):
    """Value and gradient of g(r) = ||f(r)||_2^2 at a single point.

    The polynomial is f(r) = C @ e(r) with e_j = exp(-i 2 pi (n_j tau +
    p_j nu + a_j beta)), so each partial derivative just multiplies e by
    the corresponding frequency, and grad g = 2 Re(f^H df).
    """
    n, p, a = index_arrays
    e = np.exp(-1j * TWO_PI * (n * r[0] + p * r[1] + a * r[2]))
    f = C @ e
    g = float(np.real(np.vdot(f, f)))
    grad = np.empty(3)
    for d, freq in enumerate((n, p, a)):
        df = C @ (-1j * TWO_PI * freq * e)
        grad[d] = 2.0 * np.real(np.vdot(f, df))
    return g, grad


@dataclass
class PolyField:
    """Magnitude ||f(.)||_2 of one dual polynomial on a regular torus grid.

    ``values`` has shape (F_nu, F_tau, F_beta), axes ordered Doppler x
    delay x DoA, with grid point (i, j, k) at nu = i/F_nu, tau = j/F_tau,
    beta = k/F_beta.  Grid sizes must be at least twice the bandwidth
    (P, M, N_r) per axis so the trigonometric polynomial is represented
    alias-free.
    """

    values: np.ndarray
    dims: Dims
    which: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise ValueError("field values must be a 3-D grid")
        if self.values.size and self.values.min() < 0.0:
            raise ValueError("field values are norms and must be >= 0")
        if self.which not in ("radar", "comms"):
            raise ValueError(f"polynomial selector must be 'radar' or 'comms', got {self.which!r}")
        _check_grid_sizes(self.values.shape, self.dims)

    @property
    def grid_sizes(self) -> tuple:
        return self.values.shape

    def triple_at(self, i_nu: int, i_tau: int, i_beta: int) -> ParamTriple:
        """Parameter triple of grid node (i_nu, i_tau, i_beta)."""
        F_nu, F_tau, F_beta = self.values.shape
        return ParamTriple(tau=(i_tau % F_tau) / F_tau,
                           nu=(i_nu % F_nu) / F_nu,
                           beta=(i_beta % F_beta) / F_beta)


def _check_grid_sizes(grid_sizes, dims: Dims):
    needed = (2 * dims.P, 2 * dims.M, 2 * dims.N_r)
    if len(grid_sizes) != 3:
        raise ValueError("grid sizes must be a (Doppler, delay, DoA) triple")
    if any(int(g) < need for g, need in zip(grid_sizes, needed)):
        raise ValueError(
            f"grid {tuple(grid_sizes)} is too small and would alias; "
            f"need at least {needed} for dims (P={dims.P}, M={dims.M}, N_r={dims.N_r})")


def default_grid_sizes(dims: Dims) -> tuple:
    """Coarse alias-free grid, GRID_OVERSAMPLE x bandwidth per axis."""
    return (GRID_OVERSAMPLE * dims.P, GRID_OVERSAMPLE * dims.M, GRID_OVERSAMPLE * dims.N_r)


def eval_dual_poly(q, subspaces: Subspaces, dims: Dims, which: str,
                   grid_sizes=None) -> PolyField:
    """Evaluate ||f|| on a regular grid with zero-padded 3-D FFTs.

    Each output coordinate of f is a trigonometric polynomial whose
    coefficient tensor lives on the (pulse, frequency, antenna) index
    box; scattering it into a zero (F_nu, F_tau, F_beta) array and
    taking numpy's forward FFT evaluates the coordinate at every grid
    node at once (the FFT kernel exp(-i 2 pi m i / F) matches the atom
    convention, with negative frequencies wrapped).

    Parameters
    ----------
    grid_sizes : (F_nu, F_tau, F_beta) or None
        Defaults to :func:`default_grid_sizes`.  Each size must be at
        least twice the corresponding bandwidth, else ValueError.
    """
    if grid_sizes is None:
        grid_sizes = default_grid_sizes(dims)
    _check_grid_sizes(grid_sizes, dims)
    F_nu, F_tau, F_beta = (int(g) for g in grid_sizes)

    C = _dual_coefficients(q, subspaces, dims, which)
    n, p, a, _ = dims.index_arrays()
    padded = np.zeros((C.shape[0], F_nu, F_tau, F_beta), dtype=complex)
    padded[:, p, n % F_tau, a] = C
    spectrum = np.fft.fftn(padded, axes=(1, 2, 3))
    values = np.linalg.norm(spectrum, axis=0)
    return PolyField(values=values, dims=dims, which=which)


# -----------------------------------------------------------------
# Peak extraction
# -----------------------------------------------------------------

_NEIGHBOR_OFFSETS = [(di, dj, dk)
                     for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
                     if (di, dj, dk) != (0, 0, 0)]


def find_peaks(field: PolyField, order, floor: float = PEAK_FLOOR) -> list:
    """Largest local maxima of the field, as grid-resolution triples.

    A grid node is a local maximum when its value is >= all 26 neighbors
    on the wrapped grid.  The comparison is deliberately non-strict so
    that flat directions (a single-antenna array makes the field constant
    in beta, for instance) still produce maxima; exactly-equal plateaus
    that touch are then merged and represented by their lexicographically
    smallest grid index.  Peaks are sorted by value descending, ties by
    grid index, and the first ``order`` are returned.

    Pass ``order=None`` to get every maximum with value >= floor instead
    of a fixed count; with ``floor = 1 - eps`` this is the thresholding
    mode for unknown model order.

    Raises
    ------
    ValueError
        If fewer than ``order`` maxima reach the floor, which usually
        means the solve did not certify and recovery failed.
    """
    if order is not None and order < 1:
        raise ValueError("peak order must be >= 1")
    vals = field.values
    shape = vals.shape

    neighbor_max = np.full(shape, -np.inf)
    for off in _NEIGHBOR_OFFSETS:
        neighbor_max = np.maximum(neighbor_max, np.roll(vals, off, axis=(0, 1, 2)))
    candidate = (vals >= neighbor_max) & (vals >= floor)

    # Merge touching plateaus of exactly equal value; scanning candidates
    # in lexicographic order makes the first index seen per component its
    # representative.
    cand_set = {tuple(idx) for idx in np.argwhere(candidate)}
    peaks = []
    seen = set()
    for idx in sorted(cand_set):
        if idx in seen:
            continue
        level = vals[idx]
        stack = [idx]
        seen.add(idx)
        while stack:
            cur = stack.pop()
            for off in _NEIGHBOR_OFFSETS:
                nxt = tuple((c + o) % s for c, o, s in zip(cur, off, shape))
                if nxt in cand_set and nxt not in seen and vals[nxt] == level:
                    seen.add(nxt)
                    stack.append(nxt)
        peaks.append((level, idx))

    peaks.sort(key=lambda pk: (-pk[0], pk[1]))
    if order is not None and len(peaks) < order:
        raise ValueError(
            f"found {len(peaks)} local maxima above floor {floor}, need {order}; "
            "the dual polynomial does not certify this many atoms")
    if order is not None:
        peaks = peaks[:order]
    return [field.triple_at(*idx) for _, idx in peaks]


# -----------------------------------------------------------------
# Refinement
# -----------------------------------------------------------------

def refine_peak(q, subspaces: Subspaces, dims: Dims, which: str, seed) -> ParamTriple:
    """Sharpen one grid-resolution peak by gradient ascent on ||f||^2.

    Backtracking line search along the normalized gradient, on the torus;
    only improving steps are accepted, so the value at the result is
    never below the value at the seed, and the seed itself is returned
    when no improving step exists (an exact stationary maximum).  Stops
    when the step length falls below REFINE_MIN_STEP or after
    REFINE_MAX_ITERS accepted steps.
    """
    C = _dual_coefficients(q, subspaces, dims, which)
    n, p, a, _ = dims.index_arrays()
    idx = (n, p, a)

    r = np.mod(np.asarray(seed, dtype=float).reshape(3), 1.0)
    g, grad = _value_and_grad(C, idx, r)
    step_cap = 0.25 / max(dims.M, dims.P, dims.N_r)
    step = step_cap
    for _ in range(REFINE_MAX_ITERS):
        gn = np.linalg.norm(grad)
        if gn <= REFINE_GRAD_TOL * max(1.0, g):
            break
        direction = grad / gn
        while step >= REFINE_MIN_STEP:
            cand = np.mod(r + step * direction, 1.0)
            g_cand, grad_cand = _value_and_grad(C, idx, cand)
            if g_cand > g:
                break
            step *= 0.5
        if step < REFINE_MIN_STEP:
            break
        r, g, grad = cand, g_cand, grad_cand
        step = min(2.0 * step, step_cap)
    return ParamTriple(*r)


# -----------------------------------------------------------------
# Least-squares coefficient recovery
# -----------------------------------------------------------------

def build_ls_system(radar_triples, comms_triples, subspaces: Subspaces,
                    dims: Dims) -> np.ndarray:
    """System matrix W mapping stacked coefficient blocks to measurements.

    Column block l of the radar part is conj(w(r_l)[j]) times row n+N of
    T at row j; comms blocks use row m of D.  By construction W @ z with
    z the blocks conj(amp_l) v and conj(amp_q) u reproduces the forward
    model exactly, which is the property the tests pin down.
    """
    radar_triples = np.asarray(radar_triples, dtype=float).reshape(-1, 3)
    comms_triples = np.asarray(comms_triples, dtype=float).reshape(-1, 3)
    if radar_triples.shape[0] + comms_triples.shape[0] == 0:
        raise ValueError("at least one atom is required to build the system")

    n, _, _, m = dims.index_arrays()
    t_rows = subspaces.T[n + dims.N, :]
    d_rows = subspaces.D[m, :]

    cols = []
    for r in radar_triples:
        cols.append(np.conj(atom_vector(r, dims))[:, None] * t_rows)
    for c in comms_triples:
        cols.append(np.conj(atom_vector(c, dims))[:, None] * d_rows)
    return np.hstack(cols)


def recover_coefficients(W: np.ndarray, y, radar_triples, comms_triples,
                         dims: Dims, cond_limit: float = 1e10):
    """Least-squares coefficient blocks and reconstructed lifted matrices.

    Solves min ||W z - y||_2 through the SVD (rank revealing), then
    reassembles Xr_hat = sum_l z_l w(r_l)^H and Xc_hat likewise, the
    quantities the error metrics are defined on.

    Returns
    -------
    (z, Xr_hat, Xc_hat, diag) with diag a dict holding the residual
    norm, the condition number of W and its numerical rank.

    Raises
    ------
    ValueError
        When W is rank deficient beyond ``cond_limit``, which signals
        duplicated peaks or a violated separation condition.
    """
    y = np.asarray(y, dtype=complex).reshape(-1)
    radar_triples = np.asarray(radar_triples, dtype=float).reshape(-1, 3)
    comms_triples = np.asarray(comms_triples, dtype=float).reshape(-1, 3)
    if W.shape[0] < W.shape[1]:
        raise ValueError("least-squares system must not be underdetermined")

    z, _, rank, svals = np.linalg.lstsq(W, y, rcond=None)
    cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else np.inf
    if rank < W.shape[1] or cond > cond_limit:
        raise ValueError(
            f"system matrix is rank deficient (rank {rank} of {W.shape[1]}, "
            f"condition {cond:.3e}); peaks may be duplicated or too close")

    L = radar_triples.shape[0]
    K = dims.K
    PK = dims.P * dims.K
    Xr_hat = np.zeros((K, dims.J), dtype=complex)
    for l, r in enumerate(radar_triples):
        Xr_hat += np.outer(z[l * K:(l + 1) * K], np.conj(atom_vector(r, dims)))
    Xc_hat = np.zeros((PK, dims.J), dtype=complex)
    for i, c in enumerate(comms_triples):
        block = z[L * K + i * PK:L * K + (i + 1) * PK]
        Xc_hat += np.outer(block, np.conj(atom_vector(c, dims)))

    residual = float(np.linalg.norm(W @ z - y))
    diag = {"residual": residual, "cond": cond, "rank": int(rank)}
    return z, Xr_hat, Xc_hat, diag


# -----------------------------------------------------------------
# End-to-end recovery pipeline
# -----------------------------------------------------------------

@dataclass
class RecoveryResult:
    """Everything recovered from one solved instance.

    ``z`` stacks L radar blocks of length K, then Q_c comms blocks of
    length PK.  The reconstructed lifted matrices satisfy
    Xr_hat = sum_l z_l w(r_l)^H exactly by construction, so they are
    rebuilt rather than stored when loading from JSON.  ``metrics`` is
    filled in by :func:`error_metrics` when ground truth is available.
    """

    dims: Dims
    radar_triples: list
    comms_triples: list
    z: np.ndarray
    Xr_hat: np.ndarray
    Xc_hat: np.ndarray
    residual: float
    cond_W: float
    metrics: "ErrorMetrics | None" = None

    def __post_init__(self):
        self.radar_triples = [ParamTriple(*t) for t in self.radar_triples]
        self.comms_triples = [ParamTriple(*t) for t in self.comms_triples]
        self.z = np.asarray(self.z, dtype=complex).reshape(-1)
        want = len(self.radar_triples) * self.dims.K \
            + len(self.comms_triples) * self.dims.P * self.dims.K
        if self.z.shape[0] != want:
            raise ValueError("coefficient vector length does not match the blocks")

    @property
    def z_radar(self) -> np.ndarray:
        """Radar coefficient blocks as an (L, K) array."""
        L = len(self.radar_triples)
        return self.z[:L * self.dims.K].reshape(L, self.dims.K)

    @property
    def z_comms(self) -> np.ndarray:
        """Comms coefficient blocks as a (Q_c, PK) array."""
        L = len(self.radar_triples)
        Q = len(self.comms_triples)
        return self.z[L * self.dims.K:].reshape(Q, self.dims.P * self.dims.K)

    def to_json(self) -> dict:
        out = {
            "schema": "recovery-v1",
            "dims": self.dims.to_json(),
            "radar_triples": real_array_to_json(np.asarray(self.radar_triples, dtype=float)),
            "comms_triples": real_array_to_json(np.asarray(self.comms_triples, dtype=float)),
            "z": complex_array_to_json(self.z),
            "residual": self.residual,
            "cond_W": self.cond_W,
            "metrics": self.metrics.to_json() if self.metrics is not None else None,
        }
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "RecoveryResult":
        dims = Dims.from_json(obj["dims"])
        radar = real_array_from_json(obj["radar_triples"]).reshape(-1, 3)
        comms = real_array_from_json(obj["comms_triples"]).reshape(-1, 3)
        z = complex_array_from_json(obj["z"])
        K, PK = dims.K, dims.P * dims.K
        Xr = np.zeros((K, dims.J), dtype=complex)
        for l, r in enumerate(radar):
            Xr += np.outer(z[l * K:(l + 1) * K], np.conj(atom_vector(r, dims)))
        Xc = np.zeros((PK, dims.J), dtype=complex)
        base = radar.shape[0] * K
        for i, c in enumerate(comms):
            Xc += np.outer(z[base + i * PK:base + (i + 1) * PK], np.conj(atom_vector(c, dims)))
        metrics = obj.get("metrics")
        return cls(dims=dims, radar_triples=radar, comms_triples=comms, z=z,
                   Xr_hat=Xr, Xc_hat=Xc, residual=float(obj["residual"]),
                   cond_W=float(obj["cond_W"]),
                   metrics=ErrorMetrics.from_json(metrics) if metrics else None)

    def dumps(self) -> str:
        return dumps_canonical(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "RecoveryResult":
        return cls.from_json(json.loads(text))


def recover_channels(q, measurement: Measurement, subspaces: Subspaces,
                     grid_sizes=None, refine: bool = True,
                     floor: float = PEAK_FLOOR) -> RecoveryResult:
    """Full localization and coefficient recovery for one solved dual.

    Peaks are extracted per channel with the model orders L and Q_c taken
    from the dims (known model order, the default regime), refined unless
    ``refine`` is off, and the coefficients recovered in one joint
    least-squares solve.
    """
    dims = measurement.dims
    radar_triples, comms_triples = [], []
    if dims.L > 0:
        fld = eval_dual_poly(q, subspaces, dims, "radar", grid_sizes)
        radar_triples = find_peaks(fld, order=dims.L, floor=floor)
        if refine:
            radar_triples = [refine_peak(q, subspaces, dims, "radar", t)
                             for t in radar_triples]
    if dims.Q_c > 0:
        fld = eval_dual_poly(q, subspaces, dims, "comms", grid_sizes)
        comms_triples = find_peaks(fld, order=dims.Q_c, floor=floor)
        if refine:
            comms_triples = [refine_peak(q, subspaces, dims, "comms", t)
                             for t in comms_triples]

    W = build_ls_system(radar_triples, comms_triples, subspaces, dims)
    z, Xr_hat, Xc_hat, diag = recover_coefficients(
        W, measurement.y, radar_triples, comms_triples, dims)
    return RecoveryResult(dims=dims, radar_triples=radar_triples,
                          comms_triples=comms_triples, z=z,
                          Xr_hat=Xr_hat, Xc_hat=Xc_hat,
                          residual=diag["residual"], cond_W=diag["cond"])


# -----------------------------------------------------------------
# Certificate verification
# -----------------------------------------------------------------

@dataclass
class ChannelCertificate:
    """Certificate diagnostics for one channel's dual polynomial."""

    which: str
    on_support_norms: np.ndarray
    on_support_dev: float
    proportionality_dev: float
    off_support_max: float
    grid_max: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "which": self.which,
            "on_support_norms": real_array_to_json(self.on_support_norms),
            "on_support_dev": self.on_support_dev,
            "proportionality_dev": self.proportionality_dev,
            "off_support_max": self.off_support_max,
            "grid_max": self.grid_max,
            "ok": self.ok,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelCertificate":
        return cls(which=obj["which"],
                   on_support_norms=real_array_from_json(obj["on_support_norms"]),
                   on_support_dev=float(obj["on_support_dev"]),
                   proportionality_dev=float(obj["proportionality_dev"]),
                   off_support_max=float(obj["off_support_max"]),
                   grid_max=float(obj["grid_max"]),
                   ok=bool(obj["ok"]))


@dataclass
class CertificateReport:
    """Joint certificate report for both channels."""

    radar: ChannelCertificate
    comms: ChannelCertificate
    tol: float

    @property
    def ok(self) -> bool:
        return self.radar.ok and self.comms.ok

    def to_json(self) -> dict:
        return {"schema": "certificate-v1", "tol": self.tol, "ok": self.ok,
                "radar": self.radar.to_json(), "comms": self.comms.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "CertificateReport":
        return cls(radar=ChannelCertificate.from_json(obj["radar"]),
                   comms=ChannelCertificate.from_json(obj["comms"]),
                   tol=float(obj["tol"]))


def _channel_certificate(q, subspaces, dims, which, triples, tol,
                         grid_sizes) -> ChannelCertificate:
    fld = eval_dual_poly(q, subspaces, dims, which, grid_sizes)
    grid_max = float(fld.values.max())

    triples = np.asarray(triples, dtype=float).reshape(-1, 3)
    if triples.shape[0]:
        f_on = eval_dual_at(q, subspaces, dims, which, triples)
        norms = np.linalg.norm(f_on, axis=1)
        on_dev = float(np.max(np.abs(norms - 1.0)))
    else:
        f_on = np.zeros((0, 1), dtype=complex)
        norms = np.zeros(0)
        on_dev = 0.0

    # At an optimum every on-support value is proportional to the same
    # coefficient vector with a unit-modulus factor; the modulus part is
    # the on-support norm check, so what remains assertable under the
    # global scaling ambiguity is pairwise collinearity.
    prop_dev = 0.0
    for i in range(f_on.shape[0]):
        for k in range(i + 1, f_on.shape[0]):
            denom = norms[i] * norms[k]
            if denom < 1e-12:
                prop_dev = max(prop_dev, 1.0)
                continue
            cosine = abs(np.vdot(f_on[i], f_on[k])) / denom
            prop_dev = max(prop_dev, float(1.0 - cosine))

    # Grid maximum away from the support, excluding a small torus ball
    # around every atom.
    radius = 0.5 / max(dims.M, dims.P, dims.N_r)
    F_nu, F_tau, F_beta = fld.values.shape
    nu_g = np.arange(F_nu) / F_nu
    tau_g = np.arange(F_tau) / F_tau
    beta_g = np.arange(F_beta) / F_beta
    near = np.zeros(fld.values.shape, dtype=bool)
    for t in triples:
        near |= ((wrap_distance(nu_g, t[1]) <= radius)[:, None, None]
                 & (wrap_distance(tau_g, t[0]) <= radius)[None, :, None]
                 & (wrap_distance(beta_g, t[2]) <= radius)[None, None, :])
    off_max = float(fld.values[~near].max()) if (~near).any() else 0.0

    ok = bool(on_dev <= tol and off_max <= 1.0 + tol and prop_dev <= tol)
    return ChannelCertificate(which=which, on_support_norms=norms,
                              on_support_dev=on_dev, proportionality_dev=prop_dev,
                              off_support_max=off_max, grid_max=grid_max, ok=ok)


def verify_certificate(q, scene: Scene, subspaces: Subspaces, tol: float = 1e-2,
                       grid_sizes=None) -> CertificateReport:
    """Check the dual optimality conditions against a known scene.

    The report carries, per channel: the norms ||f|| at the true atoms
    and their worst deviation from one, the worst pairwise collinearity
    defect between on-support values (their literal target is fixed only
    up to the blind scaling ambiguity), and the grid maximum of ||f||
    outside torus balls of radius 0.5/max(M, P, N_r) around the atoms.
    Purely diagnostic: a hopeless q (all zeros, say) reports deviation
    one instead of raising.
    """
    dims = scene.dims
    radar = _channel_certificate(q, subspaces, dims, "radar",
                                 scene.radar.triples, tol, grid_sizes)
    comms = _channel_certificate(q, subspaces, dims, "comms",
                                 scene.comms.triples, tol, grid_sizes)
    return CertificateReport(radar=radar, comms=comms, tol=tol)


# -----------------------------------------------------------------
# Error metrics
# -----------------------------------------------------------------

@dataclass
class ChannelErrors:
    """Matched parameter errors for one channel.

    ``per_atom`` holds one row per matched pair (wrap-around error in
    tau, nu, beta); unmatched atoms on either side are padded in at the
    worst-case wrap distance 0.5 and counted in ``unmatched``.
    """

    per_atom: np.ndarray
    coord_max: np.ndarray
    linf_mean: float
    unmatched: int

    def to_json(self) -> dict:
        return {"per_atom": real_array_to_json(self.per_atom),
                "coord_max": real_array_to_json(self.coord_max),
                "linf_mean": self.linf_mean, "unmatched": self.unmatched}

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelErrors":
        return cls(per_atom=real_array_from_json(obj["per_atom"]).reshape(-1, 3),
                   coord_max=real_array_from_json(obj["coord_max"]),
                   linf_mean=float(obj["linf_mean"]),
                   unmatched=int(obj["unmatched"]))


@dataclass
class ErrorMetrics:
    """Parameter and lifted-matrix errors of a recovery against truth."""

    radar: ChannelErrors
    comms: ChannelErrors
    frob_radar_abs: float
    frob_radar_rel: float
    frob_comms_abs: float
    frob_comms_rel: float

    def to_json(self) -> dict:
        return {"schema": "metrics-v1",
                "radar": self.radar.to_json(), "comms": self.comms.to_json(),
                "frob_radar_abs": self.frob_radar_abs,
                "frob_radar_rel": self.frob_radar_rel,
                "frob_comms_abs": self.frob_comms_abs,
                "frob_comms_rel": self.frob_comms_rel}

    @classmethod
    def from_json(cls, obj: dict) -> "ErrorMetrics":
        return cls(radar=ChannelErrors.from_json(obj["radar"]),
                   comms=ChannelErrors.from_json(obj["comms"]),
                   frob_radar_abs=float(obj["frob_radar_abs"]),
                   frob_radar_rel=float(obj["frob_radar_rel"]),
                   frob_comms_abs=float(obj["frob_comms_abs"]),
                   frob_comms_rel=float(obj["frob_comms_rel"]))


def _match_triples(true_triples, est_triples) -> ChannelErrors:
    """Assign estimates to truth and collect wrap-around errors."""
    from scipy.optimize import linear_sum_assignment

    true_triples = np.asarray(true_triples, dtype=float).reshape(-1, 3)
    est_triples = np.asarray(est_triples, dtype=float).reshape(-1, 3)
    n_true, n_est = true_triples.shape[0], est_triples.shape[0]

    rows = []
    if n_true and n_est:
        cost = np.zeros((n_true, n_est))
        for i in range(n_true):
            for k in range(n_est):
                cost[i, k] = wrap_distance(true_triples[i], est_triples[k]).max()
        ti, ei = linear_sum_assignment(cost)
        for i, k in zip(ti, ei):
            rows.append(wrap_distance(true_triples[i], est_triples[k]))
    unmatched = abs(n_true - n_est)
    for _ in range(unmatched):
        rows.append(np.full(3, 0.5))

    per_atom = np.asarray(rows, dtype=float).reshape(-1, 3)
    coord_max = per_atom.max(axis=0) if per_atom.size else np.zeros(3)
    linf_mean = float(per_atom.max(axis=1).mean()) if per_atom.size else 0.0
    return ChannelErrors(per_atom=per_atom, coord_max=coord_max,
                         linf_mean=linf_mean, unmatched=unmatched)


def error_metrics(scene: Scene, result: RecoveryResult) -> ErrorMetrics:
    """Matched parameter errors plus Frobenius errors of the lifted pair.

    Estimated triples are assigned to ground truth by minimum-cost
    matching under the wrap-around l-infinity distance, so the metric is
    invariant to the arbitrary ordering of recovered atoms.  Frobenius
    errors are reported both absolute and relative to the truth norm.
    """
    from .lifting import lift

    pair = lift(scene)
    fr_abs = float(np.linalg.norm(pair.X_r - result.Xr_hat))
    fc_abs = float(np.linalg.norm(pair.X_c - result.Xc_hat))
    nr = float(np.linalg.norm(pair.X_r))
    nc = float(np.linalg.norm(pair.X_c))
    return ErrorMetrics(
        radar=_match_triples(scene.radar.triples, np.asarray(result.radar_triples, dtype=float)),
        comms=_match_triples(scene.comms.triples, np.asarray(result.comms_triples, dtype=float)),
        frob_radar_abs=fr_abs,
        frob_radar_rel=fr_abs / nr if nr > 0 else np.inf,
        frob_comms_abs=fc_abs,
        frob_comms_rel=fc_abs / nc if nc > 0 else np.inf,
    )
