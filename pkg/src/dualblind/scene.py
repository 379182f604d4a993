"""Scene model for overlaid radar/communications measurements.

A scene holds the two sparse channels seen by a single receiver: a radar
channel with L targets and a communications channel with Q_c paths.  Every
target/path is a triple (tau, nu, beta) of normalized delay, Doppler and
direction-of-arrival, each living on the unit torus [0, 1), plus a complex
amplitude.  The receiver has N_r antennas, collects P pulses and M = 2N+1
frequency samples per pulse, so a full snapshot has J = N_r * M * P entries.

Flat index conventions used everywhere in this package:

    m = p * M + (n + N)      pulse-major index over (pulse p, frequency n)
    j = m * N_r + a          antenna a innermost

with n in [-N, N], p in [0, P), a in [0, N_r).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from ._json import (
    complex_array_from_json,
    complex_array_to_json,
    dumps_canonical,
    real_array_from_json,
    real_array_to_json,
)

TWO_PI = 2.0 * np.pi

# Resampling budget when separation mode keeps rejecting dense scenes.
SEPARATION_RESAMPLE_BUDGET = 10_000


# -----------------------------------------------------------------
# Dimensions and parameter containers
# -----------------------------------------------------------------

@dataclass(frozen=True)
class Dims:
    """Problem dimensions.

    Attributes
    ----------
    N : int
        Half bandwidth; the frequency index n runs over [-N, N].
    P : int
        Pulse count.
    N_r : int
        Antenna count of the receive array.
    K : int
        Dimension of the per-signal representation subspace.
    L : int
        Radar target count.
    Q_c : int
        Communications path count.
    """

    N: int
    P: int
    N_r: int
    K: int
    L: int = 1
    Q_c: int = 1

    def __post_init__(self):
        if self.N < 0:
            raise ValueError(f"half bandwidth N must be >= 0, got {self.N}")
        for name in ("P", "N_r", "K"):
            if getattr(self, name) < 1:
                raise ValueError(f"dimension {name} must be >= 1")
        if self.L < 0 or self.Q_c < 0:
            raise ValueError("channel sizes L, Q_c must be >= 0")

    @property
    def M(self) -> int:
        """Frequency samples per pulse, M = 2N + 1."""
        return 2 * self.N + 1

    @property
    def J(self) -> int:
        """Total measurement count, J = N_r * M * P."""
        return self.N_r * self.M * self.P

    @classmethod
    def from_M(cls, M: int, P: int, N_r: int, K: int, L: int = 1, Q_c: int = 1) -> "Dims":
        if M < 1 or M % 2 == 0:
            raise ValueError(f"M must be odd and >= 1, got {M}")
        return cls(N=(M - 1) // 2, P=P, N_r=N_r, K=K, L=L, Q_c=Q_c)

    def index_arrays(self):
        """Per-entry (n, p, a, m) indices for the flat measurement index j.

        Returns four int arrays of length J such that
        ``j == (p * M + n + N) * N_r + a`` holds elementwise.
        """
        j = np.arange(self.J)
        a = j % self.N_r
        m = j // self.N_r
        n = m % self.M - self.N
        p = m // self.M
        return n, p, a, m

    def to_json(self) -> dict:
        return {"N": self.N, "P": self.P, "N_r": self.N_r,
                "K": self.K, "L": self.L, "Q_c": self.Q_c}

    @classmethod
    def from_json(cls, obj: dict) -> "Dims":
        return cls(**{k: int(obj[k]) for k in ("N", "P", "N_r", "K", "L", "Q_c")})


class ParamTriple(NamedTuple):
    """A (delay, Doppler, DoA) point on the unit torus."""

    tau: float
    nu: float
    beta: float

    def as_array(self) -> np.ndarray:
        return np.array([self.tau, self.nu, self.beta], dtype=float)


@dataclass
class ChannelSpec:
    """One sparse channel: parameter triples plus complex amplitudes.

    ``triples`` has one row per target/path, columns (tau, nu, beta); all
    entries must lie in [0, 1).  Amplitudes must be nonzero and finite.
    """

    triples: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        self.triples = np.atleast_2d(np.asarray(self.triples, dtype=float))
        if self.triples.size == 0:
            self.triples = self.triples.reshape(0, 3)
        self.amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if self.triples.shape[1] != 3:
            raise ValueError("triples must have three columns (tau, nu, beta)")
        if self.triples.shape[0] != self.amps.shape[0]:
            raise ValueError("one amplitude per parameter triple required")
        if self.triples.size and (self.triples.min() < 0.0 or self.triples.max() >= 1.0):
            raise ValueError("parameters must lie in [0, 1)")
        if not np.all(np.isfinite(self.triples)):
            raise ValueError("parameters must be finite")
        if self.amps.size and (not np.all(np.isfinite(self.amps)) or np.any(self.amps == 0)):
            raise ValueError("amplitudes must be finite and nonzero")

    @property
    def count(self) -> int:
        return self.triples.shape[0]

    def to_json(self) -> dict:
        return {"triples": real_array_to_json(self.triples),
                "amps": complex_array_to_json(self.amps)}

    @classmethod
    def from_json(cls, obj: dict) -> "ChannelSpec":
        return cls(triples=real_array_from_json(obj["triples"]).reshape(-1, 3),
                   amps=complex_array_from_json(obj["amps"]))


@dataclass
class Scene:
    """Ground truth for one synthetic experiment."""

    dims: Dims
    radar: ChannelSpec
    comms: ChannelSpec
    v: np.ndarray      # radar signal coefficients, length K, unit norm
    u: np.ndarray      # comms signal coefficients, length P*K, unit norm
    seed: int | None = None

    def __post_init__(self):
        self.v = np.asarray(self.v, dtype=complex).reshape(-1)
        self.u = np.asarray(self.u, dtype=complex).reshape(-1)
        if self.v.shape[0] != self.dims.K:
            raise ValueError("v must have length K")
        if self.u.shape[0] != self.dims.P * self.dims.K:
            raise ValueError("u must have length P*K")
        if self.radar.count != self.dims.L:
            raise ValueError("radar channel must carry L triples")
        if self.comms.count != self.dims.Q_c:
            raise ValueError("comms channel must carry Q_c triples")

    def to_json(self) -> dict:
        return {
            "schema": "scene-v1",
            "dims": self.dims.to_json(),
            "radar": self.radar.to_json(),
            "comms": self.comms.to_json(),
            "v": complex_array_to_json(self.v),
            "u": complex_array_to_json(self.u),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scene":
        return cls(
            dims=Dims.from_json(obj["dims"]),
            radar=ChannelSpec.from_json(obj["radar"]),
            comms=ChannelSpec.from_json(obj["comms"]),
            v=complex_array_from_json(obj["v"]),
            u=complex_array_from_json(obj["u"]),
            seed=obj.get("seed"),
        )

    def dumps(self) -> str:
        return dumps_canonical(self.to_json())

    @classmethod
    def loads(cls, text: str) -> "Scene":
        return cls.from_json(json.loads(text))


@dataclass
class Subspaces:
    """Known representation subspaces for the two unknown signals.

    ``T`` is M x K; row n+N is the (conjugated) generator applied to the
    radar coefficient vector, so the noiseless radar signal sample at
    frequency n is ``T[n+N] @ v``.  ``D`` is the block-diagonal MP x PK
    comms counterpart with one M x K block per pulse.
    """

    T: np.ndarray
    D: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.T = np.asarray(self.T, dtype=complex)
        self.D = np.asarray(self.D, dtype=complex)

    def to_json(self) -> dict:
        return {
            "schema": "subspaces-v1",
            "T": complex_array_to_json(self.T),
            "D": complex_array_to_json(self.D),
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Subspaces":
        return cls(T=complex_array_from_json(obj["T"]),
                   D=complex_array_from_json(obj["D"]),
                   seed=obj.get("seed"))


@dataclass
class SceneConfig:
    """Sampling configuration for :func:`sample_scene`.

    ``amp_mode`` is "unit" (unit modulus, uniform phase) or "gaussian"
    (standard complex normal).  With ``separation`` on, the triple set is
    redrawn until :func:`min_separation_ok` holds, up to
    ``resample_budget`` attempts.  Fixed triples, when given, bypass the
    sampling of that channel's triples (amplitudes are still drawn).
    """

    dims: Dims
    amp_mode: str = "unit"
    separation: bool = False
    seed: int = 0
    radar_triples: np.ndarray | None = None
    comms_triples: np.ndarray | None = None
    resample_budget: int = SEPARATION_RESAMPLE_BUDGET


# -----------------------------------------------------------------
# Steering vectors and atoms
# -----------------------------------------------------------------

def steering_doa(beta: float, N_r: int) -> np.ndarray:
    """Array steering vector, entry a = exp(-i 2 pi a beta), a = 0..N_r-1."""
    a = np.arange(N_r)
    return np.exp(-1j * TWO_PI * a * beta)


def steering_delay_doppler(tau: float, nu: float, N: int, P: int) -> np.ndarray:
    """Delay-Doppler steering vector on the (pulse, frequency) grid.

    Entry m = p*M + (n+N) equals exp(-i 2 pi (n tau + p nu)) with
    n in [-N, N] and p in [0, P).  Equals the Kronecker product of the
    pure-Doppler length-P vector with the pure-delay length-M vector.
    """
    n = np.arange(-N, N + 1)
    p = np.arange(P)
    delay = np.exp(-1j * TWO_PI * n * tau)
    doppler = np.exp(-1j * TWO_PI * p * nu)
    return np.kron(doppler, delay)


def atom_vector(triple, dims: Dims) -> np.ndarray:
    """Full array-frequency-pulse atom w(r) of length J.

    Entry j = m*N_r + a equals exp(-i 2 pi (n tau + p nu + a beta)); the
    atom is the Kronecker product of the delay-Doppler steering vector
    with the DoA steering vector (antenna index innermost).
    """
    tau, nu, beta = float(triple[0]), float(triple[1]), float(triple[2])
    return np.kron(steering_delay_doppler(tau, nu, dims.N, dims.P),
                   steering_doa(beta, dims.N_r))


# -----------------------------------------------------------------
# Sampling
# -----------------------------------------------------------------

def wrap_distance(x, y):
    """Wrap-around distance on the unit torus, elementwise."""
    return np.abs(np.mod(np.asarray(x) - np.asarray(y) + 0.5, 1.0) - 0.5)


def min_separation_ok(triples: np.ndarray, dims: Dims) -> bool:
    """Check the sufficient minimum-separation condition for a triple set.

    Requires wrap-around separation of at least 5/M in delay, 5/P in
    Doppler and 5/N_r in DoA for every pair.  This is a strong sufficient
    condition from the super-resolution literature; realistic small-array
    scenes usually violate it and are still recoverable.
    """
    triples = np.atleast_2d(np.asarray(triples, dtype=float))
    thresholds = np.array([5.0 / dims.M, 5.0 / dims.P, 5.0 / dims.N_r])
    R = triples.shape[0]
    for i in range(R):
        for k in range(i + 1, R):
            if np.any(wrap_distance(triples[i], triples[k]) < thresholds):
                return False
    return True


def _draw_amps(rng, count: int, mode: str) -> np.ndarray:
    if mode == "unit":
        return np.exp(1j * TWO_PI * rng.uniform(0.0, 1.0, size=count))
    if mode == "gaussian":
        return (rng.standard_normal(count) + 1j * rng.standard_normal(count)) / np.sqrt(2.0)
    raise ValueError(f"unknown amplitude mode {mode!r}")


def _draw_unit_vector(rng, length: int) -> np.ndarray:
    g = (rng.standard_normal(length) + 1j * rng.standard_normal(length)) / np.sqrt(2.0)
    return g / np.linalg.norm(g)


def sample_scene(cfg: SceneConfig) -> Scene:
    """Draw a random scene, optionally enforcing minimum separation.

    Raises
    ------
    ValueError
        If separation mode keeps rejecting for ``resample_budget``
        attempts, which signals an overly dense scene for the dims.
    """
    dims = cfg.dims
    rng = np.random.default_rng(cfg.seed)

    def draw_triples():
        radar = (cfg.radar_triples if cfg.radar_triples is not None
                 else rng.uniform(0.0, 1.0, size=(dims.L, 3)))
        comms = (cfg.comms_triples if cfg.comms_triples is not None
                 else rng.uniform(0.0, 1.0, size=(dims.Q_c, 3)))
        return np.atleast_2d(radar), np.atleast_2d(comms)

    radar_t, comms_t = draw_triples()
    if cfg.separation:
        attempts = 1
        while not min_separation_ok(np.vstack([radar_t, comms_t]), dims):
            attempts += 1
            if attempts > cfg.resample_budget:
                raise ValueError(
                    "separation-resampling budget exhausted; the requested "
                    "scene is too dense for the minimum-separation condition "
                    f"at dims M={dims.M}, P={dims.P}, N_r={dims.N_r}")
            radar_t, comms_t = draw_triples()

    radar = ChannelSpec(triples=radar_t, amps=_draw_amps(rng, dims.L, cfg.amp_mode))
    comms = ChannelSpec(triples=comms_t, amps=_draw_amps(rng, dims.Q_c, cfg.amp_mode))
    v = _draw_unit_vector(rng, dims.K)
    u = _draw_unit_vector(rng, dims.P * dims.K)
    return Scene(dims=dims, radar=radar, comms=comms, v=v, u=u, seed=cfg.seed)


def make_subspaces(dims: Dims, seed: int = 0) -> Subspaces:
    """Draw the known representation subspaces T and D.

    Each row is a conjugated complex exponential generator
    ``exp(-i 2 pi k sigma)`` with sigma drawn i.i.d. standard normal per
    row, so every entry has unit modulus; D is block diagonal with one
    independent M x K block per pulse.
    """
    rng = np.random.default_rng(seed)
    k = np.arange(dims.K)

    sigma_r = rng.standard_normal(dims.M)
    T = np.exp(-1j * TWO_PI * np.outer(sigma_r, k))

    D = np.zeros((dims.M * dims.P, dims.P * dims.K), dtype=complex)
    for p in range(dims.P):
        sigma_p = rng.standard_normal(dims.M)
        block = np.exp(-1j * TWO_PI * np.outer(sigma_p, k))
        D[p * dims.M:(p + 1) * dims.M, p * dims.K:(p + 1) * dims.K] = block
    return Subspaces(T=T, D=D, seed=seed)
