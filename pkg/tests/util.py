"""Shared scalar-loop oracles for the test suite.

These are deliberately written with explicit Python loops and cmath so
they stay independent from the vectorized library implementations they
check.
"""

import cmath

import numpy as np

from dualblind.scene import Dims


def oracle_steering_doa(beta, N_r):
    return np.array([cmath.exp(-2j * cmath.pi * a * beta) for a in range(N_r)])


def oracle_steering_delay_doppler(tau, nu, N, P):
    out = []
    for p in range(P):
        for n in range(-N, N + 1):
            out.append(cmath.exp(-2j * cmath.pi * (n * tau + p * nu)))
    return np.array(out)


def oracle_atom(triple, dims: Dims):
    tau, nu, beta = triple
    out = np.zeros(dims.J, dtype=complex)
    for p in range(dims.P):
        for n in range(-dims.N, dims.N + 1):
            for a in range(dims.N_r):
                m = p * dims.M + (n + dims.N)
                j = m * dims.N_r + a
                out[j] = cmath.exp(-2j * cmath.pi * (n * tau + p * nu + a * beta))
    return out


def oracle_measurement(scene, subspaces):
    """Per-entry double sum over targets and paths, scalar arithmetic.

    The stored amplitudes enter conjugated and the atoms conjugated,
    matching the lifted model X = (coeff vector) h^H.
    """
    dims = scene.dims
    y = np.zeros(dims.J, dtype=complex)
    for p in range(dims.P):
        for n in range(-dims.N, dims.N + 1):
            m = p * dims.M + (n + dims.N)
            s = 0.0 + 0.0j
            for k in range(dims.K):
                s += subspaces.T[n + dims.N, k] * scene.v[k]
            g = 0.0 + 0.0j
            for k in range(dims.P * dims.K):
                g += subspaces.D[m, k] * scene.u[k]
            for a in range(dims.N_r):
                j = m * dims.N_r + a
                val = 0.0 + 0.0j
                for (tau, nu, beta), amp in zip(scene.radar.triples, scene.radar.amps):
                    phase = cmath.exp(2j * cmath.pi * (n * tau + p * nu + a * beta))
                    val += amp.conjugate() * phase * s
                for (tau, nu, beta), amp in zip(scene.comms.triples, scene.comms.amps):
                    phase = cmath.exp(2j * cmath.pi * (n * tau + p * nu + a * beta))
                    val += amp.conjugate() * phase * g
                y[j] = val
    return y


def random_small_dims(rng, with_channels=True):
    N = int(rng.integers(0, 3))
    P = int(rng.integers(1, 4))
    N_r = int(rng.integers(1, 4))
    K = int(rng.integers(1, 4))
    L = int(rng.integers(1, 3)) if with_channels else 0
    Q_c = int(rng.integers(0, 3)) if with_channels else 0
    return Dims(N=N, P=P, N_r=N_r, K=K, L=L, Q_c=Q_c)


def certified_tiny_scene():
    """Smallest dual-certified instance: scene, subspaces, measurement.

    One target and one path, well separated in delay, with the message
    coefficients concentrated on the first pulse; the dual optimum then
    equals |alpha_r| + |alpha_c| = 2 and the true atoms sit on the unit
    level set of the dual polynomials.  Note the degeneracies: a single
    antenna makes DoA unobservable, and the pulse-concentrated message
    makes the comms Doppler unobservable.
    """
    from dualblind.lifting import synthesize_measurements
    from dualblind.scene import ChannelSpec, Scene, make_subspaces

    dims = Dims(N=1, P=2, N_r=1, K=1, L=1, Q_c=1)
    radar = ChannelSpec(triples=np.array([[0.1, 0.2, 0.3]]),
                        amps=np.array([1.0 + 0j]))
    comms = ChannelSpec(triples=np.array([[0.6, 0.45, 0.7]]),
                        amps=np.array([1.0 + 0j]))
    scene = Scene(dims=dims, radar=radar, comms=comms,
                  v=np.array([1.0 + 0j]),
                  u=np.array([1.0, 0.0], dtype=complex), seed=0)
    sub = make_subspaces(dims, seed=0)
    return scene, sub, synthesize_measurements(scene, sub)
