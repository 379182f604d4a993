"""Scene module: steering vectors, atoms, sampling, separation."""

import json

import numpy as np
import pytest

from dualblind.scene import (
    ChannelSpec,
    Dims,
    Scene,
    SceneConfig,
    atom_vector,
    make_subspaces,
    min_separation_ok,
    sample_scene,
    steering_delay_doppler,
    steering_doa,
    wrap_distance,
)
from util import oracle_atom, oracle_steering_delay_doppler, oracle_steering_doa


# -----------------------------------------------------------------
# Dims
# -----------------------------------------------------------------

def test_dims_derived_quantities():
    dims = Dims(N=4, P=9, N_r=3, K=3, L=2, Q_c=2)
    assert dims.M == 9
    assert dims.J == 3 * 9 * 9

    n, p, a, m = dims.index_arrays()
    # flat index convention: j = (p*M + n + N)*N_r + a
    j = (p * dims.M + n + dims.N) * dims.N_r + a
    assert np.array_equal(j, np.arange(dims.J))
    assert n.min() == -dims.N and n.max() == dims.N
    assert p.min() == 0 and p.max() == dims.P - 1


def test_dims_validation():
    with pytest.raises(ValueError):
        Dims(N=-1, P=1, N_r=1, K=1)
    with pytest.raises(ValueError):
        Dims(N=1, P=0, N_r=1, K=1)
    with pytest.raises(ValueError):
        Dims.from_M(M=4, P=1, N_r=1, K=1)
    assert Dims.from_M(M=9, P=2, N_r=1, K=1).N == 4


# -----------------------------------------------------------------
# Steering vectors
# -----------------------------------------------------------------

def test_steering_doa_pinned_values():
    assert np.allclose(steering_doa(0.0, 3), np.ones(3), atol=1e-15)
    assert np.allclose(steering_doa(0.5, 2), [1.0, -1.0], atol=1e-15)
    assert np.allclose(steering_doa(0.25, 4), [1.0, -1.0j, -1.0, 1.0j], atol=1e-15)


def test_steering_doa_against_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        beta = rng.uniform()
        N_r = int(rng.integers(1, 8))
        assert np.allclose(steering_doa(beta, N_r),
                           oracle_steering_doa(beta, N_r), atol=1e-12)


def test_steering_delay_doppler_pinned_values():
    assert np.allclose(steering_delay_doppler(0.0, 0.0, N=1, P=2),
                       np.ones(6), atol=1e-15)
    # tau = 0.5, single pulse: phases alternate over n = -1, 0, 1
    assert np.allclose(steering_delay_doppler(0.5, 0.3, N=1, P=1),
                       [-1.0, 1.0, -1.0], atol=1e-12)


def test_steering_delay_doppler_against_oracle_and_kron():
    rng = np.random.default_rng(11)
    for _ in range(20):
        tau, nu = rng.uniform(size=2)
        N = int(rng.integers(0, 4))
        P = int(rng.integers(1, 5))
        got = steering_delay_doppler(tau, nu, N, P)
        assert np.allclose(got, oracle_steering_delay_doppler(tau, nu, N, P), atol=1e-12)
        # p-major factorization
        doppler = np.exp(-2j * np.pi * np.arange(P) * nu)
        delay = np.exp(-2j * np.pi * np.arange(-N, N + 1) * tau)
        assert np.allclose(got, np.kron(doppler, delay), atol=1e-14)


# -----------------------------------------------------------------
# Atoms
# -----------------------------------------------------------------

def test_atom_vector_at_origin_is_ones():
    dims = Dims(N=1, P=2, N_r=2, K=1)
    assert np.allclose(atom_vector((0.0, 0.0, 0.0), dims), np.ones(dims.J), atol=1e-15)


def test_atom_vector_unit_modulus_and_norm():
    dims = Dims(N=2, P=3, N_r=2, K=1)
    rng = np.random.default_rng(3)
    for _ in range(20):
        w = atom_vector(rng.uniform(size=3), dims)
        assert np.allclose(np.abs(w), 1.0, atol=1e-12)
        assert abs(np.vdot(w, w).real - dims.J) < 1e-9


def test_atom_vector_against_oracle():
    dims = Dims(N=2, P=3, N_r=3, K=1)
    rng = np.random.default_rng(5)
    for _ in range(10):
        r = rng.uniform(size=3)
        assert np.allclose(atom_vector(r, dims), oracle_atom(r, dims), atol=1e-12)


def test_atom_vector_periodicity():
    dims = Dims(N=2, P=3, N_r=2, K=1)
    r = np.array([0.3, 0.6, 0.2])
    w0 = atom_vector(r, dims)
    for axis in range(3):
        shifted = r.copy()
        shifted[axis] += 1.0
        assert np.max(np.abs(atom_vector(shifted, dims) - w0)) < 1e-12


# -----------------------------------------------------------------
# Separation predicate
# -----------------------------------------------------------------

def test_wrap_distance():
    assert wrap_distance(0.1, 0.7) == pytest.approx(0.4)
    assert wrap_distance(0.95, 0.05) == pytest.approx(0.1)
    assert wrap_distance(0.3, 0.3) == 0.0


def test_min_separation_single_triple_true():
    dims = Dims(N=4, P=9, N_r=3, K=1)
    assert min_separation_ok(np.array([[0.1, 0.2, 0.3]]), dims)


def test_min_separation_identical_pair_false():
    dims = Dims(N=4, P=9, N_r=3, K=1)
    t = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]])
    assert not min_separation_ok(t, dims)


def test_min_separation_hand_case():
    # Two triples 0.6 apart on every axis, i.e. wrap distance 0.4.  With
    # P = N_r = 10 the Doppler/DoA thresholds are 5/10 = 0.5 > 0.4 and the
    # delay threshold 5/11 > 0.4 (M is structurally odd), so the pair
    # fails; growing every axis to 13 drops all thresholds below 0.4.
    t = np.array([[0.1, 0.1, 0.1], [0.7, 0.7, 0.7]])
    dims_fail = Dims(N=5, P=10, N_r=10, K=1)   # thresholds (5/11, 0.5, 0.5)
    assert not min_separation_ok(t, dims_fail)
    dims_pass = Dims(N=6, P=13, N_r=13, K=1)   # thresholds 5/13 < 0.4
    assert min_separation_ok(t, dims_pass)


# -----------------------------------------------------------------
# Sampling
# -----------------------------------------------------------------

def test_sample_scene_deterministic():
    cfg = SceneConfig(dims=Dims(N=2, P=3, N_r=2, K=2, L=2, Q_c=1), seed=42)
    s1, s2 = sample_scene(cfg), sample_scene(cfg)
    assert np.array_equal(s1.radar.triples, s2.radar.triples)
    assert np.array_equal(s1.radar.amps, s2.radar.amps)
    assert np.array_equal(s1.comms.triples, s2.comms.triples)
    assert np.array_equal(s1.v, s2.v)
    assert np.array_equal(s1.u, s2.u)


def test_sample_scene_unit_amplitudes_and_norms():
    cfg = SceneConfig(dims=Dims(N=2, P=3, N_r=2, K=2, L=2, Q_c=2),
                      amp_mode="unit", seed=1)
    s = sample_scene(cfg)
    assert np.allclose(np.abs(s.radar.amps), 1.0, atol=1e-14)
    assert np.allclose(np.abs(s.comms.amps), 1.0, atol=1e-14)
    assert abs(np.linalg.norm(s.v) - 1.0) < 1e-12
    assert abs(np.linalg.norm(s.u) - 1.0) < 1e-12


def test_sample_scene_gaussian_mode():
    cfg = SceneConfig(dims=Dims(N=2, P=3, N_r=2, K=2, L=2, Q_c=2),
                      amp_mode="gaussian", seed=1)
    s = sample_scene(cfg)
    assert not np.allclose(np.abs(s.radar.amps), 1.0)


def test_sample_scene_fixed_triples():
    fixed = np.array([[0.352, 0.831, 0.585], [0.495, 0.974, 0.919]])
    cfg = SceneConfig(dims=Dims(N=4, P=9, N_r=3, K=3, L=2, Q_c=1),
                      seed=3, radar_triples=fixed)
    s = sample_scene(cfg)
    assert np.array_equal(s.radar.triples, fixed)
    assert s.comms.triples.shape == (1, 3)


def test_sample_scene_separation_satisfiable():
    dims = Dims(N=6, P=13, N_r=13, K=2, L=1, Q_c=1)  # thresholds 5/13 < 0.5
    cfg = SceneConfig(dims=dims, separation=True, seed=0)
    s = sample_scene(cfg)
    combined = np.vstack([s.radar.triples, s.comms.triples])
    assert min_separation_ok(combined, dims)


def test_sample_scene_separation_unsatisfiable_raises():
    # At M=9, P=9, N_r=3 the thresholds 5/9 and 5/3 exceed the maximum
    # torus distance 0.5, so no triple pair can ever pass; the sampler
    # must exhaust its budget and say so.
    dims = Dims(N=4, P=9, N_r=3, K=3, L=2, Q_c=2)
    cfg = SceneConfig(dims=dims, separation=True, seed=0, resample_budget=500)
    with pytest.raises(ValueError, match="budget"):
        sample_scene(cfg)


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec(triples=np.array([[0.5, 0.5, 1.0]]), amps=np.array([1.0]))
    with pytest.raises(ValueError):
        ChannelSpec(triples=np.array([[0.5, 0.5, 0.5]]), amps=np.array([0.0]))
    with pytest.raises(ValueError):
        ChannelSpec(triples=np.array([[0.5, 0.5, 0.5]]), amps=np.array([1.0, 2.0]))


# -----------------------------------------------------------------
# Subspaces
# -----------------------------------------------------------------

def test_make_subspaces_structure():
    dims = Dims(N=2, P=3, N_r=2, K=3)
    sub = make_subspaces(dims, seed=0)
    assert sub.T.shape == (dims.M, dims.K)
    assert sub.D.shape == (dims.M * dims.P, dims.P * dims.K)
    assert np.allclose(np.abs(sub.T), 1.0, atol=1e-12)
    # off-block entries of D are exactly zero
    for p in range(dims.P):
        block = sub.D[p * dims.M:(p + 1) * dims.M, p * dims.K:(p + 1) * dims.K]
        assert np.allclose(np.abs(block), 1.0, atol=1e-12)
        outside = sub.D[p * dims.M:(p + 1) * dims.M, :].copy()
        outside[:, p * dims.K:(p + 1) * dims.K] = 0
        assert np.all(outside == 0)


def test_make_subspaces_k1_all_ones():
    dims = Dims(N=2, P=2, N_r=1, K=1)
    sub = make_subspaces(dims, seed=5)
    assert np.allclose(sub.T, 1.0, atol=1e-15)
    nz = sub.D[sub.D != 0]
    assert np.allclose(nz, 1.0, atol=1e-15)


def test_make_subspaces_deterministic():
    dims = Dims(N=2, P=3, N_r=2, K=3)
    s1, s2 = make_subspaces(dims, seed=9), make_subspaces(dims, seed=9)
    assert np.array_equal(s1.T, s2.T)
    assert np.array_equal(s1.D, s2.D)


# -----------------------------------------------------------------
# Serialization
# -----------------------------------------------------------------

def test_scene_json_round_trip():
    cfg = SceneConfig(dims=Dims(N=2, P=3, N_r=2, K=2, L=2, Q_c=1), seed=8)
    s = sample_scene(cfg)
    s2 = Scene.loads(s.dumps())
    assert np.array_equal(s.radar.triples, s2.radar.triples)
    assert np.array_equal(s.radar.amps, s2.radar.amps)
    assert np.array_equal(s.v, s2.v)
    assert np.array_equal(s.u, s2.u)
    assert s.dims == s2.dims
    # canonical encoding is stable
    assert s.dumps() == s2.dumps()


def test_subspaces_json_round_trip():
    from dualblind.scene import Subspaces
    dims = Dims(N=1, P=2, N_r=2, K=2)
    sub = make_subspaces(dims, seed=4)
    sub2 = Subspaces.from_json(json.loads(json.dumps(sub.to_json())))
    assert np.array_equal(sub.T, sub2.T)
    assert np.array_equal(sub.D, sub2.D)
