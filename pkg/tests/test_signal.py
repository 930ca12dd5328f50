import numpy as np
import pytest

from uavfas.signal import hermitian_sqrt, response_matrix, sample_covariance, sample_waveform, simulate_echo


def _rand_R(rng, M=6, rank=None):
    r = M if rank is None else rank
    Z = rng.standard_normal((M, r)) + 1j * rng.standard_normal((M, r))
    return Z @ Z.conj().T / M


def test_zero_covariance_gives_zero_block(rng):
    assert np.all(sample_waveform(np.zeros((4, 4)), 50, rng) == 0)


def test_identity_converges(rng):
    X = sample_waveform(np.eye(3), 200_000, rng)
    np.testing.assert_allclose(sample_covariance(X), np.eye(3), atol=0.02)


def test_deterministic_per_seed():
    R = _rand_R(np.random.default_rng(1))
    a = sample_waveform(R, 64, np.random.default_rng(7))
    b = sample_waveform(R, 64, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_rank_one_sqrt(rng):
    R = _rand_R(rng, 5, 1)
    S = hermitian_sqrt(R)
    np.testing.assert_allclose(S @ S, R, atol=1e-12)


def test_non_psd_rejected():
    with pytest.raises(ValueError, match="PSD"):
        sample_waveform(np.diag([1.0, -1.0]), 10, np.random.default_rng(0))


def test_sample_covariance_examples():
    v = np.array([1 + 2j, -1j, 3.0])
    np.testing.assert_allclose(sample_covariance(v[:, None]), np.outer(v, v.conj()))
    assert np.all(sample_covariance(np.zeros((3, 5))) == 0)


def test_sample_covariance_hermitian_psd(rng):
    C = sample_covariance(sample_waveform(_rand_R(rng), 40, rng))
    np.testing.assert_allclose(C, C.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(C).min() >= -1e-10 * np.trace(C).real


def test_error_shrinks_with_frames():
    wins = 0
    for seed in range(10):
        rng = np.random.default_rng([seed, 99])
        R = _rand_R(rng)
        e_small = np.linalg.norm(sample_covariance(sample_waveform(R, 100, rng)) - R)
        e_big = np.linalg.norm(sample_covariance(sample_waveform(R, 10_000, rng)) - R)
        wins += e_big < e_small
    assert wins >= 9


def test_response_matrix():
    W = response_matrix(1.0, 0.5, np.ones(3), np.ones(4))
    np.testing.assert_allclose(W, np.ones((3, 4)))
    rng = np.random.default_rng(0)
    a = np.exp(1j * rng.uniform(0, 6, 5))
    b = np.exp(1j * rng.uniform(0, 6, 4))
    W = response_matrix(0.7, 10.0, b, a)
    s = np.linalg.svd(W, compute_uv=False)
    assert s[1] < 1e-10 * s[0]
    np.testing.assert_allclose(response_matrix(0.7, 20.0, b, a), W / 2)


def test_echo_noiseless_and_noise_only(rng):
    W = rng.standard_normal((3, 4)) + 0j
    X = rng.standard_normal((4, 10)) + 0j
    np.testing.assert_array_equal(simulate_echo(W, X, 0.0, rng), W @ X)
    noise = simulate_echo(W, np.zeros((4, 40_000)), 2.5, rng)
    assert np.mean(np.abs(noise) ** 2) == pytest.approx(2.5, rel=0.05)
    a = simulate_echo(W, X, 1.0, np.random.default_rng(3))
    b = simulate_echo(W, X, 1.0, np.random.default_rng(3))
    assert np.array_equal(a, b)
