import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from relay_ris.channel_model import ChannelSet
from relay_ris.rate_model import (PhaseConfig, check_feasibility, combined_rate, effective_first_hop,
                                  effective_second_hop_user, relay_rate, sinr, user_sinrs)
from relay_ris.relay_precoder import zf_beamformer

from conftest import crandn


def make_channels(rng, M=3, N=4, L=5, K=2):
    return ChannelSet(H_TR=crandn(rng, N, M), H_TI=crandn(rng, L, M), H_IR=crandn(rng, N, L),
                      h_T=crandn(rng, K, M), h_R=crandn(rng, K, N), h_I=crandn(rng, K, L))


def test_first_hop_without_reflection(rng):
    ch = make_channels(rng)
    ch = ChannelSet(ch.H_TR, ch.H_TI, np.zeros_like(ch.H_IR), ch.h_T, ch.h_R, ch.h_I)
    np.testing.assert_array_equal(effective_first_hop(ch, rng.integers(0, 4, 5), 2), ch.H_TR)


def test_first_hop_zero_phases(rng):
    ch = make_channels(rng)
    np.testing.assert_allclose(effective_first_hop(ch, np.zeros(5, int), 2), ch.H_TR + ch.H_IR @ ch.H_TI)


def test_scalar_hops():
    h_tr, h_ti, h_ir = 0.3 + 0.1j, -0.7 + 0.2j, 0.5 - 0.4j
    h_t, h_r, h_i = 0.05j, 1.1 - 0.3j, -0.2 + 0.9j
    ch = ChannelSet(*(np.array([[x]]) for x in (h_tr, h_ti, h_ir, h_t, h_r, h_i)))
    # index 1 of 4 levels -> theta = pi/2 -> e^{j theta} = j
    assert effective_first_hop(ch, [1], 2)[0, 0] == pytest.approx(h_tr + h_ir * 1j * h_ti)
    assert effective_second_hop_user(ch, [1], 2, 0)[0] == pytest.approx(h_i * 1j * np.conj(h_ir) + h_r)


def test_second_hop_without_reflection(rng):
    ch = make_channels(rng)
    ch = ChannelSet(ch.H_TR, ch.H_TI, ch.H_IR, ch.h_T, ch.h_R, np.zeros_like(ch.h_I))
    np.testing.assert_array_equal(effective_second_hop_user(ch, [3, 1, 0, 2, 2], 2, 1), ch.h_R[1])
    ch = make_channels(rng)
    np.testing.assert_allclose(effective_second_hop_user(ch, np.zeros(5, int), 2, 0),
                               ch.h_I[0] @ ch.H_IR.conj().T + ch.h_R[0])


def test_relay_rate_trivial():
    assert relay_rate(np.eye(3), np.zeros((3, 2)), 1.0) == 0.0
    assert relay_rate(np.array([[np.sqrt(3)]]), np.array([[1.0]]), 1.0) == pytest.approx(2.0)


def test_relay_rate_eigenvalue_oracle(rng):
    H = crandn(rng, 3, 3)
    W = crandn(rng, 3, 3)
    lam = np.linalg.eigvals(H @ W @ W.conj().T @ H.conj().T).real
    expected = np.log2(np.prod(1 + lam / 0.7))
    assert relay_rate(H, W, 0.7) == pytest.approx(expected, rel=1e-12)
    _, logdet = np.linalg.slogdet(np.eye(3) + H @ W @ W.conj().T @ H.conj().T / 0.7)
    assert relay_rate(H, W, 0.7) == pytest.approx(logdet / np.log(2), rel=1e-12)


def test_single_user_sinr_has_no_interference(rng):
    ch = make_channels(rng, K=1)
    ph = PhaseConfig.random(5, 2, rng)
    W, U = crandn(rng, 3, 1), crandn(rng, 4, 1)
    g1, _ = user_sinrs(ch, ph, W, U, 0.5)
    row = ch.h_I[0] * np.exp(2j * np.pi * ph.theta1 / 4) @ ch.H_TI + ch.h_T[0]
    assert g1[0] == pytest.approx(abs(row @ W[:, 0]) ** 2 / 0.5)


def test_zf_gives_noise_limited_sinr(rng):
    ch = make_channels(rng, K=3, N=5)
    ph = PhaseConfig.random(5, 2, rng)
    eta = np.array([1.0, 4.0, 9.0])
    rows = np.array([effective_second_hop_user(ch, ph.theta2, 2, k) for k in range(3)])
    U = zf_beamformer(rows, eta, 0.3)
    _, g2 = user_sinrs(ch, ph, np.zeros((3, 3)), U, 0.3)
    q = 0.3 * eta
    np.testing.assert_allclose(g2, q / 0.3, rtol=1e-9)


def test_zero_beams_zero_sinr(rng):
    ch = make_channels(rng)
    g1, g2 = user_sinrs(ch, PhaseConfig.zeros(5, 2), np.zeros((3, 2)), np.zeros((4, 2)), 1.0)
    assert np.all(g1 == 0) and np.all(g2 == 0)


@pytest.mark.parametrize("g1, g2, rate", [(0, 0, 0), (1, 2, 2), (3, 0, 2)])
def test_combined_rate(g1, g2, rate):
    assert combined_rate(g1, g2) == pytest.approx(rate)


def test_check_feasibility_cases():
    R, K = 1.0, 2
    W, U = np.eye(2), np.eye(2)
    ok = check_feasibility(W, U, 2 * K * R + 0.5, [3, 3], [10, 10], R)
    assert ok.feasible and ok.total_power == pytest.approx(2.0)
    short = check_feasibility(W, U, 2 * K * R + 0.5, [3, 1], [10, 1.9], R)
    assert not short.feasible
    boundary = check_feasibility(W, U, 2 * K * R, [1, 1], [2, 2], R)
    assert boundary.feasible


def test_phase_config_validation():
    with pytest.raises(ValueError):
        PhaseConfig([0, 4], [0, 0], 2)
    with pytest.raises(ValueError):
        PhaseConfig([0, 1], [0], 2)
    p = PhaseConfig.from_flat([1, 2, 3, 0], 2)
    np.testing.assert_array_equal(p.theta1, [1, 2])
    np.testing.assert_array_equal(p.flat(), [1, 2, 3, 0])


cplx = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(arrays(complex, (4, 3), elements=cplx), arrays(complex, (4, 3), elements=cplx),
       st.floats(-5, 5), st.integers(0, 2 ** 32 - 1))
def test_first_hop_linear_in_direct_path(A, B, a, seed):
    rng = np.random.default_rng(seed)
    ch = make_channels(rng)
    theta = rng.integers(0, 4, 5)
    mk = lambda H: ChannelSet(H, ch.H_TI, ch.H_IR, ch.h_T, ch.h_R, ch.h_I)
    lhs = effective_first_hop(mk(A + a * B), theta, 2) - effective_first_hop(mk(np.zeros_like(A)), theta, 2)
    rhs = (effective_first_hop(mk(A), theta, 2) - effective_first_hop(mk(np.zeros_like(A)), theta, 2)
           + a * (effective_first_hop(mk(B), theta, 2) - effective_first_hop(mk(np.zeros_like(A)), theta, 2)))
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 100))
def test_first_hop_linear_in_reflected_links(seed, c):
    rng = np.random.default_rng(seed)
    ch = make_channels(rng)
    theta = rng.integers(0, 4, 5)
    scaled_ti = ChannelSet(ch.H_TR, c * ch.H_TI, ch.H_IR, ch.h_T, ch.h_R, ch.h_I)
    scaled_ir = ChannelSet(ch.H_TR, ch.H_TI, c * ch.H_IR, ch.h_T, ch.h_R, ch.h_I)
    reflected = effective_first_hop(ch, theta, 2) - ch.H_TR
    np.testing.assert_allclose(effective_first_hop(scaled_ti, theta, 2) - ch.H_TR, c * reflected, atol=1e-9)
    np.testing.assert_allclose(effective_first_hop(scaled_ir, theta, 2) - ch.H_TR, c * reflected, atol=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.1, 10))
def test_common_beam_scaling(seed, c):
    rng = np.random.default_rng(seed)
    rows, B = crandn(rng, 3, 4), crandn(rng, 4, 3)
    G = np.abs(rows @ B) ** 2
    np.testing.assert_allclose(np.abs(rows @ (c * B)) ** 2, c ** 2 * G, rtol=1e-10)
    # interference-free: SINR strictly increasing in |c|
    orth = np.linalg.pinv(rows)
    assert np.all(sinr(rows, 1.01 * c * orth, 1.0) > sinr(rows, c * orth, 1.0))


@given(st.integers(0, 2 ** 32 - 1))
def test_relay_rate_unitary_invariance(seed):
    rng = np.random.default_rng(seed)
    H, W = crandn(rng, 5, 4), crandn(rng, 4, 3)
    Q, _ = np.linalg.qr(crandn(rng, 3, 3))
    assert relay_rate(H, W @ Q, 0.2) == pytest.approx(relay_rate(H, W, 0.2), rel=1e-10)


@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0, 1e3))
def test_combined_rate_monotone(g1, g2, d):
    assert combined_rate(g1 + d, g2) >= combined_rate(g1, g2)
    assert combined_rate(g1, g2 + d) >= combined_rate(g1, g2)
