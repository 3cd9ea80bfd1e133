"""Rates, SINRs and feasibility of a candidate (W, U, theta1, theta2).

Phase index arrays may carry leading batch dimensions; the effective-channel
helpers then return one channel per batch entry.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import ChannelSet

RATE_RTOL = 1e-6


@dataclass(frozen=True)
class PhaseConfig:
    """Discrete RIS phase indices for both hops; phase = index * 2*pi / 2**b."""

    theta1: np.ndarray
    theta2: np.ndarray
    b: int

    def __post_init__(self):
        t1 = np.asarray(self.theta1, dtype=int)
        t2 = np.asarray(self.theta2, dtype=int)
        if t1.shape != t2.shape or t1.ndim != 1:
            raise ValueError("theta1 and theta2 must be 1-D arrays of equal length")
        for t in (t1, t2):
            if t.size and (t.min() < 0 or t.max() >= 2 ** self.b):
                raise ValueError(f"phase indices must lie in [0, {2 ** self.b})")
        object.__setattr__(self, "theta1", t1)
        object.__setattr__(self, "theta2", t2)

    @classmethod
    def zeros(cls, L: int, b: int) -> "PhaseConfig":
        return cls(np.zeros(L, dtype=int), np.zeros(L, dtype=int), b)

    @classmethod
    def random(cls, L: int, b: int, rng: np.random.Generator) -> "PhaseConfig":
        return cls(rng.integers(0, 2 ** b, L), rng.integers(0, 2 ** b, L), b)

    @property
    def L(self) -> int:
        return self.theta1.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.theta1, self.theta2])

    @classmethod
    def from_flat(cls, idx, b: int) -> "PhaseConfig":
        idx = np.asarray(idx, dtype=int)
        L = idx.size // 2
        return cls(idx[:L], idx[L:], b)


def phase_vector(idx, b: int) -> np.ndarray:
    """Unit-modulus diagonal of the RIS phase matrix for index array ``idx``."""
    return np.exp(2j * np.pi * np.asarray(idx) / 2 ** b)


@dataclass
class BeamformerSolution:
    W: np.ndarray  # (M, K)
    U: np.ndarray  # (N, K)
    P: np.ndarray  # (K,) BS stream powers
    q: np.ndarray  # (K,) relay user powers

    @property
    def total_power(self) -> float:
        return 0.5 * (np.linalg.norm(self.W) ** 2 + np.linalg.norm(self.U) ** 2)


@dataclass
class SolveReport:
    feasible: bool
    total_power: float
    relay_rate: float
    gamma1: np.ndarray
    gamma2: np.ndarray
    user_rates: np.ndarray
    solution: BeamformerSolution | None = None
    phases: PhaseConfig | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def min_user_rate(self) -> float:
        return float(np.min(self.user_rates)) if self.user_rates.size else np.nan


def effective_first_hop(channels: ChannelSet, theta1, b: int) -> np.ndarray:
    """``H_TR + H_IR diag(e^{j theta1}) H_TI``; shape (..., N, M)."""
    v = phase_vector(theta1, b)
    return channels.H_TR + (channels.H_IR * v[..., None, :]) @ channels.H_TI


def first_hop_user_rows(channels: ChannelSet, theta1, b: int) -> np.ndarray:
    """Rows ``h_I,k^H Theta1 H_TI + h_T,k^H`` for all users; shape (..., K, M)."""
    v = phase_vector(theta1, b)
    return channels.h_T + (channels.h_I * v[..., None, :]) @ channels.H_TI


def second_hop_user_rows(channels: ChannelSet, theta2, b: int) -> np.ndarray:
    """Rows ``h_I,k^H Theta2 H_IR^H + h_R,k^H`` for all users; shape (..., K, N)."""
    v = phase_vector(theta2, b)
    return channels.h_R + (channels.h_I * v[..., None, :]) @ channels.H_IR.conj().T


def effective_second_hop_user(channels: ChannelSet, theta2, b: int, k: int) -> np.ndarray:
    if not 0 <= k < channels.K:
        raise IndexError(f"user index {k} out of range for K={channels.K}")
    return second_hop_user_rows(channels, theta2, b)[..., k, :]


def relay_rate(H_TIR: np.ndarray, W: np.ndarray, sigma2: float) -> float:
    """Relay decoding sum rate log2 det(I + H W W^H H^H / sigma2)."""
    A = H_TIR @ W
    # det(I + A A^H / s) == det(I + A^H A / s); the K x K Gram is smaller.
    lam = np.linalg.eigvalsh(A.conj().T @ A)
    return float(np.sum(np.log2(1.0 + np.clip(lam, 0.0, None) / sigma2)))


def sinr(rows: np.ndarray, B: np.ndarray, sigma2: float) -> np.ndarray:
    """SINR of user k when beam k carries its stream and the rest interfere.

    ``rows`` is (..., K, T) and ``B`` is (..., T, K).
    """
    G = np.abs(rows @ B) ** 2
    desired = np.diagonal(G, axis1=-2, axis2=-1)
    interference = G.sum(axis=-1) - desired
    return desired / (interference + sigma2)


def user_sinrs(channels: ChannelSet, phases: PhaseConfig, W, U, sigma2: float):
    g1 = sinr(first_hop_user_rows(channels, phases.theta1, phases.b), W, sigma2)
    g2 = sinr(second_hop_user_rows(channels, phases.theta2, phases.b), U, sigma2)
    return g1, g2


def combined_rate(gamma1, gamma2):
    """Rate user k decodes after combining both phases."""
    return np.log2(1.0 + np.asarray(gamma1) + np.asarray(gamma2))


def check_feasibility(W, U, rate_relay: float, gamma1, gamma2, R_th: float,
                      rtol: float = RATE_RTOL, **extra) -> SolveReport:
    """Assemble a report and test both rate constraints of the power problem."""
    K = W.shape[1]
    gamma1 = np.asarray(gamma1, dtype=float)
    gamma2 = np.asarray(gamma2, dtype=float)
    rates = combined_rate(gamma1, gamma2)
    relay_target = 2 * K * R_th
    user_target = 2 * R_th
    feasible = bool(rate_relay >= relay_target * (1 - rtol)
                    and np.all(rates >= user_target * (1 - rtol)))
    power = 0.5 * (np.linalg.norm(W) ** 2 + np.linalg.norm(U) ** 2)
    return SolveReport(feasible=feasible, total_power=float(power), relay_rate=float(rate_relay),
                       gamma1=gamma1, gamma2=gamma2, user_rates=rates, **extra)
