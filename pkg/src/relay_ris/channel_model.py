"""Node placement and random channel realizations.

All positions live in a 2-D plane with the BS at the origin and the centre of
the user disc on the positive x axis. BS and relay carry half-wavelength ULAs
whose axis is the y axis (broadside along x); the RIS is a horizontal
half-wavelength UPA. Links among BS, relay and RIS are Rician, every link that
ends at a user is Rayleigh.

User-facing channels are stored as *rows*: ``h_T[k]`` is the 1 x M row that
multiplies the BS transmit vector for user k, and likewise for ``h_R`` and
``h_I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig

LOS_LOSS_DB = 35.95
NLOS_LOSS_DB = 33.95
LOS_EXPONENT = 2.2
NLOS_EXPONENT = 3.67


@dataclass(frozen=True)
class Geometry:
    bs: np.ndarray
    relay: np.ndarray
    ris: np.ndarray
    users: np.ndarray  # (K, 2)

    def distance(self, a: str, b: str) -> float | np.ndarray:
        """Distance between two named nodes; ``"users"`` gives a length-K array."""
        pa, pb = getattr(self, a), getattr(self, b)
        return np.linalg.norm(pa - pb, axis=-1)

    @property
    def distances(self) -> dict:
        return {
            "bs_relay": float(self.distance("bs", "relay")),
            "bs_ris": float(self.distance("bs", "ris")),
            "ris_relay": float(self.distance("ris", "relay")),
            "bs_users": self.distance("users", "bs"),
            "relay_users": self.distance("users", "relay"),
            "ris_users": self.distance("users", "ris"),
        }


@dataclass(frozen=True)
class ChannelSet:
    H_TR: np.ndarray  # (N, M)  BS -> relay
    H_TI: np.ndarray  # (L, M)  BS -> RIS
    H_IR: np.ndarray  # (N, L)  RIS -> relay; relay -> RIS is H_IR^H
    h_T: np.ndarray   # (K, M)  rows, BS -> user
    h_R: np.ndarray   # (K, N)  rows, relay -> user
    h_I: np.ndarray   # (K, L)  rows, RIS -> user

    @property
    def K(self) -> int:
        return self.h_T.shape[0]

    @property
    def M(self) -> int:
        return self.H_TR.shape[1]

    @property
    def N(self) -> int:
        return self.H_TR.shape[0]

    @property
    def L(self) -> int:
        return self.H_TI.shape[0]

    def without_ris(self) -> "ChannelSet":
        """Same realization with every reflected path removed (L = 0)."""
        return ChannelSet(
            H_TR=self.H_TR,
            H_TI=np.zeros((0, self.M), dtype=complex),
            H_IR=np.zeros((self.N, 0), dtype=complex),
            h_T=self.h_T,
            h_R=self.h_R,
            h_I=np.zeros((self.K, 0), dtype=complex),
        )


def build_geometry(config: SystemConfig, rng: np.random.Generator) -> Geometry:
    centre = np.array([config.d_BS_users, 0.0])
    radius = config.rho * np.sqrt(rng.uniform(size=config.K))
    angle = rng.uniform(0.0, 2.0 * np.pi, size=config.K)
    users = centre + np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    relay = np.array([config.d_relay, 0.0])
    ris = relay + np.array([0.0, config.ris_offset])
    return Geometry(bs=np.zeros(2), relay=relay, ris=ris, users=users)


def path_loss(d, los: bool, G_t: float = 5.0, G_r: float = 0.0):
    """Large-scale power gain ``C / d**alpha`` (linear)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if los:
        C, alpha = 10.0 ** ((G_t + G_r - LOS_LOSS_DB) / 10.0), LOS_EXPONENT
    else:
        C, alpha = 10.0 ** ((G_t + G_r - NLOS_LOSS_DB) / 10.0), NLOS_EXPONENT
    out = C / d ** alpha
    return float(out) if out.ndim == 0 else out


def steering_vector_ula(n_elems: int, angle: float) -> np.ndarray:
    """Half-wavelength ULA response; ``angle`` is measured from broadside."""
    return np.exp(1j * np.pi * np.arange(n_elems) * np.sin(angle))


def upa_shape(L: int) -> tuple[int, int]:
    """Squarest ``rows x cols`` factorization of L with rows <= cols."""
    rows = int(math.isqrt(L))
    while rows > 1 and L % rows:
        rows -= 1
    return rows, L // max(rows, 1)


def steering_vector_upa(n_rows: int, n_cols: int, azimuth: float) -> np.ndarray:
    """Half-wavelength horizontal UPA response for an in-plane direction.

    Rows are spaced along x, columns along y; the result is flattened
    row-major to length ``n_rows * n_cols``.
    """
    row = np.arange(n_rows)[:, None] * np.cos(azimuth)
    col = np.arange(n_cols)[None, :] * np.sin(azimuth)
    return np.exp(1j * np.pi * (row + col)).ravel()


def _direction(src: np.ndarray, dst: np.ndarray) -> float:
    dx, dy = dst - src
    return math.atan2(dy, dx)


def _array_response(kind: str, n: int, angle: float) -> np.ndarray:
    if kind == "ula":
        return steering_vector_ula(n, angle)
    return steering_vector_upa(*upa_shape(n), angle)


def los_matrix(tx_pos, tx_kind, n_tx, rx_pos, rx_kind, n_rx) -> np.ndarray:
    """Rank-one far-field LoS component ``a_rx a_tx^H`` of shape (n_rx, n_tx)."""
    a_tx = _array_response(tx_kind, n_tx, _direction(tx_pos, rx_pos))
    a_rx = _array_response(rx_kind, n_rx, _direction(rx_pos, tx_pos))
    return np.outer(a_rx, a_tx.conj())


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def rician_link(los: np.ndarray, beta: float, kappa: float, rng: np.random.Generator) -> np.ndarray:
    nlos = _cn(rng, los.shape)
    if math.isinf(kappa):
        return np.sqrt(beta) * los
    return np.sqrt(beta) * (np.sqrt(kappa / (1 + kappa)) * los + np.sqrt(1 / (1 + kappa)) * nlos)


def sample_channels(geometry: Geometry, config: SystemConfig, rng: np.random.Generator) -> ChannelSet:
    M, N, L, K = config.M, config.N, config.L, config.K
    kappa = config.rician_K
    g = geometry
    d = g.distances

    def pl(dist, los):
        return path_loss(dist, los, config.G_t, config.G_r)

    H_TR = rician_link(los_matrix(g.bs, "ula", M, g.relay, "ula", N),
                       pl(d["bs_relay"], True), kappa, rng)
    if L > 0:
        H_TI = rician_link(los_matrix(g.bs, "ula", M, g.ris, "upa", L),
                           pl(d["bs_ris"], True), kappa, rng)
        H_IR = rician_link(los_matrix(g.ris, "upa", L, g.relay, "ula", N),
                           pl(d["ris_relay"], True), kappa, rng)
    else:
        H_TI = np.zeros((0, M), dtype=complex)
        H_IR = np.zeros((N, 0), dtype=complex)

    h_T = np.sqrt(pl(d["bs_users"], False))[:, None] * _cn(rng, (K, M))
    h_R = np.sqrt(pl(d["relay_users"], False))[:, None] * _cn(rng, (K, N))
    h_I = np.sqrt(pl(d["ris_users"], False))[:, None] * _cn(rng, (K, L))
    return ChannelSet(H_TR=H_TR, H_TI=H_TI, H_IR=H_IR, h_T=h_T, h_R=h_R, h_I=h_I)


def draw_realization(config: SystemConfig, rng: np.random.Generator | int | None = None):
    """Geometry and channels from one stream (defaults to ``config.seed``)."""
    if rng is None:
        rng = config.seed
    rng = np.random.default_rng(rng)
    geometry = build_geometry(config, rng)
    return geometry, sample_channels(geometry, config, rng)
