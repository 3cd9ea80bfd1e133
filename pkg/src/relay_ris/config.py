"""System parameters shared by every module."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watts_to_dbm(p_w: float) -> float:
    """Convert watts to dBm; nonpositive power maps to -inf, inf stays inf."""
    if p_w <= 0.0:
        return -math.inf
    return 10.0 * math.log10(p_w * 1000.0)


@dataclass(frozen=True)
class SystemConfig:
    """Scalar parameters of one relay + RIS downlink deployment.

    Distances are in meters, antenna gains in dBi, ``sigma2`` in watts and
    ``R_th`` in bits/s/Hz. ``L = 0`` describes a deployment without a surface.
    """

    M: int = 10
    N: int = 9
    L: int = 50
    K: int = 4
    b: int = 2
    sigma2: float = dbm_to_watts(-94.0)
    R_th: float = 2.0
    d_BS_users: float = 300.0
    rho: float = 40.0
    d_relay: float = 150.0
    rician_K: float = 10.0
    G_t: float = 5.0
    G_r: float = 0.0
    ris_offset: float = 1.0
    seed: int = 0

    def __post_init__(self):
        problems = []
        if self.K < 1:
            problems.append(f"K must be >= 1, got {self.K}")
        if self.M < self.K:
            problems.append(f"M={self.M} must be >= K={self.K}")
        if self.N < self.K:
            problems.append(f"N={self.N} must be >= K={self.K}")
        if self.L < 0:
            problems.append(f"L must be >= 0, got {self.L}")
        if self.b < 1:
            problems.append(f"b must be >= 1, got {self.b}")
        if not self.sigma2 > 0:
            problems.append(f"sigma2 must be > 0, got {self.sigma2}")
        if not self.R_th > 0:
            problems.append(f"R_th must be > 0, got {self.R_th}")
        if not 0 < self.d_relay < self.d_BS_users:
            problems.append(
                f"need 0 < d_relay < d_BS_users, got {self.d_relay}, {self.d_BS_users}")
        if self.rho < 0:
            problems.append(f"rho must be >= 0, got {self.rho}")
        if self.rician_K < 0:
            problems.append(f"rician_K must be >= 0, got {self.rician_K}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def n_levels(self) -> int:
        return 2 ** self.b

    def replace(self, **changes) -> "SystemConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SystemConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValueError(f"unknown system parameters: {sorted(unknown)}")
        kwargs = {}
        for name, value in data.items():
            if name in _INT_FIELDS:
                if isinstance(value, bool) or int(value) != value:
                    raise ValueError(f"{name} must be an integer, got {value!r}")
                kwargs[name] = int(value)
            else:
                kwargs[name] = float(value)
        return cls(**kwargs)


_INT_FIELDS = ("M", "N", "L", "K", "b", "seed")
