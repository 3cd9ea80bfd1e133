"""BS precoder: eigenmode transmission with minimum-power water-filling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import RankDeficientError


@dataclass(frozen=True)
class WaterfillResult:
    P: np.ndarray
    mu: float
    lam: np.ndarray
    active_set: np.ndarray

    @property
    def total_power(self) -> float:
        return float(self.P.sum())


def waterfill(lam, rate_target: float, sigma2: float) -> WaterfillResult:
    """Minimum sum power over parallel modes reaching ``rate_target`` bits.

    Solves  min sum P_k  s.t.  sum log2(1 + P_k lam_k / sigma2) >= rate_target,
    giving ``P_k = (mu - sigma2/lam_k)^+``. Modes whose floor ``sigma2/lam_k``
    sits above the water level are switched off and the level recomputed.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or lam.size == 0 or np.any(lam <= 0):
        raise ValueError("eigenvalues must be a nonempty vector of positive values")
    order = np.argsort(-lam, kind="stable")
    snr_log = np.log2(lam[order] / sigma2)
    for n in range(lam.size, 0, -1):
        log_mu = (rate_target - snr_log[:n].sum()) / n
        # weakest active mode must sit strictly below the water level
        if log_mu > -snr_log[n - 1] or n == 1:
            break
    mu = 2.0 ** log_mu
    P = np.zeros_like(lam)
    active = order[:n]
    P[active] = mu - sigma2 / lam[active]
    return WaterfillResult(P=P, mu=float(mu), lam=lam, active_set=np.sort(active))


def svd_waterfill(H_TIR: np.ndarray, K: int, R_th: float, sigma2: float):
    """Precoder ``W = V diag(P)^{1/2}`` meeting the relay sum rate ``2 K R_th``.

    ``V`` holds the K dominant right singular vectors of ``H_TIR``; column k
    carries user k's stream.

    Raises
    ------
    RankDeficientError
        If ``H_TIR`` has fewer than K numerically nonzero singular values.
    """
    N, M = H_TIR.shape
    if K > min(N, M):
        raise RankDeficientError(f"K={K} streams exceed min(N, M)={min(N, M)}")
    _, s, Vh = np.linalg.svd(H_TIR)
    tol = s[0] * max(N, M) * np.finfo(float).eps if s.size else 0.0
    if s[K - 1] <= tol:
        raise RankDeficientError(f"effective channel has fewer than {K} nonzero singular values")
    lam = s[:K] ** 2
    result = waterfill(lam, 2 * K * R_th, sigma2)
    V = Vh[:K].conj().T
    W = V * np.sqrt(result.P)
    return W, result
