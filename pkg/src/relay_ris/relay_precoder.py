"""Relay precoder for residual SINR targets.

Two routes: the optimal one through uplink-downlink duality (fixed point on
the dual uplink powers followed by a downlink power solve), and zero-forcing.
User channels enter as rows ``h_k`` (shape ``(K, N)``), i.e. the received
amplitude of beam u is ``h_k @ u``. Every function also accepts a leading batch
dimension, which the phase search uses to score several candidates at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError, InfeasibleTargetsError, SingularChannelError
from .rate_model import first_hop_user_rows, sinr

FP_TOL = 1e-10
FP_MAX_ITERS = 10_000


@dataclass
class DualityState:
    beta: np.ndarray
    u_bar: np.ndarray  # (N, K) unit-norm columns
    D: np.ndarray
    q: np.ndarray
    iterations: int = 0


def targets_from_sinr(gamma1, R_th: float) -> np.ndarray:
    """Phase-2 SINR each user still needs after phase 1, clamped at zero."""
    return np.maximum(0.0, 2.0 ** (2 * R_th) - 1.0 - np.asarray(gamma1, dtype=float))


def residual_targets(channels, theta1, W, R_th: float, sigma2: float, b: int) -> np.ndarray:
    gamma1 = sinr(first_hop_user_rows(channels, theta1, b), W, sigma2)
    return targets_from_sinr(gamma1, R_th)


def _regularized(rows, beta, sigma2):
    """``I + sum_i beta_i/sigma2 h_i^H h_i`` and its solve against every h_k^H."""
    cols = np.swapaxes(rows.conj(), -1, -2)                 # (..., N, K)
    A = (cols * (beta[..., None, :] / sigma2)) @ rows
    A = A + np.eye(rows.shape[-1])
    return np.linalg.solve(A, cols)                        # (..., N, K)


def _interference_quad(rows, beta, sigma2):
    """``h_k (I + sum_{i != k} beta_i/sigma2 h_i^H h_i)^{-1} h_k^H`` for every k."""
    K, N = rows.shape[-2:]
    cols = np.swapaxes(rows.conj(), -1, -2)
    w = np.where(np.eye(K, dtype=bool), 0.0, beta[..., None, :] / sigma2)
    A = (cols[..., None, :, :] * w[..., :, None, :]) @ rows[..., None, :, :] + np.eye(N)
    x = np.linalg.solve(A, rows.conj()[..., None])[..., 0]
    return np.einsum("...kn,...kn->...k", rows, x).real


def dual_power_map(rows, eta, beta, sigma2):
    """Right-hand side of the dual uplink power equation evaluated at ``beta``.

    ``beta_k = sigma2 / ((1 + 1/eta_k) h_k A^{-1} h_k^H)`` with the full
    regularized matrix ``A``; its fixed points are the dual powers.
    """
    rows = np.asarray(rows, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    X = _regularized(rows, beta, sigma2)
    quad = np.einsum("...kn,...nk->...k", rows, X).real
    active = eta > 0
    safe_eta = np.where(active, eta, 1.0)
    return np.where(active, sigma2 / ((1.0 + 1.0 / safe_eta) * quad), 0.0)


def fixed_point_batch(rows, eta, sigma2, tol=FP_TOL, max_iters=FP_MAX_ITERS, beta0=None):
    """Iterate the dual-power equation for every batch entry.

    The update uses the equivalent form ``beta_k = sigma2 eta_k / x_k`` where
    ``x_k`` leaves user k out of the regularized matrix (Sherman-Morrison on
    the full-matrix form). Same fixed point, but no self-term damping: the
    full-matrix form moves each step by only ``1/(1 + eta_k)`` of the gap.

    Returns ``(beta, converged, residual, iterations)`` without raising.
    """
    rows = np.asarray(rows, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    active = eta > 0
    beta = np.zeros(eta.shape) if beta0 is None else np.where(active, beta0, 0.0)
    done = ~active.any(axis=-1)
    residual = np.zeros(eta.shape[:-1])
    it = 0
    while not np.all(done) and it < max_iters:
        it += 1
        quad = _interference_quad(rows, beta, sigma2)
        with np.errstate(divide="ignore", invalid="ignore"):
            new = np.where(active, sigma2 * eta / quad, 0.0)
            res = np.max(np.abs(new - beta), axis=-1) / np.max(np.abs(new), axis=-1)
        res = np.where(np.isfinite(res), res, np.inf)
        # converged entries stay frozen while the rest of the batch iterates
        beta = np.where(done[..., None], beta, new)
        residual = np.where(done, residual, res)
        done = done | (res < tol)
    return beta, done, residual, it


def duality_fixed_point(h_RI, eta, sigma2, tol=FP_TOL, max_iters=FP_MAX_ITERS, beta0=None):
    """Dual uplink powers for SINR targets ``eta``.

    Started from zero the iteration is componentwise nondecreasing. Users with
    ``eta_k = 0`` keep ``beta_k = 0`` and drop out of the sums.

    Returns
    -------
    beta : ndarray
    iterations : int

    Raises
    ------
    ConvergenceError
        If the relative sup-norm step is still above ``tol`` after
        ``max_iters`` sweeps.
    """
    beta, done, residual, it = fixed_point_batch(h_RI, eta, sigma2, tol, max_iters, beta0)
    if not np.all(done):
        worst = float(np.max(residual))
        raise ConvergenceError(f"fixed point not converged after {it} iterations "
                               f"(residual {worst:.3e})", residual=worst, iterations=it)
    return beta, it


def beamformer_batch(rows, eta, beta, sigma2):
    """Downlink beams from converged dual powers.

    Returns ``(U, u_bar, D, q, ok)``; entries with ``ok == False`` had a
    singular coupling matrix or a nonpositive power and carry NaN beams.
    """
    rows = np.asarray(rows, dtype=complex)
    eta = np.asarray(eta, dtype=float)
    K = rows.shape[-2]
    active = eta > 0
    X = _regularized(rows, beta, sigma2)
    u_bar = X / np.linalg.norm(X, axis=-2, keepdims=True)
    G = np.abs(rows @ u_bar) ** 2                          # G[i, j] = |h_i u_j|^2
    eye = np.eye(K, dtype=bool)
    safe_eta = np.where(active, eta, 1.0)
    D = np.where(eye, G / safe_eta[..., :, None], -G)
    # inactive users: decouple with an identity row/column and zero power
    mask = active[..., :, None] & active[..., None, :]
    D = np.where(mask, D, np.where(eye, 1.0, 0.0))
    rhs = np.where(active, sigma2, 0.0)
    ok = np.ones(eta.shape[:-1], dtype=bool)
    try:
        q = np.linalg.solve(D, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        q = np.full(eta.shape, np.nan)
        for idx in np.ndindex(*eta.shape[:-1]):
            try:
                q[idx] = np.linalg.solve(D[idx], rhs[idx])
            except np.linalg.LinAlgError:
                ok[idx] = False
    ok &= np.all(np.isfinite(q), axis=-1) & np.all(~active | (q > 0), axis=-1)
    q = np.where(active, q, 0.0)
    U = u_bar * np.sqrt(np.clip(q, 0.0, None))[..., None, :]
    U = np.where(ok[..., None, None], U, np.nan)
    return U, u_bar, D, q, ok


def duality_beamformer(h_RI, eta, beta, sigma2):
    """Optimal relay beams ``u_k = sqrt(q_k) u_bar_k`` for targets ``eta``.

    Raises
    ------
    InfeasibleTargetsError
        If the coupling matrix is singular or a required power is not positive.
    """
    U, u_bar, D, q, ok = beamformer_batch(h_RI, eta, beta, sigma2)
    if not np.all(ok):
        raise InfeasibleTargetsError("SINR targets not attainable: coupling matrix singular "
                                     "or negative power")
    return U, DualityState(beta=np.asarray(beta), u_bar=u_bar, D=D, q=q)


def solve_duality(h_RI, eta, sigma2, tol=FP_TOL, max_iters=FP_MAX_ITERS, beta0=None):
    """Fixed point plus beam construction in one call."""
    beta, it = duality_fixed_point(h_RI, eta, sigma2, tol, max_iters, beta0)
    U, state = duality_beamformer(h_RI, eta, beta, sigma2)
    state.iterations = it
    return U, state


def zf_batch(rows, eta, sigma2):
    """Zero-forcing beams ``H^H (H H^H)^{-1} diag(sigma2 eta)^{1/2}`` with a rank flag."""
    rows = np.asarray(rows, dtype=complex)
    K, N = rows.shape[-2:]
    if K > N:
        return np.full(rows.shape[:-2] + (N, K), np.nan + 0j), np.zeros(rows.shape[:-2], bool)
    s = np.linalg.svd(rows, compute_uv=False)
    ok = s[..., -1] > s[..., 0] * max(K, N) * np.finfo(float).eps
    gram = rows @ np.swapaxes(rows.conj(), -1, -2)
    gram = np.where(ok[..., None, None], gram, np.eye(K))
    pinv = np.swapaxes(rows.conj(), -1, -2) @ np.linalg.inv(gram)
    U = pinv * np.sqrt(sigma2 * np.asarray(eta, dtype=float))[..., None, :]
    U = np.where(ok[..., None, None], U, np.nan)
    return U, ok


def zf_beamformer(h_RI, eta, sigma2):
    """Interference-nulling relay beams reaching SINR ``eta_k`` exactly.

    Raises
    ------
    SingularChannelError
        If the stacked K x N channel is not of full row rank.
    """
    U, ok = zf_batch(h_RI, eta, sigma2)
    if not np.all(ok):
        raise SingularChannelError("stacked user channel is rank deficient")
    return U


def solve_targets_batch(rows, eta, sigma2, inner, beta0=None):
    """Beams meeting SINR targets ``eta`` for a batch of channel rows.

    Returns ``(U, q, beta, ok, fixed_point_iterations)``; never raises.
    """
    C, K, T = rows.shape
    if inner == "zf":
        U, ok = zf_batch(rows, eta, sigma2)
        q = sigma2 * eta
        return U, q, np.zeros((C, K)), ok, 0
    beta, conv, _, iters = fixed_point_batch(rows, eta, sigma2, beta0=beta0)
    U, _, _, q, ok = beamformer_batch(rows, eta, beta, sigma2)
    return U, q, beta, ok & conv, iters
