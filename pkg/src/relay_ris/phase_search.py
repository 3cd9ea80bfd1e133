"""Discrete RIS phase optimization by blockwise exhaustive coordinate descent.

The coordinates are the 2L phase indices (theta1 then theta2). Each step
fixes all but a block of ``r`` coordinates, enumerates the ``2**(r*b)``
assignments of that block, and keeps the best one. Candidates of a block are
scored together through the batched inner solvers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import relay_precoder as rp
from .bs_precoder import waterfill
from .channel_model import ChannelSet
from .config import SystemConfig
from .rate_model import (RATE_RTOL, BeamformerSolution, PhaseConfig, SolveReport,
                         combined_rate, effective_first_hop, first_hop_user_rows,
                         second_hop_user_rows, sinr)

MAX_BLOCK_CANDIDATES = 2 ** 16
INNER_SOLVERS = ("duality", "zf")


@dataclass(frozen=True)
class SearchSettings:
    r: int = 1
    rounds_max: int = 3
    improvement_tol: float = 1e-4
    inner_solver: str = "duality"

    def __post_init__(self):
        if self.r < 1:
            raise ValueError(f"block size r must be >= 1, got {self.r}")
        if self.rounds_max < 1:
            raise ValueError(f"rounds_max must be >= 1, got {self.rounds_max}")
        if self.improvement_tol < 0:
            raise ValueError("improvement_tol must be nonnegative")
        if self.inner_solver not in INNER_SOLVERS:
            raise ValueError(f"inner_solver must be one of {INNER_SOLVERS}")

    def check(self, n_coords: int, b: int):
        if n_coords and self.r > n_coords:
            raise ValueError(f"block size r={self.r} exceeds {n_coords} coordinates")
        if 2 ** (min(self.r, max(n_coords, 1)) * b) > MAX_BLOCK_CANDIDATES:
            raise ValueError(f"2^(r*b) = 2^{self.r * b} candidates per block exceeds the "
                             f"cap of {MAX_BLOCK_CANDIDATES}")


@dataclass
class BatchEvaluation:
    """Inner-solver outcome for C phase candidates (leading axis)."""

    objective: np.ndarray      # inf where infeasible
    feasible: np.ndarray
    relay_rate: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    W: np.ndarray
    U: np.ndarray
    P: np.ndarray
    q: np.ndarray
    beta: np.ndarray
    fp_iterations: int = 0
    failures: list = field(default_factory=list)


def _batch_waterfill(H, K, R_th, sigma2):
    """SVD + water-filling per candidate; rank-deficient entries get W = 0."""
    C, N, M = H.shape
    _, s, Vh = np.linalg.svd(H)
    W = np.zeros((C, M, K), dtype=complex)
    P = np.zeros((C, K))
    ok = np.zeros(C, dtype=bool)
    if K > min(N, M):
        return W, P, ok
    tol = s[:, 0] * max(N, M) * np.finfo(float).eps
    for c in range(C):
        if s[c, K - 1] <= tol[c]:
            continue
        wf = waterfill(s[c, :K] ** 2, 2 * K * R_th, sigma2)
        W[c] = Vh[c, :K].conj().T * np.sqrt(wf.P)
        P[c] = wf.P
        ok[c] = True
    return W, P, ok


def _relay_rates(H, W, sigma2):
    A = H @ W
    lam = np.linalg.eigvalsh(np.swapaxes(A.conj(), -1, -2) @ A)
    return np.sum(np.log2(1.0 + np.clip(lam, 0.0, None) / sigma2), axis=-1)


def evaluate_batch(channels: ChannelSet, theta1, theta2, config: SystemConfig,
                   inner_solver: str = "duality", beta0=None) -> BatchEvaluation:
    """Score C candidate phase pairs (arrays of shape (C, L)) for the relay+RIS system."""
    K, R_th, s2, b = channels.K, config.R_th, config.sigma2, config.b
    theta1 = np.atleast_2d(theta1)
    theta2 = np.atleast_2d(theta2)
    C = max(len(theta1), len(theta2))
    if len(theta1) > 1 and np.all(theta1 == theta1[0]):
        # theta2-only block: the first hop is common to all candidates
        theta1 = theta1[:1]
    H = effective_first_hop(channels, theta1, b)
    rows1 = first_hop_user_rows(channels, theta1, b)
    W, P, ok_bs = _batch_waterfill(H, K, R_th, s2)
    gamma1 = sinr(rows1, W, s2)
    H, W, P, ok_bs, gamma1 = (np.broadcast_to(a, (C,) + a.shape[1:]) for a in (H, W, P, ok_bs, gamma1))
    rows2 = np.broadcast_to(second_hop_user_rows(channels, theta2, b), (C, K, channels.N))

    eta = rp.targets_from_sinr(gamma1, R_th)
    if channels.N < K:
        U = np.full((C, channels.N, K), np.nan + 0j)
        q, beta, ok_relay, iters = np.zeros_like(eta), np.zeros_like(eta), np.zeros(len(eta), bool), 0
    else:
        U, q, beta, ok_relay, iters = rp.solve_targets_batch(rows2, eta, s2, inner_solver, beta0)
    rate_r = _relay_rates(H, W, s2)
    with np.errstate(invalid="ignore"):
        gamma2 = sinr(rows2, U, s2)
    rates = combined_rate(gamma1, gamma2)
    feasible = (ok_bs & ok_relay
                & (rate_r >= 2 * K * R_th * (1 - RATE_RTOL))
                & np.all(rates >= 2 * R_th * (1 - RATE_RTOL), axis=-1))
    power = 0.5 * (np.sum(np.abs(W) ** 2, axis=(-2, -1)) + np.sum(np.abs(U) ** 2, axis=(-2, -1)))
    objective = np.where(feasible, power, np.inf)
    failures = []
    if not np.all(ok_bs):
        failures.append("rank-deficient first hop")
    if not np.all(ok_relay):
        failures.append(f"{inner_solver} relay solve failed")
    return BatchEvaluation(objective=objective, feasible=feasible, relay_rate=rate_r,
                           gamma1=gamma1, gamma2=gamma2, W=W, U=U, P=P, q=q, beta=beta,
                           fp_iterations=iters, failures=failures)


def evaluate_phases(channels: ChannelSet, phases: PhaseConfig, config: SystemConfig,
                    inner_solver: str = "duality") -> SolveReport:
    """Solve the beamformers for fixed phases and report power and rates.

    Inner-solver failures never raise: they come back as ``feasible=False``
    with ``total_power = inf``.
    """
    ev = evaluate_batch(channels, phases.theta1[None], phases.theta2[None], config, inner_solver)
    c = 0
    sol = BeamformerSolution(W=ev.W[c], U=ev.U[c], P=ev.P[c], q=ev.q[c])
    return SolveReport(
        feasible=bool(ev.feasible[c]),
        total_power=float(ev.objective[c]),
        relay_rate=float(ev.relay_rate[c]),
        gamma1=ev.gamma1[c], gamma2=ev.gamma2[c],
        user_rates=combined_rate(ev.gamma1[c], ev.gamma2[c]),
        solution=sol, phases=phases,
        diagnostics={"inner_solver": inner_solver, "fp_iterations": ev.fp_iterations,
                     "beta": ev.beta[c], "failures": ev.failures},
    )


def _better(o_new, t_new, o_cur, t_cur) -> bool:
    if o_new < o_cur:
        return True
    return np.isinf(o_new) and np.isinf(o_cur) and t_new > t_cur


def block_coordinate_descent(score: Callable, init, n_levels: int, settings: SearchSettings):
    """Generic blockwise exhaustive descent over integer coordinates.

    ``score(cands)`` maps a (C, n) integer array to ``(objective, tiebreak)``;
    lower objective wins, and among infinite objectives the larger tiebreak.

    Returns ``(best, objective, trace, evaluations)`` where ``trace`` holds the
    objective at the start and after every round.
    """
    x = np.array(init, dtype=int)
    n = x.size
    obj, tb = score(x[None])
    cur_o, cur_t = float(obj[0]), float(tb[0])
    trace = [cur_o]
    evaluations = 1
    blocks = [np.arange(i, min(i + settings.r, n)) for i in range(0, n, settings.r)]
    for _ in range(settings.rounds_max if n else 0):
        start = cur_o
        for blk in blocks:
            combos = np.array(list(itertools.product(range(n_levels), repeat=blk.size)))
            cands = np.repeat(x[None], len(combos), axis=0)
            cands[:, blk] = combos
            o, t = score(cands)
            evaluations += len(cands)
            best = np.lexsort((-t, o))[0]
            if _better(o[best], t[best], cur_o, cur_t):
                x = cands[best]
                cur_o, cur_t = float(o[best]), float(t[best])
        trace.append(cur_o)
        if np.isfinite(start):
            if start - cur_o < settings.improvement_tol:
                break
        elif not np.isfinite(cur_o):
            break
    return x, cur_o, trace, evaluations


def coordinate_descent(channels: ChannelSet, config: SystemConfig,
                       settings: SearchSettings = SearchSettings(),
                       init: PhaseConfig | None = None):
    """Optimize both phase vectors around the inner beamforming solvers.

    Returns ``(phases, report, trace)``; ``trace`` lists the objective at the
    initial point and after each round, and is nonincreasing.
    """
    L, b = channels.L, config.b
    settings.check(2 * L, b)
    if init is None:
        init = PhaseConfig.zeros(L, b)
    warm = {"beta": None}

    def score(cands):
        beta0 = None if warm["beta"] is None else np.broadcast_to(warm["beta"], (len(cands), channels.K))
        ev = evaluate_batch(channels, cands[:, :L], cands[:, L:], config,
                            settings.inner_solver, beta0=beta0)
        best = np.argmin(ev.objective)
        if np.isfinite(ev.objective[best]):
            warm["beta"] = ev.beta[best]
        return ev.objective, ev.relay_rate

    x, _, trace, evaluations = block_coordinate_descent(score, init.flat(), 2 ** b, settings)
    phases = PhaseConfig.from_flat(x, b)
    report = evaluate_phases(channels, phases, config, settings.inner_solver)
    report.diagnostics.update(rounds=len(trace) - 1, trace=trace, evaluations=evaluations,
                              initial_power=trace[0])
    return phases, report, trace
