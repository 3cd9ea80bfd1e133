"""Full-system solves: relay + RIS, relay only, and RIS only."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import relay_precoder as rp
from .channel_model import ChannelSet
from .config import SystemConfig
from .phase_search import SearchSettings, block_coordinate_descent, coordinate_descent
from .rate_model import RATE_RTOL, BeamformerSolution, PhaseConfig, SolveReport, first_hop_user_rows, sinr

SCENARIOS = ("relay_ris_duality", "relay_ris_zf", "relay_only", "ris_only")


def solve_relay_ris(channels: ChannelSet, config: SystemConfig,
                    settings: SearchSettings = SearchSettings(),
                    init: PhaseConfig | None = None) -> SolveReport:
    """Half-duplex relay and RIS: beamformers plus searched RIS phases."""
    _, report, _ = coordinate_descent(channels, config, settings, init)
    report.diagnostics["scenario"] = f"relay_ris_{settings.inner_solver}"
    return report


def solve_relay_only(channels: ChannelSet, config: SystemConfig,
                     inner_solver: str = "duality") -> SolveReport:
    """Same procedure with the reflected paths removed altogether.

    An RIS with all-zero phases still reflects, so "no RIS" means dropping
    its channels rather than zeroing the phase indices.
    """
    settings = SearchSettings(inner_solver=inner_solver)
    _, report, _ = coordinate_descent(channels.without_ris(), config, settings)
    report.diagnostics["scenario"] = "relay_only"
    return report


def _single_hop_batch(channels, theta1, config, inner_solver, beta0=None):
    """BS -> users in full duplex, SINR target 2**R_th - 1 for every user."""
    K, s2 = channels.K, config.sigma2
    rows = first_hop_user_rows(channels, np.atleast_2d(theta1), config.b)
    rows = np.broadcast_to(rows, (np.atleast_2d(theta1).shape[0], K, channels.M))
    eta = np.full(rows.shape[:2], 2.0 ** config.R_th - 1.0)
    if channels.M < K:
        W = np.full((rows.shape[0], channels.M, K), np.nan + 0j)
        q, beta, ok = np.zeros_like(eta), np.zeros_like(eta), np.zeros(len(eta), bool)
    else:
        W, q, beta, ok, _ = rp.solve_targets_batch(rows, eta, s2, inner_solver, beta0)
    with np.errstate(invalid="ignore"):
        gamma = sinr(rows, W, s2)
        rates = np.log2(1.0 + gamma)
    feasible = ok & np.all(rates >= config.R_th * (1 - RATE_RTOL), axis=-1)
    # full-time transmission: twice the half-duplex 1/2 sum ||w_k||^2
    power = np.sum(np.abs(W) ** 2, axis=(-2, -1))
    return np.where(feasible, power, np.inf), feasible, gamma, rates, W, q, beta


def solve_ris_only(channels: ChannelSet, config: SystemConfig,
                   settings: SearchSettings = SearchSettings()) -> SolveReport:
    """No relay: single-hop downlink through the direct and reflected paths.

    Only theta1 exists here; it is searched with the same block descent over
    L coordinates. The reported power is ``sum ||w_k||^2``.
    """
    L, b = channels.L, config.b
    settings.check(L, b)
    warm = {"beta": None}

    def score(cands):
        beta0 = None if warm["beta"] is None else np.broadcast_to(warm["beta"], (len(cands), channels.K))
        obj, feas, gamma, _, _, _, beta = _single_hop_batch(channels, cands, config,
                                                            settings.inner_solver, beta0)
        best = np.argmin(obj)
        if np.isfinite(obj[best]):
            warm["beta"] = beta[best]
        return obj, np.nan_to_num(gamma.min(axis=-1), nan=-np.inf)

    x, _, trace, evaluations = block_coordinate_descent(score, np.zeros(L, dtype=int), 2 ** b, settings)
    obj, feas, gamma, rates, W, q, beta = _single_hop_batch(channels, x, config, settings.inner_solver)
    phases = PhaseConfig(x, np.zeros(L, dtype=int), b)
    K = channels.K
    sol = BeamformerSolution(W=W[0], U=np.zeros((0, K), dtype=complex), P=q[0], q=np.zeros(K))
    return SolveReport(
        feasible=bool(feas[0]), total_power=float(obj[0]), relay_rate=float("nan"),
        gamma1=gamma[0], gamma2=np.zeros(K), user_rates=rates[0], solution=sol, phases=phases,
        diagnostics={"scenario": "ris_only", "inner_solver": settings.inner_solver,
                     "beta": beta[0], "trace": trace, "rounds": len(trace) - 1,
                     "evaluations": evaluations},
    )


def solve_scenario(name: str, channels: ChannelSet, config: SystemConfig,
                   settings: SearchSettings = SearchSettings()) -> SolveReport:
    if name == "relay_ris_duality":
        return solve_relay_ris(channels, config, replace(settings, inner_solver="duality"))
    if name == "relay_ris_zf":
        return solve_relay_ris(channels, config, replace(settings, inner_solver="zf"))
    if name == "relay_only":
        return solve_relay_only(channels, config)
    if name == "ris_only":
        return solve_ris_only(channels, config, replace(settings, inner_solver="duality"))
    raise ValueError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
