"""NMSE metrics, normalized-objective summaries, and pilot-overhead accounting.

All NMSE figures are ratios of expectations: error energy and channel energy
are summed over trials separately before dividing, never averaged per trial.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import SystemConfig, tau_min

__all__ = [
    "MetricsReport",
    "OverheadReport",
    "nmse_cascaded",
    "nmse_direct",
    "nmse_sign_aligned",
    "fbar_statistics",
    "pilot_overhead",
]


@dataclass(frozen=True, eq=False)
class MetricsReport:
    """Bundle of accuracy figures for one sweep point."""

    nmse_C: float               # cascaded-channel NMSE
    nmse_h: float               # direct BS-UE channel NMSE
    nmse_G_signaligned: float   # diagnostic: BS-RIS NMSE after per-column sign alignment
    fbar_mean: np.ndarray | None = None  # mean normalized objective per outer iteration
    fbar_std: np.ndarray | None = None


@dataclass(frozen=True)
class OverheadReport:
    """Pilot-slot accounting per small-timescale coherence block.

    ``tau_avg = tau1 / alpha + tau2``: the quasi-static overhead amortizes
    over the timescale ratio while the mobile overhead recurs every block.
    """

    tau1: int            # quasi-static slots: (N + 1) * L
    tau2: int            # mobile slots: K * ceil((M + N) / M)
    tau_avg: float       # average slots per small-timescale block
    baseline_mvu: int    # full cascaded estimation: (M + N) * K
    baseline_reduced: int  # reference-user scheme: K + N + max(K-1, ceil((K-1) N / M))


def _ratio_of_sums(
    estimates: Iterable[np.ndarray], truths: Iterable[np.ndarray]
) -> float:
    num = 0.0
    den = 0.0
    for est, tru in zip(estimates, truths, strict=True):
        if est.shape != tru.shape:
            raise ValueError(f"shape mismatch: estimate {est.shape} vs truth {tru.shape}")
        num += float(np.sum(np.abs(est - tru) ** 2))
        den += float(np.sum(np.abs(tru) ** 2))
    if den == 0.0:
        raise ValueError("NMSE undefined: truth has zero energy")
    return num / den


def nmse_cascaded(
    C_hats: Sequence[np.ndarray], C_trues: Sequence[np.ndarray]
) -> float:
    """NMSE of the cascaded channels over trials (Frobenius energies, all users)."""
    return _ratio_of_sums(C_hats, C_trues)


def nmse_direct(h_hats: Sequence[np.ndarray], h_trues: Sequence[np.ndarray]) -> float:
    """NMSE of the direct BS-UE channels over trials."""
    return _ratio_of_sums(h_hats, h_trues)


def nmse_sign_aligned(G_hat: np.ndarray, G: np.ndarray) -> float:
    """BS-RIS NMSE after resolving the per-column sign gauge.

    Pairwise products only determine each column up to a global sign, so the
    raw Frobenius error is meaningless; each column is compared against the
    better of +/- the truth.
    """
    if G_hat.shape != G.shape:
        raise ValueError(f"shape mismatch: {G_hat.shape} vs {G.shape}")
    err_plus = np.sum(np.abs(G_hat - G) ** 2, axis=0)
    err_minus = np.sum(np.abs(G_hat + G) ** 2, axis=0)
    den = float(np.sum(np.abs(G) ** 2))
    if den == 0.0:
        raise ValueError("NMSE undefined: truth has zero energy")
    return float(np.sum(np.minimum(err_plus, err_minus))) / den


def fbar_statistics(
    objectives: np.ndarray, denominator: float
) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of the normalized objective per iteration.

    ``objectives`` stacks padded per-column trajectories, one row per
    (trial, element) subproblem; the denominator is the batch estimate of the
    all-zero objective's expectation.
    """
    if denominator <= 0:
        raise ValueError(f"normalization denominator must be positive, got {denominator}")
    fbar = objectives / denominator
    return fbar.mean(axis=0), fbar.std(axis=0)


def pilot_overhead(cfg: SystemConfig) -> OverheadReport:
    """Slot counts of the two-timescale scheme and the full-overhead baselines."""
    tau1 = (cfg.N + 1) * cfg.L
    tau2 = cfg.K * tau_min(cfg.M, cfg.N)
    tau_avg = tau1 / cfg.alpha_timescale + tau2
    reduced_tail = max(cfg.K - 1, -(-(cfg.K - 1) * cfg.N // cfg.M))
    return OverheadReport(
        tau1=tau1,
        tau2=tau2,
        tau_avg=tau_avg,
        baseline_mvu=(cfg.M + cfg.N) * cfg.K,
        baseline_reduced=cfg.K + cfg.N + reduced_tail,
    )
