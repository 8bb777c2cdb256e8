"""Full-pilot cascaded LS baseline that ignores the two-timescale structure.

Every coherence block, all users transmit orthogonal pilots over N + 1
sub-frames while the surface runs the DFT reflection schedule, and the
cascaded channels plus direct channels are estimated jointly by exact least
squares.  The design matrix formed by the reflection vectors with an appended
all-ones column has orthogonal columns, so the LS solve is a single scaled
adjoint product.  The scheme is deliberately idealized; it lower-bounds the
accuracy of full-overhead estimators at a pilot cost of (N + 1) * K slots per
block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RandomStream, SystemConfig
from .channels import ChannelRealization
from .duallink import build_reflection_schedule
from .mobile import UplinkPilotPlan, despread, orthogonal_pilots, simulate_uplink_frame

__all__ = ["CascadedEstimate", "estimate_cascaded_ls"]


@dataclass(frozen=True, eq=False)
class CascadedEstimate:
    """Direct estimates of the cascaded and BS-UE channels, with slot cost."""

    C_hat: np.ndarray  # (K, M, N) complex
    h_hat: np.ndarray  # (K, M) complex
    pilot_slots: int   # (N + 1) * K


def estimate_cascaded_ls(
    real: ChannelRealization, cfg: SystemConfig, stream: RandomStream
) -> CascadedEstimate:
    """Estimate ``{C_k, h_k}`` from one full-overhead uplink pilot frame."""
    M, N = real.G.shape
    K = real.f.shape[0]
    sched = build_reflection_schedule(N)
    plan = UplinkPilotPlan(X=orthogonal_pilots(K, cfg.P_UE), Phi_tilde=sched.Phi_bar)
    obs = simulate_uplink_frame(real, plan, cfg, stream)

    # Per UE and sub-frame t, despreading leaves y_t = C_k phi_t + h_k + noise.
    # Rows of D are [phi_t^T, 1]; D^H D = (N + 1) I, so LS is D^H Y / (N + 1).
    D = np.hstack([sched.Phi_bar.T, np.ones((N + 1, 1))])
    C_hat = np.empty((K, M, N), dtype=complex)
    h_hat = np.empty((K, M), dtype=complex)
    for k in range(K):
        Y_k = despread(obs, plan, k).reshape(N + 1, M)
        U = D.conj().T @ Y_k / (N + 1)  # rows 0..N-1: columns of C_k; row N: h_k
        C_hat[k] = U[:N].T
        h_hat[k] = U[N]
    return CascadedEstimate(C_hat=C_hat, h_hat=h_hat, pilot_slots=(N + 1) * K)
