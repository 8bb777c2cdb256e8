"""Small-timescale uplink pilot phase and least-squares mobile-channel recovery.

Users transmit mutually orthogonal pilot sequences over tau0 sub-frames while
the surface applies random unit-modulus reflections.  Despreading with the
conjugate pilots separates the users exactly; stacking the sub-frames gives,
per user, an overdetermined linear model in the N + M unknown coefficients of
the RIS-UE and BS-UE channels, solved by least squares with the estimated
BS-RIS channel inside the measurement matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RandomStream, SystemConfig
from .channels import ChannelRealization, complex_normal

__all__ = [
    "UplinkPilotPlan",
    "UplinkObservation",
    "MeasurementMatrix",
    "MobileEstimate",
    "RankDeficiencyError",
    "orthogonal_pilots",
    "generate_pilot_plan",
    "simulate_uplink_frame",
    "despread",
    "assemble_measurement_matrix",
    "ls_estimate",
    "estimate_mobile",
]

# Condition number above which a measurement matrix is rejected and the
# reflection schedule redrawn.
CONDITION_LIMIT = 1e10


class RankDeficiencyError(RuntimeError):
    """Measurement matrix too ill-conditioned for a trustworthy LS solve."""

    def __init__(self, condition: float):
        super().__init__(
            f"measurement matrix condition number {condition:.3e} exceeds {CONDITION_LIMIT:.0e}; "
            "redraw the reflection schedule"
        )
        self.condition = condition


@dataclass(frozen=True, eq=False)
class UplinkPilotPlan:
    """Orthogonal UE pilots and the random reflection schedule of one frame.

    Column k of ``X`` is UE k's length-K pilot sequence with
    ``x_k^H x_k = K * P_UE`` and zero cross-correlation; column t of
    ``Phi_tilde`` is the unit-modulus reflection vector of sub-frame t.
    """

    X: np.ndarray          # (K, K) complex
    Phi_tilde: np.ndarray  # (N, tau0) complex, unit modulus

    @property
    def n_subframes(self) -> int:
        return self.Phi_tilde.shape[1]


def orthogonal_pilots(K: int, P_UE: float) -> np.ndarray:
    """Columns of the K-point unitary DFT scaled so each sequence has energy K * P_UE."""
    grid = np.arange(K)
    dft = np.exp(-2j * np.pi * np.outer(grid, grid) / K) / np.sqrt(K)
    return dft * np.sqrt(K * P_UE)


def generate_pilot_plan(cfg: SystemConfig, stream: RandomStream) -> UplinkPilotPlan:
    """Build the pilot plan: DFT-based sequences, i.i.d. uniform reflection phases."""
    phases = stream.rng.uniform(0.0, 2.0 * np.pi, size=(cfg.N, cfg.tau0))
    return UplinkPilotPlan(X=orthogonal_pilots(cfg.K, cfg.P_UE), Phi_tilde=np.exp(1j * phases))


@dataclass(frozen=True, eq=False)
class UplinkObservation:
    """Received uplink pilots: ``Y[t]`` is the M x K sub-frame-t pilot block."""

    Y: np.ndarray  # (tau0, M, K) complex


def simulate_uplink_frame(
    real: ChannelRealization,
    plan: UplinkPilotPlan,
    cfg: SystemConfig,
    stream: RandomStream,
) -> UplinkObservation:
    """Simulate ``Y_t = sum_k (G diag(f_k) phi_t + h_k) x_k^T + N_t``."""
    tau0 = plan.n_subframes
    M, N = real.G.shape
    K = real.f.shape[0]
    if plan.X.shape != (K, K) or plan.Phi_tilde.shape[0] != N:
        raise ValueError("pilot plan shapes do not match the channel realization")
    noise = complex_normal(stream.rng, (tau0, M, K), cfg.sigma2_n)
    Y = np.empty((tau0, M, K), dtype=complex)
    for t in range(tau0):
        # Column k of U is UE k's effective channel in sub-frame t.
        U = real.G @ (real.f * plan.Phi_tilde[:, t][None, :]).T + real.h.T
        Y[t] = U @ plan.X.T + noise[t]
    return UplinkObservation(Y=Y)


def despread(obs: UplinkObservation, plan: UplinkPilotPlan, k: int) -> np.ndarray:
    """Project onto UE k's pilot: ``y_tilde_{k,t} = Y_t x_k^* / (K P_UE)``.

    Returns the sub-frames stacked into one length ``tau0 * M`` vector.
    Orthogonality removes the other users exactly; the residual noise has
    per-entry variance ``sigma_n^2 / (K P_UE)``.
    """
    x_k = plan.X[:, k]
    energy = float(np.real(np.vdot(x_k, x_k)))  # = K * P_UE
    return (obs.Y @ x_k.conj() / energy).reshape(-1)


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Stacked LS model matrix with block rows ``[G_used diag(phi_t) | I_M]``.

    The first ``n_ris`` columns multiply the RIS-UE channel, the rest the
    BS-UE channel.
    """

    A: np.ndarray  # (tau0 * M, N + M) complex
    n_ris: int     # = N, the f/h column split


def assemble_measurement_matrix(G_used: np.ndarray, plan: UplinkPilotPlan) -> MeasurementMatrix:
    """Assemble the measurement matrix from an estimated (or true) BS-RIS channel.

    Callers wanting a determined system need ``tau0 * M >= N + M``; an
    under-determined stack is assembled anyway and rejected later by the
    conditioning check in the LS solve.
    """
    M, N = G_used.shape
    tau0 = plan.n_subframes
    A = np.zeros((tau0 * M, N + M), dtype=complex)
    eye = np.eye(M)
    for t in range(tau0):
        block = slice(t * M, (t + 1) * M)
        A[block, :N] = G_used * plan.Phi_tilde[:, t][None, :]
        A[block, N:] = eye
    return MeasurementMatrix(A=A, n_ris=N)


def ls_estimate(A_hat: MeasurementMatrix, y_k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares solve for one UE; returns ``(f_hat, h_hat)``.

    Uses an SVD-based solver (equivalent to the pseudo-inverse solution).
    Raises :class:`RankDeficiencyError` when the matrix condition number
    exceeds ``CONDITION_LIMIT``.
    """
    condition = float(np.linalg.cond(A_hat.A))
    if condition > CONDITION_LIMIT:
        raise RankDeficiencyError(condition)
    x, *_ = np.linalg.lstsq(A_hat.A, y_k, rcond=None)
    return x[: A_hat.n_ris], x[A_hat.n_ris:]


@dataclass(frozen=True, eq=False)
class MobileEstimate:
    """Recovered mobile channels and the reconstructed cascaded channels."""

    f_hat: np.ndarray  # (K, N) complex
    h_hat: np.ndarray  # (K, M) complex
    C_hat: np.ndarray  # (K, M, N) complex, C_hat[k] = G_used @ diag(f_hat[k])


def estimate_mobile(
    obs: UplinkObservation, plan: UplinkPilotPlan, G_used: np.ndarray
) -> MobileEstimate:
    """Despread every UE and solve the stacked LS model built from ``G_used``."""
    M, N = G_used.shape
    K = plan.X.shape[0]
    A_hat = assemble_measurement_matrix(G_used, plan)
    condition = float(np.linalg.cond(A_hat.A))
    if condition > CONDITION_LIMIT:
        raise RankDeficiencyError(condition)
    Y_stack = np.stack([despread(obs, plan, k) for k in range(K)], axis=1)
    x, *_ = np.linalg.lstsq(A_hat.A, Y_stack, rcond=None)
    f_hat = x[:N].T
    h_hat = x[N:].T
    C_hat = G_used[None, :, :] * f_hat[:, None, :]
    return MobileEstimate(f_hat=f_hat, h_hat=h_hat, C_hat=C_hat)
