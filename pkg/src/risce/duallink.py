"""Dual-link pilot transmission and decorrelation to per-element products.

The full-duplex BS transmits a pilot from one of its first L antennas while
the remaining antennas listen to the surface's reflection.  Over N + 1
sub-frames the surface cycles through a DFT schedule of reflection vectors,
so a per-pair inverse transform of the received pilots isolates, for every
reflecting element n, a noisy estimate of the product g_{m1,n} * g_{m2,n}
of two BS-RIS channel coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RandomStream, SystemConfig
from .channels import ChannelRealization, complex_normal

__all__ = [
    "ReflectionSchedule",
    "DualLinkObservation",
    "ProductEstimates",
    "index_pairs",
    "build_reflection_schedule",
    "simulate_dual_link",
    "decorrelate_products",
    "product_error_variance",
]


def index_pairs(M: int, L: int) -> np.ndarray:
    """Transmit/receive antenna pairs (m1, m2), m1 < L transmitting, m2 != m1.

    Returned in the canonical sweep order (m1-major, m2 ascending), shape
    (L * (M - 1), 2), zero-based.
    """
    return np.array([(m1, m2) for m1 in range(L) for m2 in range(M) if m2 != m1], dtype=int)


@dataclass(frozen=True, eq=False)
class ReflectionSchedule:
    """DFT reflection schedule: column t is the sub-frame-t coefficient vector.

    Entry convention (1-based element n, sub-frame t):
    Phi_bar[n, t] = exp(-2j pi n (t - 1) / (N + 1)), so every coefficient has
    unit modulus and the (N + 1) x (N + 1) stack of an all-ones row on top of
    Phi_bar equals sqrt(N + 1) times the unitary DFT matrix.
    """

    Phi_bar: np.ndarray  # (N, N + 1) complex, unit modulus

    @property
    def n_elements(self) -> int:
        return self.Phi_bar.shape[0]

    def stack(self) -> np.ndarray:
        """The (N + 1) x (N + 1) stack [all-ones row; Phi_bar]."""
        N1 = self.Phi_bar.shape[1]
        return np.vstack([np.ones((1, N1)), self.Phi_bar])

    def unitary_dft(self) -> np.ndarray:
        """The stack rescaled to the unitary DFT matrix F."""
        return self.stack() / np.sqrt(self.Phi_bar.shape[1])


def build_reflection_schedule(N: int) -> ReflectionSchedule:
    """Build the DFT schedule for N reflecting elements."""
    if N < 1:
        raise ValueError(f"need at least one reflecting element, got N={N}")
    n = np.arange(1, N + 1)[:, None]
    t = np.arange(N + 1)[None, :]
    return ReflectionSchedule(Phi_bar=np.exp(-2j * np.pi * n * t / (N + 1)))


@dataclass(frozen=True, eq=False)
class DualLinkObservation:
    """Received dual-link pilots plus the truth-side nuisance record.

    ``y_bar[p, t]`` is the pilot received on pair ``pairs[p]`` in sub-frame
    t.  The environmental reflection ``s`` is drawn once per pair and held
    constant across sub-frames; the interference and noise draws are retained
    for diagnostics.
    """

    y_bar: np.ndarray         # (|S|, N + 1) complex
    pairs: np.ndarray         # (|S|, 2) int
    s: np.ndarray             # (|S|,) complex
    interference: np.ndarray  # (|S|, N + 1) complex
    noise: np.ndarray         # (|S|, N + 1) complex


@dataclass(frozen=True, eq=False)
class ProductEstimates:
    """Decorrelated per-element product estimates.

    ``a[p, n]`` estimates ``g_{m1,n} * g_{m2,n}`` for pair ``pairs[p]`` with
    additive complex Gaussian error of variance ``error_variance``;
    ``s_hat[p]`` estimates the pair's environmental reflection.
    """

    a: np.ndarray          # (|S|, N) complex
    s_hat: np.ndarray      # (|S|,) complex
    pairs: np.ndarray      # (|S|, 2) int
    error_variance: float


def product_error_variance(cfg: SystemConfig) -> float:
    """Variance of the product-estimate error: (sigma_i^2 + sigma_n^2) / (P_BS (N + 1))."""
    return (cfg.sigma2_i + cfg.sigma2_n) / (cfg.P_BS * (cfg.N + 1))


def simulate_dual_link(
    real: ChannelRealization,
    sched: ReflectionSchedule,
    cfg: SystemConfig,
    stream: RandomStream,
) -> DualLinkObservation:
    """Simulate the full dual-link pilot frame.

    Each received pilot is
    ``[(g_{m1} * g_{m2})^T phi_t + s] * sqrt(P_BS) + i + n`` where the
    elementwise product runs over rows m1 and m2 of G, the pilot amplitude is
    sqrt(P_BS), and i / n are the residual self-interference and receiver
    noise.  Draw order per frame: s, then interference, then noise.
    """
    M, N = real.G.shape
    if cfg.L > M:
        raise ValueError(f"L={cfg.L} transmit antennas exceed M={M}")
    if sched.n_elements != N:
        raise ValueError(f"schedule covers {sched.n_elements} elements, channel has {N}")
    rng = stream.rng
    pairs = index_pairs(M, cfg.L)
    n_pairs = len(pairs)
    s = complex_normal(rng, (n_pairs,), cfg.rho_s)
    interference = complex_normal(rng, (n_pairs, N + 1), cfg.sigma2_i)
    noise = complex_normal(rng, (n_pairs, N + 1), cfg.sigma2_n)
    products = real.G[pairs[:, 0], :] * real.G[pairs[:, 1], :]  # (|S|, N)
    y_bar = (products @ sched.Phi_bar + s[:, None]) * np.sqrt(cfg.P_BS) + interference + noise
    return DualLinkObservation(y_bar=y_bar, pairs=pairs, s=s, interference=interference, noise=noise)


def decorrelate_products(
    obs: DualLinkObservation, cfg: SystemConfig, method: str = "matrix"
) -> ProductEstimates:
    """Invert the DFT schedule to per-element product estimates.

    Computes ``w_hat^T = y_bar^T F^H / sqrt((N + 1) P_BS)`` per pair; the
    leading entry estimates the environmental reflection and the remaining N
    entries are the products.  ``method`` selects the dense matrix product
    ("matrix") or the equivalent inverse-FFT fast path ("fft"); the two agree
    to ~1e-10.
    """
    n_subframes = obs.y_bar.shape[1]
    N = n_subframes - 1
    if N != cfg.N:
        raise ValueError(f"observation covers {n_subframes} sub-frames, expected {cfg.N + 1}")
    if method == "matrix":
        grid = np.arange(n_subframes)
        F = np.exp(-2j * np.pi * np.outer(grid, grid) / n_subframes) / np.sqrt(n_subframes)
        w_hat = obs.y_bar @ F.conj().T / np.sqrt(n_subframes * cfg.P_BS)
    elif method == "fft":
        w_hat = np.fft.ifft(obs.y_bar, axis=1) / np.sqrt(cfg.P_BS)
    else:
        raise ValueError(f"unknown decorrelation method {method!r}")
    return ProductEstimates(
        a=w_hat[:, 1:],
        s_hat=w_hat[:, 0],
        pairs=obs.pairs,
        error_variance=product_error_variance(cfg),
    )
