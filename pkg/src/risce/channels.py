"""Uncorrelated Rayleigh channel draws, cascaded channels, and gauge transforms.

Complex Gaussian convention used throughout: a variance-``v`` entry has
independent real and imaginary parts of variance ``v / 2`` each (circularly
symmetric).  The same matrix ``G`` serves uplink rows and downlink columns
(channel reciprocity); no separate downlink matrix exists anywhere.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import LinkBudget, RandomStream, SystemConfig

__all__ = [
    "ChannelRealization",
    "CascadedChannel",
    "complex_normal",
    "sample_channels",
    "cascade",
    "gauge_transform",
    "dump_realization",
    "load_realization",
]


def complex_normal(rng: np.random.Generator, shape: tuple[int, ...], variance: float) -> np.ndarray:
    """Draw circularly symmetric complex Gaussians with the given per-entry variance."""
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One block-fading draw of all physical channels.

    ``G`` is the M x N BS-RIS channel, ``f[k]`` the length-N RIS-UE channel
    and ``h[k]`` the length-M BS-UE channel of user ``k``.
    """

    G: np.ndarray  # (M, N) complex
    f: np.ndarray  # (K, N) complex
    h: np.ndarray  # (K, M) complex


@dataclass(frozen=True, eq=False)
class CascadedChannel:
    """Per-user compound channels C[k] = G @ diag(f[k])."""

    C: np.ndarray  # (K, M, N) complex


def sample_channels(
    cfg: SystemConfig, budget: LinkBudget, stream: RandomStream
) -> ChannelRealization:
    """Draw an i.i.d. Rayleigh realization with the configured fading factors.

    The draw order is fixed (G, then f, then h) so a replayed stream yields a
    bit-identical realization.
    """
    rng = stream.rng
    G = complex_normal(rng, (cfg.M, cfg.N), budget.rho_g)
    f = complex_normal(rng, (cfg.K, cfg.N), budget.rho_f)
    h = complex_normal(rng, (cfg.K, cfg.M), budget.rho_h)
    return ChannelRealization(G=G, f=f, h=h)


def cascade(real: ChannelRealization) -> CascadedChannel:
    """Build the cascaded channels C[k][m, n] = G[m, n] * f[k][n]."""
    if real.G.shape[1] != real.f.shape[1]:
        raise ValueError(
            f"shape mismatch: G has {real.G.shape[1]} columns but f has {real.f.shape[1]} entries"
        )
    return CascadedChannel(C=real.G[None, :, :] * real.f[:, None, :])


def gauge_transform(real: ChannelRealization, p: np.ndarray) -> ChannelRealization:
    """Apply the cascaded-channel gauge: G -> G diag(p), f_k -> f_k / p.

    Any nonzero per-element scaling ``p`` leaves every cascaded channel
    unchanged, which is precisely why uplink-only pilots cannot separate G
    from the f_k.  The direct channels h are untouched.
    """
    p = np.asarray(p)
    if p.shape != (real.G.shape[1],):
        raise ValueError(f"gauge vector must have length {real.G.shape[1]}, got shape {p.shape}")
    if np.any(p == 0):
        raise ValueError("gauge vector entries must be nonzero")
    return ChannelRealization(
        G=real.G * p[None, :],
        f=real.f / p[None, :],
        h=real.h,
    )


# Golden-file dump: one CSV row per complex entry, row-major, with the header
# below.  'k' is 0 for G (it has no user index).
_DUMP_HEADER = ["array", "k", "i", "j", "re", "im"]


def dump_realization(real: ChannelRealization, path: str | Path) -> None:
    """Write a realization as CSV for golden tests (row-major, re/im columns)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_DUMP_HEADER)
        for m in range(real.G.shape[0]):
            for n in range(real.G.shape[1]):
                z = real.G[m, n]
                writer.writerow(["G", 0, m, n, repr(float(z.real)), repr(float(z.imag))])
        for name, arr in (("f", real.f), ("h", real.h)):
            for k in range(arr.shape[0]):
                for i in range(arr.shape[1]):
                    z = arr[k, i]
                    writer.writerow([name, k, i, 0, repr(float(z.real)), repr(float(z.imag))])


def load_realization(path: str | Path) -> ChannelRealization:
    """Read back a realization written by :func:`dump_realization`."""
    entries: dict[str, list[tuple[int, int, int, complex]]] = {"G": [], "f": [], "h": []}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != _DUMP_HEADER:
            raise ValueError(f"unexpected dump header {header!r} in {path}")
        for name, k, i, j, re, im in reader:
            entries[name].append((int(k), int(i), int(j), complex(float(re), float(im))))
    M = 1 + max(i for _, i, _, _ in entries["G"])
    N = 1 + max(j for _, _, j, _ in entries["G"])
    K = 1 + max(k for k, _, _, _ in entries["f"])
    G = np.zeros((M, N), dtype=complex)
    for _, i, j, z in entries["G"]:
        G[i, j] = z
    f = np.zeros((K, N), dtype=complex)
    for k, i, _, z in entries["f"]:
        f[k, i] = z
    h = np.zeros((K, M), dtype=complex)
    for k, i, _, z in entries["h"]:
        h[k, i] = z
    return ChannelRealization(G=G, f=f, h=h)
