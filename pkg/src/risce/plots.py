"""Figure rendering for experiment outputs.

Each experiment's CSV rows can be rendered to a PNG next to the CSV.  All
rendering uses the Agg backend so it works headless.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["render_rows", "figure_path"]


def figure_path(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".png")


def render_rows(kind: str, header: Sequence[str], rows: Sequence[Sequence], path: str | Path) -> Path:
    """Render the figure matching an experiment kind; returns the PNG path."""
    path = Path(path)
    if kind == "convergence":
        _render_convergence(rows, path)
    elif kind in ("nmse-sweep", "end-to-end"):
        _render_nmse(rows, path)
    elif kind == "overhead-sweep":
        _render_overhead(rows, path)
    else:
        raise ValueError(f"no figure defined for experiment kind {kind!r}")
    return path


def _render_convergence(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    by_point: dict[float, list] = {}
    for sinr_db, i, mean, std in rows:
        by_point.setdefault(sinr_db, []).append((i, mean, std))
    for sinr_db, points in by_point.items():
        its = [p[0] for p in points]
        means = [p[1] for p in points]
        stds = [p[2] for p in points]
        ax.errorbar(its, means, yerr=stds, marker="o", capsize=3, label=f"SINR = {sinr_db:g} dB")
    ax.set_yscale("log")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("normalized objective")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_nmse(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    snr = [r[0] for r in rows]
    ax.semilogy(snr, [r[1] for r in rows], marker="o", label="two-timescale, cascaded")
    ax.semilogy(snr, [r[2] for r in rows], marker="s", label="two-timescale, direct")
    ax.semilogy(snr, [r[4] for r in rows], marker="^", label="full-pilot LS, cascaded")
    ax.set_xlabel("uplink SNR [dB]")
    ax.set_ylabel("NMSE")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_overhead(rows, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    alpha = [r[0] for r in rows]
    ax.semilogy(alpha, [r[3] for r in rows], marker="o", label="two-timescale average")
    ax.semilogy(alpha, [r[4] for r in rows], marker="s", linestyle="--", label="full cascaded (MVU-class)")
    ax.semilogy(alpha, [r[5] for r in rows], marker="^", linestyle="--", label="reference-user scheme")
    ax.set_xlabel("timescale ratio alpha")
    ax.set_ylabel("pilot slots per coherence block")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
