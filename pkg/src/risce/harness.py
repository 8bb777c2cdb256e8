"""Seeded Monte Carlo experiments composing the full estimation pipeline.

Experiments are driven by an :class:`ExperimentSpec` and write CSV (header
row, comma separated, LF endings, UTF-8, 17 significant digits).  Within a
trial, every estimator consumes the same channel realization through a
channel stream keyed only by the trial index, while noise streams are keyed
by (sweep point, trial), so sweep curves and estimator comparisons are paired
and free of Monte Carlo luck.  Trials may run in a worker pool; results are
reduced in trial order, so output bytes do not depend on the worker count.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .baseline import estimate_cascaded_ls
from .channels import cascade, sample_channels
from .config import (
    SystemConfig,
    derive_link_budget,
    derive_stream,
    with_sinr_db,
    with_snr_db,
)
from .duallink import build_reflection_schedule, decorrelate_products, simulate_dual_link
from .metrics import fbar_statistics, pilot_overhead
from .mobile import RankDeficiencyError, estimate_mobile, generate_pilot_plan, simulate_uplink_frame
from .quasistatic import estimate_bs_ris

__all__ = [
    "ExperimentSpec",
    "EXPERIMENT_KINDS",
    "validate_spec",
    "run_convergence",
    "run_end_to_end",
    "run_overhead",
    "run_experiment",
    "write_csv",
]

EXPERIMENT_KINDS = ("convergence", "nmse-sweep", "end-to-end", "overhead-sweep")

# Retries of the random reflection schedule before a trial is abandoned.
MAX_PLAN_REDRAWS = 5


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run: experiment kind, sweep grid, trial count, and output path."""

    kind: str
    trials: int = 100
    out: str = "experiment.csv"
    snr_grid_db: tuple[float, ...] = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    sinr_grid_db: tuple[float, ...] = (0.0, 10.0, 20.0)
    alpha_grid: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0)
    seed: int | None = None       # None: use the config's master seed
    pin_sinr_db: float | None = None  # pin the dual-link SINR during SNR sweeps
    workers: int = 1
    trace_out: str | None = None  # optional per-subproblem trace CSV (convergence only)


def validate_spec(spec: ExperimentSpec) -> list[str]:
    """Return one message per invalid ExperimentSpec field."""
    v = []
    if spec.kind not in EXPERIMENT_KINDS:
        v.append(f"kind: unknown experiment {spec.kind!r}, expected one of {EXPERIMENT_KINDS}")
    if spec.trials < 1:
        v.append(f"trials: must be at least 1, got {spec.trials}")
    if spec.workers < 1:
        v.append(f"workers: must be at least 1, got {spec.workers}")
    grid = _active_grid(spec) if spec.kind in EXPERIMENT_KINDS else ()
    if spec.kind in EXPERIMENT_KINDS and len(grid) == 0:
        v.append(f"grid: the sweep grid for {spec.kind} is empty")
    return v


def _active_grid(spec: ExperimentSpec) -> tuple[float, ...]:
    if spec.kind == "convergence":
        return spec.sinr_grid_db
    if spec.kind == "overhead-sweep":
        return spec.alpha_grid
    return spec.snr_grid_db


def _effective_seed(cfg: SystemConfig, spec: ExperimentSpec) -> int:
    return cfg.seed if spec.seed is None else spec.seed


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    """Write rows with full decimal precision, LF endings, UTF-8."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in writer_rows(rows):
            writer.writerow(row)


def writer_rows(rows: Iterable[Sequence]) -> Iterable[list[str]]:
    for row in rows:
        yield [_fmt(v) for v in row]


def _map_trials(func, args_list, workers: int):
    if workers <= 1:
        return [func(args) for args in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, args_list))


# ---------------------------------------------------------------------------
# Convergence experiment (mean / std of the normalized objective vs iteration)
# ---------------------------------------------------------------------------

def _convergence_trial(args) -> tuple[np.ndarray, np.ndarray, float, int]:
    cfg, seed, point_key, trial = args
    budget = derive_link_budget(cfg)
    real = sample_channels(cfg, budget, derive_stream(seed, f"channels/trial-{trial:05d}"))
    sched = build_reflection_schedule(cfg.N)
    obs = simulate_dual_link(
        real, sched, cfg, derive_stream(seed, f"dual-link/{point_key}/trial-{trial:05d}")
    )
    prod = decorrelate_products(obs, cfg)
    est = estimate_bs_ris(prod, cfg)
    J = np.stack([t.padded_objective(cfg.I_max) for t in est.traces])
    fbar = np.stack([t.padded_normalized(cfg.I_max) for t in est.traces])
    return J, fbar, float(np.sum(np.abs(prod.a) ** 2)), prod.a.size


def run_convergence(cfg: SystemConfig, spec: ExperimentSpec):
    """Sweep the dual-link SINR; returns (header, rows) of per-iteration stats.

    Rows are (sinr_db, iteration, fbar_mean, fbar_std), iteration 0 being the
    initialization.  The normalization denominator is estimated over the whole
    trial batch of a sweep point.
    """
    seed = _effective_seed(cfg, spec)
    n_pairs = cfg.L * (cfg.M - 1)
    rows = []
    trace_rows = []
    for sinr_db in spec.sinr_grid_db:
        cfg_pt = with_sinr_db(cfg, sinr_db)
        point_key = f"sinr-{sinr_db:g}dB"
        args = [(cfg_pt, seed, point_key, t) for t in range(spec.trials)]
        results = _map_trials(_convergence_trial, args, spec.workers)
        J_all = np.concatenate([J for J, _, _, _ in results], axis=0)
        denom = n_pairs * sum(s for _, _, s, _ in results) / sum(c for _, _, _, c in results)
        mean, std = fbar_statistics(J_all, denom)
        for i in range(cfg.I_max + 1):
            rows.append((sinr_db, i, float(mean[i]), float(std[i])))
        if spec.trace_out is not None:
            for trial, (J, fbar, _, _) in enumerate(results):
                for n in range(J.shape[0]):
                    for i in range(J.shape[1]):
                        trace_rows.append(
                            (sinr_db, trial, n, i, float(J[n, i]), float(fbar[n, i]))
                        )
    if spec.trace_out is not None:
        write_csv(
            spec.trace_out,
            ["sinr_db", "trial", "n", "iteration", "objective", "fbar"],
            trace_rows,
        )
    return ["sinr_db", "iteration", "fbar_mean", "fbar_std"], rows


# ---------------------------------------------------------------------------
# End-to-end NMSE sweep
# ---------------------------------------------------------------------------

def run_pipeline_trial(
    cfg: SystemConfig,
    cfg_dual: SystemConfig,
    seed: int,
    point_key: str,
    trial: int,
) -> dict:
    """One full two-timescale trial plus the full-pilot baseline.

    Returns the per-trial energy sums needed for ratio-of-sums NMSE
    aggregation, with the number of reflection-schedule redraws forced by
    ill-conditioned measurement matrices.
    """
    budget = derive_link_budget(cfg)
    real = sample_channels(cfg, budget, derive_stream(seed, f"channels/trial-{trial:05d}"))
    C_true = cascade(real).C

    sched = build_reflection_schedule(cfg.N)
    obs = simulate_dual_link(
        real, sched, cfg_dual, derive_stream(seed, f"dual-link/{point_key}/trial-{trial:05d}")
    )
    est = estimate_bs_ris(decorrelate_products(obs, cfg_dual), cfg_dual)

    mob = None
    redraws = 0
    for attempt in range(MAX_PLAN_REDRAWS + 1):
        plan = generate_pilot_plan(
            cfg, derive_stream(seed, f"uplink-plan/{point_key}/trial-{trial:05d}/try-{attempt}")
        )
        up_obs = simulate_uplink_frame(
            real, plan, cfg,
            derive_stream(seed, f"uplink-noise/{point_key}/trial-{trial:05d}/try-{attempt}"),
        )
        try:
            mob = estimate_mobile(up_obs, plan, est.G_hat)
            break
        except RankDeficiencyError:
            redraws += 1
    if mob is None:
        raise RuntimeError(
            f"trial {trial} at {point_key}: measurement matrix stayed rank-deficient "
            f"after {MAX_PLAN_REDRAWS} schedule redraws"
        )

    base = estimate_cascaded_ls(
        real, cfg, derive_stream(seed, f"baseline/{point_key}/trial-{trial:05d}")
    )

    err_plus = np.sum(np.abs(est.G_hat - real.G) ** 2, axis=0)
    err_minus = np.sum(np.abs(est.G_hat + real.G) ** 2, axis=0)
    return {
        "err_C": float(np.sum(np.abs(mob.C_hat - C_true) ** 2)),
        "en_C": float(np.sum(np.abs(C_true) ** 2)),
        "err_h": float(np.sum(np.abs(mob.h_hat - real.h) ** 2)),
        "en_h": float(np.sum(np.abs(real.h) ** 2)),
        "err_G": float(np.sum(np.minimum(err_plus, err_minus))),
        "en_G": float(np.sum(np.abs(real.G) ** 2)),
        "err_C_base": float(np.sum(np.abs(base.C_hat - C_true) ** 2)),
        "redraws": redraws,
    }


def _end_to_end_trial(args) -> dict:
    cfg, cfg_dual, seed, point_key, trial = args
    return run_pipeline_trial(cfg, cfg_dual, seed, point_key, trial)


def run_end_to_end(cfg: SystemConfig, spec: ExperimentSpec):
    """Sweep the uplink SNR through the full pipeline; returns (header, rows).

    The sweep moves the noise floor (self-interference held at its configured
    ratio to the noise), so the dual-link SINR co-varies unless
    ``spec.pin_sinr_db`` pins it.  Rows are (snr_db, nmse_c, nmse_h,
    nmse_g_signaligned, baseline_nmse_c, trials).
    """
    seed = _effective_seed(cfg, spec)
    rows = []
    total_redraws = 0
    for snr_db in spec.snr_grid_db:
        cfg_pt = with_snr_db(cfg, snr_db)
        cfg_dual = cfg_pt if spec.pin_sinr_db is None else with_sinr_db(cfg_pt, spec.pin_sinr_db)
        point_key = f"snr-{snr_db:g}dB"
        args = [(cfg_pt, cfg_dual, seed, point_key, t) for t in range(spec.trials)]
        results = _map_trials(_end_to_end_trial, args, spec.workers)
        sums = {key: sum(r[key] for r in results) for key in results[0]}
        total_redraws += int(sums["redraws"])
        rows.append(
            (
                snr_db,
                sums["err_C"] / sums["en_C"],
                sums["err_h"] / sums["en_h"],
                sums["err_G"] / sums["en_G"],
                sums["err_C_base"] / sums["en_C"],
                spec.trials,
            )
        )
    header = ["snr_db", "nmse_c", "nmse_h", "nmse_g_signaligned", "baseline_nmse_c", "trials"]
    return header, rows, total_redraws


# ---------------------------------------------------------------------------
# Overhead sweep
# ---------------------------------------------------------------------------

def run_overhead(cfg: SystemConfig, spec: ExperimentSpec):
    """Evaluate the pilot-overhead formulas across the timescale-ratio grid."""
    from dataclasses import replace

    rows = []
    for alpha in spec.alpha_grid:
        rep = pilot_overhead(replace(cfg, alpha_timescale=alpha))
        rows.append(
            (alpha, rep.tau1, rep.tau2, rep.tau_avg, rep.baseline_mvu, rep.baseline_reduced)
        )
    return ["alpha", "tau1", "tau2", "tau_avg", "baseline_mvu", "baseline_reduced"], rows


def run_experiment(cfg: SystemConfig, spec: ExperimentSpec) -> tuple[list[str], list[tuple], str]:
    """Dispatch on the experiment kind, write the CSV, and return a summary line."""
    problems = validate_spec(spec)
    if problems:
        raise ValueError("; ".join(problems))
    if spec.kind == "convergence":
        header, rows = run_convergence(cfg, spec)
        summary = (
            f"convergence: {spec.trials} trials x {len(spec.sinr_grid_db)} SINR points, "
            f"{len(rows)} rows -> {spec.out}"
        )
    elif spec.kind in ("nmse-sweep", "end-to-end"):
        header, rows, redraws = run_end_to_end(cfg, spec)
        summary = (
            f"{spec.kind}: {spec.trials} trials x {len(spec.snr_grid_db)} SNR points, "
            f"{redraws} schedule redraws, {len(rows)} rows -> {spec.out}"
        )
    else:
        header, rows = run_overhead(cfg, spec)
        summary = f"overhead-sweep: {len(rows)} rows -> {spec.out}"
    write_csv(spec.out, header, rows)
    return header, rows, summary
