"""Quasi-static BS-RIS channel recovery from pairwise product estimates.

The products decouple across reflecting elements, so the M x N channel is
recovered as N independent column subproblems.  Each column is seeded by a
closed-form triple-product initialization and refined by coordinate descent,
where every coordinate update is the exact one-dimensional least-squares
minimizer, so the objective never increases.

A column is identifiable only up to a global sign: the products are invariant
under negating the whole column, which is harmless once the cascaded channel
is reconstructed downstream.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .config import SystemConfig
from .duallink import ProductEstimates

__all__ = [
    "ColumnSubproblem",
    "ConvergenceTrace",
    "BsRisEstimate",
    "column_subproblem",
    "objective",
    "initialize_column",
    "refine_coefficient",
    "estimate_bs_ris",
    "iter_trace_rows",
]

# Relative floor under which a triple-product denominator is considered
# unusable and another third antenna is tried.
INIT_GUARD = 1e-8


class _PairPlan:
    """Precomputed index arrays over the pair set for fast coordinate updates."""

    def __init__(self, pairs: np.ndarray, M: int):
        self.M = M
        self.pair_index = {(int(m1), int(m2)): i for i, (m1, m2) in enumerate(pairs)}
        # For coordinate m, every measurement involving m pairs it with some
        # partner antenna; both orientations (m transmitting or receiving)
        # contribute identically to the one-dimensional problem.
        self.a_idx: list[np.ndarray] = []
        self.partner: list[np.ndarray] = []
        for m in range(M):
            rows = [(i, int(m2)) for i, (m1, m2) in enumerate(pairs) if m1 == m]
            rows += [(i, int(m1)) for i, (m1, m2) in enumerate(pairs) if m2 == m]
            idx, part = zip(*rows)
            self.a_idx.append(np.array(idx, dtype=int))
            self.partner.append(np.array(part, dtype=int))


@dataclass(frozen=True, eq=False)
class ColumnSubproblem:
    """Product estimates tied to one reflecting element.

    ``a[p]`` estimates ``g[m1] * g[m2]`` for antenna pair ``pairs[p]``; the M
    unknowns are the column of the BS-RIS channel at element ``n``.
    """

    n: int
    a: np.ndarray          # (|S|,) complex
    pairs: np.ndarray      # (|S|, 2) int
    M: int
    error_variance: float

    @cached_property
    def _plan(self) -> _PairPlan:
        return _PairPlan(self.pairs, self.M)


def column_subproblem(prod: ProductEstimates, n: int) -> ColumnSubproblem:
    """Extract the subproblem for reflecting element ``n`` (zero-based)."""
    M = int(prod.pairs.max()) + 1
    return ColumnSubproblem(
        n=n,
        a=prod.a[:, n],
        pairs=prod.pairs,
        M=M,
        error_variance=prod.error_variance,
    )


def objective(sub: ColumnSubproblem, g: np.ndarray) -> float:
    """Squared-residual objective: sum over pairs of |a - g[m1] g[m2]|^2."""
    residual = sub.a - g[sub.pairs[:, 0]] * g[sub.pairs[:, 1]]
    return float(np.sum(np.abs(residual) ** 2))


def initialize_column(
    sub: ColumnSubproblem, triple: tuple[int, int, int] = (0, 1, 2)
) -> tuple[np.ndarray, bool]:
    """Closed-form coarse initialization from a triple of antennas.

    With antennas (m1, m2, m3), ``g[m1] = sqrt(a[m1,m2] a[m1,m3] / a[m2,m3])``
    (principal square root; the overall column sign is unidentifiable anyway)
    and the rest follow by division.  If the denominator product is below
    ``INIT_GUARD`` times the median magnitude, the third antenna is retried in
    ascending order; if no usable third antenna exists the column falls back
    to all-ones.  Returns ``(g0, used_fallback)`` and never produces
    non-finite values.
    """
    m1, m2, m3_first = triple
    if not (0 <= m1 < m2 < sub.M) or m3_first in (m1, m2):
        raise ValueError(f"invalid initialization triple {triple}")
    plan = sub._plan
    guard = INIT_GUARD * float(np.median(np.abs(sub.a)))
    candidates = [m3_first] + [m for m in range(sub.M) if m not in (m1, m2, m3_first)]
    candidates = [m for m in candidates if 0 <= m < sub.M]
    for m3 in candidates:
        key_12 = (m1, m2)
        key_13 = (m1, m3)
        key_23 = (m2, m3)
        if not all(k in plan.pair_index for k in (key_12, key_13, key_23)):
            continue
        a_23 = sub.a[plan.pair_index[key_23]]
        if np.abs(a_23) <= guard:
            continue
        a_12 = sub.a[plan.pair_index[key_12]]
        a_13 = sub.a[plan.pair_index[key_13]]
        g1 = np.sqrt(a_12 * a_13 / a_23)
        if not np.isfinite(g1) or g1 == 0:
            continue
        g = np.empty(sub.M, dtype=complex)
        g[m1] = g1
        for m in range(sub.M):
            if m != m1:
                g[m] = sub.a[plan.pair_index[(m1, m)]] / g1
        if np.all(np.isfinite(g)):
            return g, False
    return np.ones(sub.M, dtype=complex), True


def _refine(sub: ColumnSubproblem, m: int, g: np.ndarray) -> tuple[complex, bool]:
    """Exact coordinate minimizer; returns (value, denominator_was_zero)."""
    plan = sub._plan
    partners = g[plan.partner[m]]
    den = float(np.sum(np.abs(partners) ** 2))
    if den == 0.0:
        return 0.0 + 0.0j, True
    num = np.sum(sub.a[plan.a_idx[m]] * partners.conj())
    return complex(num / den), False


def refine_coefficient(sub: ColumnSubproblem, m: int, g: np.ndarray) -> complex:
    """Minimize the column objective over coordinate ``m`` with the rest fixed.

    The minimizer is the ratio of ``sum a * conj(g_partner)`` to
    ``sum |g_partner|^2`` taken over both pair orientations involving ``m``.
    A zero denominator (all other coefficients zero) yields 0.
    """
    value, _ = _refine(sub, m, g)
    return value


@dataclass(frozen=True, eq=False)
class ConvergenceTrace:
    """Objective trajectory of one column solve.

    ``objective[i]`` is the residual after outer iteration i (index 0 is the
    initialization); ``normalized`` divides by the per-frame estimate of the
    all-zero objective's expectation.  The sequence is non-increasing because
    every coordinate update is an exact minimizer.
    """

    n: int
    objective: np.ndarray   # (iterations + 1,) float
    normalized: np.ndarray  # (iterations + 1,) float
    iterations: int
    reason: str             # "threshold" | "max-iterations"

    def padded_objective(self, i_max: int) -> np.ndarray:
        """Objective values forward-filled to length i_max + 1 (frozen after stop)."""
        return _pad(self.objective, i_max)

    def padded_normalized(self, i_max: int) -> np.ndarray:
        return _pad(self.normalized, i_max)


def _pad(values: np.ndarray, i_max: int) -> np.ndarray:
    out = np.full(i_max + 1, values[-1], dtype=float)
    out[: len(values)] = values[: i_max + 1]
    return out


@dataclass(frozen=True, eq=False)
class BsRisEstimate:
    """Recovered BS-RIS channel with per-column convergence traces."""

    G_hat: np.ndarray  # (M, N) complex
    traces: tuple[ConvergenceTrace, ...]
    fallback_columns: tuple[int, ...]          # columns initialized to all-ones
    zero_denominator_columns: tuple[int, ...]  # columns that hit a degenerate update


def estimate_bs_ris(prod: ProductEstimates, cfg: SystemConfig) -> BsRisEstimate:
    """Recover every column of the BS-RIS channel by coordinate descent.

    Each column is initialized from the (1, 2, 3) antenna triple and swept in
    ascending coordinate order, each update using the half-updated state of
    the current outer iteration.  Sweeping stops once the residual reaches
    ``epsilon_term`` times its expected value at the truth (the noise floor
    ``|S| * error_variance``) or after ``I_max`` outer iterations.
    """
    n_pairs, N = prod.a.shape
    M = int(prod.pairs.max()) + 1
    eps_abs = cfg.epsilon_term * n_pairs * prod.error_variance
    # Per-frame estimate of E{J(0)} = |S| * E|a|^2, shared by all columns.
    fbar_denom = n_pairs * float(np.mean(np.abs(prod.a) ** 2))
    plan = _PairPlan(prod.pairs, M)

    G_hat = np.empty((M, N), dtype=complex)
    traces: list[ConvergenceTrace] = []
    fallback: list[int] = []
    degenerate: list[int] = []
    for n in range(N):
        sub = ColumnSubproblem(
            n=n, a=prod.a[:, n], pairs=prod.pairs, M=M, error_variance=prod.error_variance
        )
        sub.__dict__["_plan"] = plan  # all columns share the same pair structure
        g, used_fallback = initialize_column(sub)
        if used_fallback:
            fallback.append(n)
        J = [objective(sub, g)]
        i = 0
        hit_zero_den = False
        while J[-1] > eps_abs and i < cfg.I_max:
            i += 1
            for m in range(M):
                value, den_zero = _refine(sub, m, g)
                hit_zero_den |= den_zero
                g[m] = value
            J.append(objective(sub, g))
        if hit_zero_den:
            degenerate.append(n)
        G_hat[:, n] = g
        J_arr = np.asarray(J, dtype=float)
        traces.append(
            ConvergenceTrace(
                n=n,
                objective=J_arr,
                normalized=J_arr / fbar_denom if fbar_denom > 0 else np.zeros_like(J_arr),
                iterations=i,
                reason="threshold" if J[-1] <= eps_abs else "max-iterations",
            )
        )
    return BsRisEstimate(
        G_hat=G_hat,
        traces=tuple(traces),
        fallback_columns=tuple(fallback),
        zero_denominator_columns=tuple(degenerate),
    )


def iter_trace_rows(est: BsRisEstimate, trial: int):
    """Yield (trial, n, i, objective, normalized) rows for CSV export."""
    for trace in est.traces:
        for i, (J, fbar) in enumerate(zip(trace.objective, trace.normalized)):
            yield trial, trace.n, i, float(J), float(fbar)
