"""Scenario configuration, derived link budgets, and seeded random streams.

Every experiment is fully described by a :class:`SystemConfig`.  All derived
quantities (large-scale fading factors, SINR / SNR figures) are pure functions
of the config, and every random draw in the package flows through a
:class:`RandomStream` derived from ``(master seed, label)``, so a run is
reproducible bit-for-bit.
"""
from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

__all__ = [
    "SystemConfig",
    "LinkBudget",
    "RandomStream",
    "tau_min",
    "fading_factor",
    "derive_link_budget",
    "validate",
    "derive_stream",
    "with_sinr_db",
    "with_snr_db",
    "load_config",
    "write_config",
]


def tau_min(M: int, N: int) -> int:
    """Minimum number of uplink sub-frames: ceil((M + N) / M)."""
    return -(-(M + N) // M)


def fading_factor(rho0_dB: float, d: float, d0: float, alpha: float) -> float:
    """Large-scale fading factor rho0 * (d / d0)^(-alpha), in linear scale."""
    return 10.0 ** (rho0_dB / 10.0) * (d / d0) ** (-alpha)


@dataclass(frozen=True)
class SystemConfig:
    """All scenario scalars for one simulation setup.

    Defaults reproduce the reference multi-user scenario: a 32-antenna BS,
    a 64-element reflecting surface, 8 single-antenna users, 20 m / 30 m /
    20 m link distances, and 10 W / 1 W transmit powers.

    Fields left as ``None`` are resolved at construction time:

    * ``tau0``     -> the minimum ceil((M + N) / M),
    * ``sigma2_i`` -> 2 * sigma2_n (residual self-interference twice the
      receiver noise),
    * ``rho_s``    -> the BS-RIS fading factor (an environmental reflection
      of the same order as one reflected path).

    ``alpha_timescale`` is the ratio of the quasi-static coherence time to
    the mobile coherence time; it is distinct from the path-loss exponents
    ``alpha_g`` / ``alpha_h`` / ``alpha_f``.
    """

    M: int = 32                       # BS antennas
    N: int = 64                       # reflecting elements
    K: int = 8                        # single-antenna UEs
    L: int = 2                        # transmitting BS antennas per dual-link sub-frame
    tau0: int | None = None           # uplink sub-frames (None -> minimum)
    P_BS: float = 10.0                # BS transmit power [W]
    P_UE: float = 1.0                 # UE transmit power [W]
    sigma2_n: float = 1e-13           # receiver noise variance [W]
    sigma2_i: float | None = None     # residual self-interference variance [W]
    rho_s: float | None = None        # environmental-reflection variance
    d_g: float = 20.0                 # BS-RIS distance [m]
    d_h: float = 30.0                 # BS-UE distance [m]
    d_f: float = 20.0                 # RIS-UE distance [m]
    alpha_g: float = 2.1              # BS-RIS path-loss exponent
    alpha_h: float = 2.2              # BS-UE path-loss exponent
    alpha_f: float = 4.2              # RIS-UE path-loss exponent
    rho0_dB: float = -20.0            # reference-distance fading factor [dB]
    d0: float = 1.0                   # reference distance [m]
    alpha_timescale: float = 16.0     # T_L / T_S coherence-time ratio
    I_max: int = 5                    # max outer iterations of the column solver
    epsilon_term: float = 1.0         # termination threshold, relative to the noise floor
    seed: int = 0                     # master RNG seed

    def __post_init__(self) -> None:
        if self.tau0 is None:
            object.__setattr__(self, "tau0", tau_min(self.M, self.N))
        if self.sigma2_i is None:
            object.__setattr__(self, "sigma2_i", 2.0 * self.sigma2_n)
        if self.rho_s is None:
            object.__setattr__(
                self, "rho_s", fading_factor(self.rho0_dB, self.d_g, self.d0, self.alpha_g)
            )


@dataclass(frozen=True)
class LinkBudget:
    """Per-link fading factors and the two pilot-quality ratios (linear)."""

    rho_g: float   # BS-RIS large-scale gain
    rho_h: float   # BS-UE large-scale gain
    rho_f: float   # RIS-UE large-scale gain
    sinr_L: float  # dual-link pilot SINR: P_BS * rho_g^2 / (sigma_i^2 + sigma_n^2)
    snr_S: float   # uplink pilot SNR: P_UE * rho_f * rho_g / sigma_n^2


def derive_link_budget(cfg: SystemConfig) -> LinkBudget:
    """Compute the large-scale fading factors and quality ratios for ``cfg``."""
    for name in ("d_g", "d_h", "d_f", "d0"):
        if getattr(cfg, name) <= 0:
            raise ValueError(f"{name} must be strictly positive, got {getattr(cfg, name)}")
    rho_g = fading_factor(cfg.rho0_dB, cfg.d_g, cfg.d0, cfg.alpha_g)
    rho_h = fading_factor(cfg.rho0_dB, cfg.d_h, cfg.d0, cfg.alpha_h)
    rho_f = fading_factor(cfg.rho0_dB, cfg.d_f, cfg.d0, cfg.alpha_f)
    denom_L = cfg.sigma2_i + cfg.sigma2_n
    sinr_L = cfg.P_BS * rho_g**2 / denom_L if denom_L > 0 else math.inf
    snr_S = cfg.P_UE * rho_f * rho_g / cfg.sigma2_n if cfg.sigma2_n > 0 else math.inf
    return LinkBudget(rho_g=rho_g, rho_h=rho_h, rho_f=rho_f, sinr_L=sinr_L, snr_S=snr_S)


def validate(cfg: SystemConfig) -> list[str]:
    """Check every config invariant; return one message per violation.

    An empty list means the config is usable.  Zero noise / interference /
    environmental-reflection variances are allowed (they select the exact,
    noiseless pipeline used by diagnostics).
    """
    v: list[str] = []
    if cfg.M < 2:
        v.append(f"M: need at least 2 BS antennas, got {cfg.M}")
    if cfg.N < 1:
        v.append(f"N: need at least 1 reflecting element, got {cfg.N}")
    if cfg.K < 1:
        v.append(f"K: need at least 1 UE, got {cfg.K}")
    if cfg.L < 2:
        v.append(f"L: dual-link pilots need at least 2 transmit antennas, got {cfg.L}")
    if cfg.L > cfg.M:
        v.append(f"L: cannot exceed M={cfg.M}, got {cfg.L}")
    tmin = tau_min(cfg.M, cfg.N)
    if cfg.tau0 < tmin:
        v.append(f"tau0: need at least ceil((M+N)/M)={tmin} uplink sub-frames, got {cfg.tau0}")
    for name in ("P_BS", "P_UE", "d_g", "d_h", "d_f", "d0"):
        if getattr(cfg, name) <= 0:
            v.append(f"{name}: must be strictly positive, got {getattr(cfg, name)}")
    for name in ("sigma2_n", "sigma2_i", "rho_s"):
        if getattr(cfg, name) < 0:
            v.append(f"{name}: must be non-negative, got {getattr(cfg, name)}")
    if cfg.alpha_timescale < 1:
        v.append(f"alpha_timescale: coherence-time ratio must be >= 1, got {cfg.alpha_timescale}")
    if cfg.I_max < 0:
        v.append(f"I_max: must be non-negative, got {cfg.I_max}")
    if cfg.epsilon_term < 0:
        v.append(f"epsilon_term: must be non-negative, got {cfg.epsilon_term}")
    if cfg.seed < 0:
        v.append(f"seed: must be non-negative, got {cfg.seed}")
    return v


@dataclass(eq=False)
class RandomStream:
    """A labelled, independently seeded random-number stream.

    Two streams derived from the same ``(seed, label)`` produce identical
    sequences; distinct labels or seeds give statistically independent ones.
    A stream is stateful and must be owned by exactly one worker.
    """

    label: str
    rng: np.random.Generator


def derive_stream(seed: int, label: str) -> RandomStream:
    """Derive the deterministic random stream for ``label`` from the master seed."""
    if not label:
        raise ValueError("stream label must be non-empty")
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i:i + 8], "big") for i in range(0, 32, 8)]
    ss = np.random.SeedSequence([int(seed), *words])
    return RandomStream(label=label, rng=np.random.default_rng(ss))


def _interference_ratio(cfg: SystemConfig) -> float:
    """sigma_i^2 / sigma_n^2, falling back to 2 when both are zero."""
    if cfg.sigma2_n > 0:
        return cfg.sigma2_i / cfg.sigma2_n
    return 2.0


def with_sinr_db(cfg: SystemConfig, sinr_db: float) -> SystemConfig:
    """Return a copy of ``cfg`` whose noise levels hit the given dual-link SINR.

    The interference-to-noise ratio of ``cfg`` is preserved.  ``inf`` selects
    the noiseless configuration.
    """
    if math.isinf(sinr_db):
        return replace(cfg, sigma2_n=0.0, sigma2_i=0.0)
    rho_g = fading_factor(cfg.rho0_dB, cfg.d_g, cfg.d0, cfg.alpha_g)
    total = cfg.P_BS * rho_g**2 / 10.0 ** (sinr_db / 10.0)
    r = _interference_ratio(cfg)
    return replace(cfg, sigma2_n=total / (1.0 + r), sigma2_i=total * r / (1.0 + r))


def with_snr_db(cfg: SystemConfig, snr_db: float) -> SystemConfig:
    """Return a copy of ``cfg`` whose noise level hits the given uplink SNR.

    The interference-to-noise ratio is preserved, so the dual-link SINR
    co-varies with the swept uplink SNR through the single noise knob.
    """
    if math.isinf(snr_db):
        return replace(cfg, sigma2_n=0.0, sigma2_i=0.0)
    rho_g = fading_factor(cfg.rho0_dB, cfg.d_g, cfg.d0, cfg.alpha_g)
    rho_f = fading_factor(cfg.rho0_dB, cfg.d_f, cfg.d0, cfg.alpha_f)
    sigma2_n = cfg.P_UE * rho_f * rho_g / 10.0 ** (snr_db / 10.0)
    return replace(cfg, sigma2_n=sigma2_n, sigma2_i=_interference_ratio(cfg) * sigma2_n)


# Config file layout: INI sections are purely organizational, keys map
# one-to-one onto SystemConfig fields.
_SECTIONS: dict[str, tuple[str, ...]] = {
    "dimensions": ("M", "N", "K", "L", "tau0"),
    "power": ("P_BS", "P_UE", "sigma2_n", "sigma2_i", "rho_s"),
    "geometry": ("d_g", "d_h", "d_f", "alpha_g", "alpha_h", "alpha_f", "rho0_dB", "d0"),
    "timescale": ("alpha_timescale",),
    "solver": ("I_max", "epsilon_term"),
    "run": ("seed",),
}

INT_FIELDS = frozenset({"M", "N", "K", "L", "tau0", "I_max", "seed"})


def load_config(path: str | Path) -> SystemConfig:
    """Read a SystemConfig from an INI-style file.

    Keys equal field names; unknown keys are an error.  Omitted fields keep
    their defaults (including the auto-resolved ``tau0`` / ``sigma2_i`` /
    ``rho_s``).
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep field-name case
    parser.read(path, encoding="utf-8")
    known = {f.name for f in fields(SystemConfig)}
    values: dict[str, int | float] = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if key not in known:
                raise ValueError(f"unknown config key '{key}' in section [{section}] of {path}")
            if key in values:
                raise ValueError(f"config key '{key}' given more than once in {path}")
            values[key] = int(raw) if key in INT_FIELDS else float(raw)
    return SystemConfig(**values)


def write_config(cfg: SystemConfig, path: str | Path) -> None:
    """Write ``cfg`` as an INI file that ``load_config`` reads back."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    for section, names in _SECTIONS.items():
        parser[section] = {
            name: repr(getattr(cfg, name)) if name not in INT_FIELDS else str(getattr(cfg, name))
            for name in names
        }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        parser.write(fh)
