"""Shared fixtures: the reference scenario and a fast small scenario."""
from dataclasses import replace

import pytest

from risce import SystemConfig


@pytest.fixture
def paper_cfg() -> SystemConfig:
    """The reference multi-user scenario (M=32, N=64, K=8)."""
    return SystemConfig(seed=1234)


@pytest.fixture
def small_cfg() -> SystemConfig:
    """A small scenario for fast unit tests."""
    return SystemConfig(M=6, N=8, K=2, L=2, seed=1234)


def noiseless(cfg: SystemConfig) -> SystemConfig:
    """Zero out every stochastic impairment (noise, SI, environment)."""
    return replace(cfg, sigma2_n=0.0, sigma2_i=0.0, rho_s=0.0)
