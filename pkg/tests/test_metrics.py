"""Tests for NMSE metrics and pilot-overhead accounting."""
import math
from dataclasses import replace

import numpy as np
import pytest

from risce.config import SystemConfig
from risce.metrics import (
    fbar_statistics,
    nmse_cascaded,
    nmse_direct,
    nmse_sign_aligned,
    pilot_overhead,
)


def _random_tensors(rng, trials, shape):
    return [rng.standard_normal(shape) + 1j * rng.standard_normal(shape) for _ in range(trials)]


class TestNmseCascaded:
    def test_perfect_estimate(self):
        rng = np.random.default_rng(0)
        C = _random_tensors(rng, 3, (2, 4, 5))
        assert nmse_cascaded(C, C) == 0.0

    def test_all_zero_estimate(self):
        rng = np.random.default_rng(1)
        C = _random_tensors(rng, 3, (2, 4, 5))
        zeros = [np.zeros_like(c) for c in C]
        assert nmse_cascaded(zeros, C) == pytest.approx(1.0, rel=1e-12)

    def test_known_perturbation(self):
        rng = np.random.default_rng(2)
        C = _random_tensors(rng, 1, (2, 4, 5))
        E = _random_tensors(rng, 1, (2, 4, 5))
        expect = np.sum(np.abs(E[0]) ** 2) / np.sum(np.abs(C[0]) ** 2)
        assert nmse_cascaded([C[0] + E[0]], C) == pytest.approx(expect, rel=1e-12)

    def test_ratio_of_sums_not_mean_of_ratios(self):
        """Trials are pooled in numerator and denominator separately."""
        C1, C2 = np.ones((1, 1, 1)), 2 * np.ones((1, 1, 1))
        est1, est2 = 2 * np.ones((1, 1, 1)), 2 * np.ones((1, 1, 1))
        # errors 1 and 0, energies 1 and 4 -> (1 + 0) / (1 + 4)
        assert nmse_cascaded([est1, est2], [C1, C2]) == pytest.approx(0.2)

    def test_zero_truth_rejected(self):
        with pytest.raises(ValueError, match="zero energy"):
            nmse_cascaded([np.ones((1, 2, 2))], [np.zeros((1, 2, 2))])

    def test_unit_modulus_scalar_invariance(self):
        rng = np.random.default_rng(3)
        C = _random_tensors(rng, 2, (2, 3, 3))
        est = [c + 0.1 * e for c, e in zip(C, _random_tensors(rng, 2, (2, 3, 3)))]
        base = nmse_cascaded(est, C)
        c = np.exp(1j * 0.77)
        scaled = nmse_cascaded([c * x for x in est], [c * x for x in C])
        assert scaled == pytest.approx(base, rel=1e-12)


class TestNmseDirect:
    def test_trivials_and_perturbation(self):
        rng = np.random.default_rng(4)
        h = _random_tensors(rng, 2, (3, 4))
        assert nmse_direct(h, h) == 0.0
        assert nmse_direct([np.zeros_like(x) for x in h], h) == pytest.approx(1.0, rel=1e-12)
        e = _random_tensors(rng, 2, (3, 4))
        expect = sum(np.sum(np.abs(x) ** 2) for x in e) / sum(np.sum(np.abs(x) ** 2) for x in h)
        assert nmse_direct([a + b for a, b in zip(h, e)], h) == pytest.approx(expect, rel=1e-12)


class TestNmseSignAligned:
    def test_negated_estimate_is_exact(self):
        rng = np.random.default_rng(5)
        G = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        assert nmse_sign_aligned(-G, G) == pytest.approx(0.0, abs=1e-15)
        assert nmse_sign_aligned(G, G) == 0.0

    def test_per_column_signs(self):
        rng = np.random.default_rng(6)
        G = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        signs = np.array([1, -1, 1, -1, -1, 1.0])
        assert nmse_sign_aligned(G * signs[None, :], G) == pytest.approx(0.0, abs=1e-15)

    def test_known_perturbation_same_sign(self):
        rng = np.random.default_rng(7)
        G = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        E = 0.01 * (rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6)))
        expect = np.sum(np.abs(E) ** 2) / np.sum(np.abs(G) ** 2)
        assert nmse_sign_aligned(G + E, G) == pytest.approx(expect, rel=1e-12)


class TestFbarStatistics:
    def test_mean_and_std(self):
        J = np.array([[4.0, 2.0], [8.0, 2.0]])
        mean, std = fbar_statistics(J, denominator=2.0)
        np.testing.assert_allclose(mean, [3.0, 1.0])
        np.testing.assert_allclose(std, [1.0, 0.0])

    def test_rejects_bad_denominator(self):
        with pytest.raises(ValueError):
            fbar_statistics(np.ones((2, 2)), 0.0)


class TestPilotOverhead:
    def test_reference_scenario(self, paper_cfg):
        rep = pilot_overhead(paper_cfg)
        assert rep.tau1 == 130
        assert rep.tau2 == 24
        assert rep.tau_avg == pytest.approx(32.125)
        assert rep.baseline_mvu == 768
        assert rep.baseline_reduced == 86

    def test_alpha_two_boundary(self, paper_cfg):
        rep = pilot_overhead(replace(paper_cfg, alpha_timescale=2.0))
        assert rep.tau_avg == pytest.approx(65 + 24)
        assert rep.tau_avg < rep.baseline_mvu

    def test_beats_both_baselines_above_alpha_two(self, paper_cfg):
        for alpha in (4.0, 8.0, 16.0, 32.0):
            rep = pilot_overhead(replace(paper_cfg, alpha_timescale=alpha))
            assert rep.tau_avg < rep.baseline_mvu
            assert rep.tau_avg < rep.baseline_reduced

    def test_infinite_timescale_limit(self):
        cfg = SystemConfig(M=4, N=4, K=1, L=2, alpha_timescale=math.inf)
        rep = pilot_overhead(cfg)
        assert rep.tau2 == 2
        assert rep.tau_avg == pytest.approx(2.0)

    def test_monotone_in_alpha(self, paper_cfg):
        values = [
            pilot_overhead(replace(paper_cfg, alpha_timescale=a)).tau_avg
            for a in (2.0, 4.0, 8.0, 16.0, 32.0)
        ]
        assert all(x > y for x, y in zip(values, values[1:]))
