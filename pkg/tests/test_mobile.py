"""Tests for the uplink pilot phase and LS mobile-channel recovery."""
from dataclasses import replace

import numpy as np
import pytest
import scipy.stats

from risce.channels import ChannelRealization, cascade, sample_channels
from risce.config import SystemConfig, derive_link_budget, derive_stream
from risce.mobile import (
    RankDeficiencyError,
    UplinkPilotPlan,
    assemble_measurement_matrix,
    despread,
    estimate_mobile,
    generate_pilot_plan,
    ls_estimate,
    orthogonal_pilots,
    simulate_uplink_frame,
)
from conftest import noiseless


def _realization(rng, M, N, K, scale=1.0):
    s = lambda *sh: scale * (rng.standard_normal(sh) + 1j * rng.standard_normal(sh))
    return ChannelRealization(G=s(M, N), f=s(K, N), h=s(K, M))


class TestPilotPlan:
    def test_gram_matrix(self):
        for K, P in [(1, 1.0), (4, 2.5), (8, 1.0)]:
            X = orthogonal_pilots(K, P)
            np.testing.assert_allclose(X.conj().T @ X, K * P * np.eye(K), atol=1e-10)

    def test_single_user_constant_sequence(self):
        X = orthogonal_pilots(1, 4.0)
        np.testing.assert_allclose(X, [[2.0]], atol=1e-14)

    def test_reflection_phases_unit_modulus(self, small_cfg):
        plan = generate_pilot_plan(small_cfg, derive_stream(0, "plan"))
        np.testing.assert_allclose(np.abs(plan.Phi_tilde), 1.0, atol=1e-14)
        assert plan.Phi_tilde.shape == (small_cfg.N, small_cfg.tau0)

    def test_phase_distribution_uniform(self):
        """Chi-squared uniformity test at the 1% level over 1e5 phase draws."""
        cfg = SystemConfig(M=4, N=100, K=2, tau0=1000, seed=0)
        plan = generate_pilot_plan(cfg, derive_stream(1, "phases"))
        phases = np.mod(np.angle(plan.Phi_tilde.ravel()), 2 * np.pi)
        assert phases.size == 100_000
        counts, _ = np.histogram(phases, bins=20, range=(0.0, 2 * np.pi))
        assert scipy.stats.chisquare(counts).pvalue > 0.01


class TestSimulateUplink:
    def test_single_user_hand_formula(self):
        """Zero noise, K=1: every slot carries (G diag(f) phi + h) * x[s]."""
        cfg = noiseless(SystemConfig(M=3, N=2, K=1, L=2, tau0=2, seed=0))
        rng = np.random.default_rng(2)
        real = _realization(rng, 3, 2, 1)
        plan = generate_pilot_plan(cfg, derive_stream(2, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(2, "noise"))
        for t in range(2):
            u = real.G @ (real.f[0] * plan.Phi_tilde[:, t]) + real.h[0]
            for s in range(1):
                np.testing.assert_allclose(obs.Y[t][:, s], u * plan.X[s, 0], rtol=1e-12)

    def test_zero_channels_leave_pure_noise(self):
        """With every channel zero the observation equals the noise draw."""
        cfg = replace(SystemConfig(M=4, N=3, K=2, L=2, seed=0), sigma2_n=0.5)
        real = ChannelRealization(
            G=np.zeros((4, 3), dtype=complex),
            f=np.zeros((2, 3), dtype=complex),
            h=np.zeros((2, 4), dtype=complex),
        )
        plan = generate_pilot_plan(cfg, derive_stream(3, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(3, "noise"))
        # Replaying the stream reproduces the simulator's one and only draw.
        from risce.channels import complex_normal
        expect = complex_normal(derive_stream(3, "noise").rng,
                                (cfg.tau0, 4, 2), cfg.sigma2_n)
        np.testing.assert_array_equal(obs.Y, expect)

    def test_received_energy_scales_with_users(self):
        """Per-slot received energy grows linearly in the number of UEs."""
        energies = {}
        for K in (1, 4):
            cfg = noiseless(SystemConfig(M=8, N=8, K=K, L=2, tau0=4, seed=0))
            total = 0.0
            count = 0
            for t in range(400):
                rng = derive_stream(10 + K, f"trial-{t}").rng
                real = _realization(rng, 8, 8, K)
                plan = generate_pilot_plan(cfg, derive_stream(10 + K, f"plan-{t}"))
                obs = simulate_uplink_frame(real, plan, cfg,
                                            derive_stream(10 + K, f"noise-{t}"))
                total += float(np.sum(np.abs(obs.Y) ** 2))
                count += obs.Y.shape[0] * obs.Y.shape[2]  # slots
            energies[K] = total / count
        assert energies[4] / energies[1] == pytest.approx(4.0, rel=0.1)


class TestDespread:
    def test_zero_noise_matches_block_model(self):
        """Despread output equals A_t [f; h] per sub-frame, exactly."""
        cfg = noiseless(SystemConfig(M=4, N=4, K=3, L=2, seed=0))
        rng = np.random.default_rng(4)
        real = _realization(rng, 4, 4, 3)
        plan = generate_pilot_plan(cfg, derive_stream(4, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(4, "noise"))
        A = assemble_measurement_matrix(real.G, plan)
        for k in range(3):
            y = despread(obs, plan, k)
            expect = A.A @ np.concatenate([real.f[k], real.h[k]])
            np.testing.assert_allclose(y, expect, rtol=1e-11, atol=1e-13)

    def test_other_users_cancel(self):
        """Perturbing other UEs' channels does not move UE k's despread pilots."""
        cfg = noiseless(SystemConfig(M=4, N=4, K=3, L=2, seed=0))
        rng = np.random.default_rng(5)
        real1 = _realization(rng, 4, 4, 3)
        f2, h2 = real1.f.copy(), real1.h.copy()
        f2[1:] *= -3.0
        h2[1:] += 1.0 + 1.0j
        real2 = ChannelRealization(G=real1.G, f=f2, h=h2)
        plan = generate_pilot_plan(cfg, derive_stream(5, "plan"))
        y1 = despread(simulate_uplink_frame(real1, plan, cfg, derive_stream(5, "n")), plan, 0)
        y2 = despread(simulate_uplink_frame(real2, plan, cfg, derive_stream(5, "n")), plan, 0)
        assert np.linalg.norm(y1 - y2) < 1e-10 * np.linalg.norm(y1)

    def test_noise_variance_after_despreading(self):
        """Despread noise variance within 5% of sigma_n^2 / (K P_UE)."""
        cfg = replace(SystemConfig(M=8, N=8, K=2, L=2, seed=0), sigma2_n=0.3, P_UE=2.0)
        zero = ChannelRealization(
            G=np.zeros((8, 8), dtype=complex),
            f=np.zeros((2, 8), dtype=complex),
            h=np.zeros((2, 8), dtype=complex),
        )
        samples = []
        for t in range(700):
            plan = generate_pilot_plan(cfg, derive_stream(6, f"p{t}"))
            obs = simulate_uplink_frame(zero, plan, cfg, derive_stream(6, f"n{t}"))
            samples.append(despread(obs, plan, 0))
        entries = np.concatenate(samples)
        assert entries.size >= 10_000
        expect = cfg.sigma2_n / (cfg.K * cfg.P_UE)
        assert np.mean(np.abs(entries) ** 2) == pytest.approx(expect, rel=0.05)


class TestMeasurementMatrix:
    def test_single_subframe_all_ones(self):
        """tau0 = 1 with an all-ones reflection gives [G | I]."""
        rng = np.random.default_rng(7)
        G = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
        plan = UplinkPilotPlan(X=orthogonal_pilots(1, 1.0),
                               Phi_tilde=np.ones((2, 1), dtype=complex))
        A = assemble_measurement_matrix(G, plan)
        np.testing.assert_array_equal(A.A, np.hstack([G, np.eye(3)]))

    def test_reference_dimensions(self, paper_cfg):
        plan = generate_pilot_plan(paper_cfg, derive_stream(8, "plan"))
        rng = np.random.default_rng(8)
        G = rng.standard_normal((32, 64)) + 0j
        A = assemble_measurement_matrix(G, plan)
        assert A.A.shape == (96, 96)

    def test_identity_blocks(self, small_cfg):
        plan = generate_pilot_plan(small_cfg, derive_stream(9, "plan"))
        rng = np.random.default_rng(9)
        M, N = small_cfg.M, small_cfg.N
        G = rng.standard_normal((M, N)) + 0j
        A = assemble_measurement_matrix(G, plan).A
        for t in range(small_cfg.tau0):
            block = A[t * M:(t + 1) * M, N:]
            np.testing.assert_array_equal(block, np.eye(M))


class TestLsEstimate:
    def test_exact_recovery_with_true_matrix(self, small_cfg):
        cfg = noiseless(small_cfg)
        budget = derive_link_budget(cfg)
        real = sample_channels(cfg, budget, derive_stream(10, "ch"))
        plan = generate_pilot_plan(cfg, derive_stream(10, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(10, "noise"))
        A = assemble_measurement_matrix(real.G, plan)
        for k in range(cfg.K):
            f_hat, h_hat = ls_estimate(A, despread(obs, plan, k))
            np.testing.assert_allclose(f_hat, real.f[k], rtol=1e-10, atol=1e-14)
            np.testing.assert_allclose(h_hat, real.h[k], rtol=1e-10, atol=1e-14)

    def test_zero_observation_gives_zero(self, small_cfg):
        rng = np.random.default_rng(11)
        G = rng.standard_normal((small_cfg.M, small_cfg.N)) + 0j
        plan = generate_pilot_plan(small_cfg, derive_stream(11, "plan"))
        A = assemble_measurement_matrix(G, plan)
        f_hat, h_hat = ls_estimate(A, np.zeros(A.A.shape[0], dtype=complex))
        np.testing.assert_allclose(f_hat, 0, atol=1e-14)
        np.testing.assert_allclose(h_hat, 0, atol=1e-14)

    def test_rank_deficiency_detected(self, small_cfg):
        """A zero BS-RIS block leaves the f columns unobservable."""
        plan = generate_pilot_plan(small_cfg, derive_stream(12, "plan"))
        A = assemble_measurement_matrix(
            np.zeros((small_cfg.M, small_cfg.N), dtype=complex), plan
        )
        with pytest.raises(RankDeficiencyError):
            ls_estimate(A, np.zeros(A.A.shape[0], dtype=complex))

    def test_ls_error_covariance(self):
        """Empirical MSE within 10% of sigma_nd^2 * trace((A^H A)^-1)."""
        cfg = replace(SystemConfig(M=8, N=8, K=2, L=2, seed=0), sigma2_n=1e-2)
        budget = derive_link_budget(cfg)
        real = sample_channels(cfg, budget, derive_stream(13, "ch"))
        plan = generate_pilot_plan(cfg, derive_stream(13, "plan"))
        A = assemble_measurement_matrix(real.G, plan)
        gram_inv = np.linalg.inv(A.A.conj().T @ A.A)
        predicted = cfg.sigma2_n / (cfg.K * cfg.P_UE) * float(np.real(np.trace(gram_inv)))
        truth = np.concatenate([real.f[0], real.h[0]])
        sq_err = 0.0
        trials = 2000
        for t in range(trials):
            obs = simulate_uplink_frame(real, plan, cfg, derive_stream(13, f"n{t}"))
            f_hat, h_hat = ls_estimate(A, despread(obs, plan, 0))
            sq_err += float(np.sum(np.abs(np.concatenate([f_hat, h_hat]) - truth) ** 2))
        assert sq_err / trials == pytest.approx(predicted, rel=0.10)


class TestEstimateMobile:
    def test_matches_per_user_solves(self, small_cfg):
        cfg = small_cfg
        budget = derive_link_budget(cfg)
        real = sample_channels(cfg, budget, derive_stream(14, "ch"))
        plan = generate_pilot_plan(cfg, derive_stream(14, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(14, "noise"))
        mob = estimate_mobile(obs, plan, real.G)
        A = assemble_measurement_matrix(real.G, plan)
        for k in range(cfg.K):
            f_hat, h_hat = ls_estimate(A, despread(obs, plan, k))
            np.testing.assert_allclose(mob.f_hat[k], f_hat, rtol=1e-12)
            np.testing.assert_allclose(mob.h_hat[k], h_hat, rtol=1e-12)
        np.testing.assert_allclose(
            mob.C_hat, real.G[None, :, :] * mob.f_hat[:, None, :], rtol=1e-12
        )

    def test_gauge_absorption(self, small_cfg):
        """Per-column phases moved into the BS-RIS estimate cancel in C_hat.

        Feeding G diag(p) instead of G flips f_hat to f_hat / p while the
        reconstructed cascaded channels stay put; per-column sign errors of
        the quasi-static stage are therefore harmless downstream.
        """
        cfg = small_cfg
        budget = derive_link_budget(cfg)
        real = sample_channels(cfg, budget, derive_stream(15, "ch"))
        plan = generate_pilot_plan(cfg, derive_stream(15, "plan"))
        obs = simulate_uplink_frame(real, plan, cfg, derive_stream(15, "noise"))
        base = estimate_mobile(obs, plan, real.G)
        rng = np.random.default_rng(15)
        for p in (
            np.where(rng.uniform(size=cfg.N) < 0.5, -1.0, 1.0).astype(complex),
            np.exp(2j * np.pi * rng.uniform(size=cfg.N)),
        ):
            mob = estimate_mobile(obs, plan, real.G * p[None, :])
            np.testing.assert_allclose(mob.f_hat, base.f_hat / p[None, :], rtol=1e-9)
            rel = np.linalg.norm(mob.C_hat - base.C_hat) / np.linalg.norm(base.C_hat)
            assert rel < 1e-10
            np.testing.assert_allclose(mob.h_hat, base.h_hat, rtol=1e-9)
