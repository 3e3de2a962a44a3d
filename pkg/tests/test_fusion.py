"""Composite-measurement fusion: Gauss-Newton MLE, Fisher information, and
the recursive Bayesian information form."""

import numpy as np
import pytest

from hrcn.fusion import (DivergenceError, RankDeficiencyError,
                         StackedMeasurements, bayesian_fim, fim, ils_mle,
                         predict_state, prior_information)
from hrcn.kinematics import (measure, measurement_jacobian, process_noise_cov,
                             transition_matrix)

RADARS = np.array([[0.0, 0.0], [10000.0, 0.0], [0.0, 10000.0]])
TRUE_STATE = np.array([4000.0, 80.0, 5000.0, -60.0])
T_FUSE = 6.0


def make_stack(noise_rng=None, cov_scale=1.0, n_radars=3, times_per=3):
    """Stacked range/bearing fixes generated from TRUE_STATE at T_FUSE."""
    vals, times, rxy, cdiag = [], [], [], []
    base_cov = np.array([25.0, 1e-6])
    for i in range(n_radars):
        for m in range(times_per):
            t = 2.0 + 2.0 * m
            s_t = predict_state(TRUE_STATE, t - T_FUSE)
            r, th = measure(s_t, RADARS[i])
            cov = cov_scale * base_cov
            if noise_rng is not None:
                noise = np.sqrt(cov) * noise_rng.standard_normal(2)
                r, th = r + noise[0], th + noise[1]
            vals.append([r, th])
            times.append(t)
            rxy.append(RADARS[i])
            cdiag.append(cov)
    m_total = len(vals)
    return StackedMeasurements(
        values=np.array(vals), times=np.array(times),
        radar_xy=np.array(rxy), cov_diag=np.array(cdiag),
        radar_ids=np.repeat(np.arange(n_radars), times_per)[:m_total],
        t_fuse=T_FUSE)


class TestIlsMle:
    def test_noiseless_recovery(self):
        stack = make_stack()
        init = TRUE_STATE + np.array([10.0, 1.0, -10.0, -1.0])
        cm = ils_mle(stack, init)
        np.testing.assert_allclose(cm.estimate, TRUE_STATE, atol=1e-6)
        assert cm.step_norm < 1e-8

    def test_underdetermined_rejected(self):
        stack = make_stack(n_radars=1, times_per=1)
        with pytest.raises(RankDeficiencyError):
            ils_mle(stack, TRUE_STATE)

    def test_covariance_scale_equivariance(self):
        rng = np.random.default_rng(0)
        stack1 = make_stack(noise_rng=np.random.default_rng(1))
        stack_c = StackedMeasurements(
            values=stack1.values, times=stack1.times,
            radar_xy=stack1.radar_xy, cov_diag=3.0 * stack1.cov_diag,
            radar_ids=stack1.radar_ids, t_fuse=stack1.t_fuse)
        init = TRUE_STATE + rng.normal(0, 10, 4)
        cm1 = ils_mle(stack1, init)
        cm3 = ils_mle(stack_c, init)
        np.testing.assert_allclose(cm3.estimate, cm1.estimate, rtol=1e-8)
        np.testing.assert_allclose(cm3.covariance, 3.0 * cm1.covariance,
                                   rtol=1e-8)

    def test_nonfinite_init_rejected(self):
        with pytest.raises(ValueError):
            ils_mle(make_stack(), np.array([np.nan, 0, 0, 0]))

    def test_divergence_reported(self):
        stack = make_stack(noise_rng=np.random.default_rng(2))
        with pytest.raises(DivergenceError):
            ils_mle(stack, TRUE_STATE, max_iter=1, tol=1e-15)


class TestFim:
    def test_matches_bruteforce(self):
        stack = make_stack()
        J = fim(stack, TRUE_STATE)
        expected = np.zeros((4, 4))
        for m in range(len(stack)):
            F_back = transition_matrix(stack.times[m] - stack.t_fuse)
            s_t = F_back @ TRUE_STATE
            H = measurement_jacobian(s_t, stack.radar_xy[m]) @ F_back
            expected += H.T @ np.diag(1.0 / stack.cov_diag[m]) @ H
        np.testing.assert_allclose(J, expected, rtol=1e-12)

    def test_linear_in_inverse_covariance(self):
        stack = make_stack()
        halved = StackedMeasurements(
            values=stack.values, times=stack.times, radar_xy=stack.radar_xy,
            cov_diag=0.5 * stack.cov_diag, radar_ids=stack.radar_ids,
            t_fuse=stack.t_fuse)
        np.testing.assert_allclose(fim(halved, TRUE_STATE),
                                   2.0 * fim(stack, TRUE_STATE), rtol=1e-12)

    def test_empty_stack_gives_zero(self):
        empty = StackedMeasurements(
            values=np.zeros((0, 2)), times=np.zeros(0),
            radar_xy=np.zeros((0, 2)), cov_diag=np.zeros((0, 2)),
            radar_ids=np.zeros(0, dtype=int), t_fuse=T_FUSE)
        np.testing.assert_array_equal(fim(empty, TRUE_STATE), np.zeros((4, 4)))

    def test_sample_covariance_near_crb(self):
        # Monte-Carlo efficiency: the ILS estimator should be close to the
        # bound at this noise level (the acceptance suite pins the band)
        crb = np.linalg.inv(fim(make_stack(), TRUE_STATE))
        rng = np.random.default_rng(3)
        errs = []
        for _ in range(300):
            cm = ils_mle(make_stack(noise_rng=rng), TRUE_STATE)
            errs.append(cm.estimate - TRUE_STATE)
        sample = np.cov(np.array(errs).T)
        assert np.trace(sample) >= 0.85 * np.trace(crb)
        assert np.trace(sample) <= 1.5 * np.trace(crb)


class TestBayesianFim:
    F = transition_matrix(T_FUSE)
    GAMMA = process_noise_cov(T_FUSE, 1.0)
    PRIOR = np.diag([1e-2, 1e-1, 1e-2, 1e-1])

    def _kernels(self, rng, n=3):
        out = []
        for _ in range(n):
            W = rng.normal(size=(4, 2))
            out.append(W @ W.T)
        return out

    def test_zero_powers_gives_prior_only(self):
        rng = np.random.default_rng(4)
        kernels = self._kernels(rng)
        B = bayesian_fim(self.PRIOR, kernels, np.zeros(3), self.F, self.GAMMA)
        np.testing.assert_allclose(
            B, prior_information(self.PRIOR, self.F, self.GAMMA), rtol=1e-12)

    def test_information_additivity_identity_transition(self):
        rng = np.random.default_rng(5)
        kernels = self._kernels(rng)
        scales = rng.uniform(0.5, 2.0, 3)
        B = bayesian_fim(self.PRIOR, kernels, scales, np.eye(4),
                         np.zeros((4, 4)))
        expected = self.PRIOR + sum(s * D for s, D in zip(scales, kernels))
        np.testing.assert_allclose(B, expected, rtol=1e-12)

    def test_scalar_toy_case(self):
        # one radar, hand-substituted scalars on a diagonal system
        prior = np.diag([2.0, 2.0, 2.0, 2.0])
        D = np.diag([3.0, 0.0, 3.0, 0.0])
        scale = 0.5
        B = bayesian_fim(prior, [D], np.array([scale]), np.eye(4),
                         np.zeros((4, 4)))
        np.testing.assert_allclose(np.diag(B), [3.5, 2.0, 3.5, 2.0])

    def test_monotone_in_resource_scale(self):
        rng = np.random.default_rng(6)
        kernels = self._kernels(rng)
        scales = rng.uniform(0.5, 2.0, 3)
        B1 = bayesian_fim(self.PRIOR, kernels, scales, self.F, self.GAMMA)
        B2 = bayesian_fim(self.PRIOR, kernels, scales * 1.5, self.F, self.GAMMA)
        assert np.min(np.linalg.eigvalsh(B2 - B1)) >= -1e-10

    def test_psd_across_chained_intervals(self):
        rng = np.random.default_rng(7)
        B = self.PRIOR.copy()
        for _ in range(20):
            kernels = self._kernels(rng)
            scales = rng.uniform(0.0, 2.0, 3)
            B = bayesian_fim(B, kernels, scales, self.F, self.GAMMA)
            np.testing.assert_allclose(B, B.T, atol=1e-14)
            assert np.min(np.linalg.eigvalsh(B)) >= -1e-12
