"""CRP prior, conjugate marginal, sufficient statistics, posterior score."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fedclust.dpmm import (Assignment, DPConfig, canonical_labels,
                           cluster_log_marginal, crp_conditional_logprobs,
                           crp_joint_logprior, posterior_logscore,
                           predictive_logpdf, sample_crp_partition, stats_add,
                           stats_empty, stats_from_points, stats_remove)
from fedclust.sampler import _iter_partitions, enumerate_posterior
from fedclust.validate import (montecarlo_log_marginal,
                               quadrature_log_marginal,
                               sequential_crp_logprob)

CFG_UNIT = DPConfig(alpha=1.0, mu0=0.0, sigma0_sq=1.0, sigma_sq=1.0)


class TestCrpConditional:
    def test_hand_case_two_clusters(self):
        probs = np.exp(crp_conditional_logprobs([2, 1], 3, 1.0))
        assert np.allclose(probs, [0.5, 0.25, 0.25], atol=1e-12)

    def test_first_customer_opens_new_cluster(self):
        probs = np.exp(crp_conditional_logprobs([], 0, 1.0))
        assert probs.shape == (1,)
        assert probs[0] == pytest.approx(1.0)

    def test_small_alpha_prefers_existing(self):
        probs = np.exp(crp_conditional_logprobs([5], 5, 1e-12))
        assert probs[0] > 1.0 - 1e-9

    def test_negative_sizes_rejected(self):
        with pytest.raises(ValueError):
            crp_conditional_logprobs([2, -1], 1, 1.0)

    def test_mismatched_total_rejected(self):
        with pytest.raises(ValueError):
            crp_conditional_logprobs([2, 1], 4, 1.0)

    def test_probabilities_normalise(self):
        probs = np.exp(crp_conditional_logprobs([3, 2, 2], 7, 0.7))
        assert probs.sum() == pytest.approx(1.0, abs=1e-12)


class TestCrpJoint:
    @pytest.mark.parametrize("labels,alpha,expected", [
        ([0, 0, 0], 1.0, 1 / 3),
        ([0, 1, 2], 1.0, 1 / 6),
        ([0, 0, 1], 2.0, 1 / 6),
    ])
    def test_hand_cases(self, labels, alpha, expected):
        a = Assignment.from_labels(labels)
        assert math.exp(crp_joint_logprior(a, alpha)) == pytest.approx(expected, rel=1e-12)

    def test_matches_sequential_conditionals_small(self):
        for m in range(1, 7):
            for alpha in (0.5, 1.0, 2.0):
                for labels in _iter_partitions(m):
                    joint = crp_joint_logprior(Assignment.from_labels(labels), alpha)
                    seq = sequential_crp_logprob(labels, alpha)
                    assert joint == pytest.approx(seq, abs=1e-9)

    def test_exchangeable_under_reordering(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 3, size=9)
        a = Assignment.from_labels(labels)
        for _ in range(10):
            perm = rng.permutation(9)
            b = Assignment.from_labels(labels[perm])
            assert crp_joint_logprior(a, 1.3) == pytest.approx(
                crp_joint_logprior(b, 1.3), abs=1e-12)


class TestClusterMarginal:
    def test_single_point_at_origin(self):
        stats = stats_from_points(np.zeros((1, 1)))
        assert cluster_log_marginal(stats, CFG_UNIT) == pytest.approx(
            -0.5 * math.log(4 * math.pi), abs=1e-12)

    def test_two_points_at_origin(self):
        # quadrature oracle value; equals log(1/(2*pi*sqrt(3)))
        stats = stats_from_points(np.zeros((2, 1)))
        oracle = quadrature_log_marginal(np.zeros(2), CFG_UNIT)
        assert oracle == pytest.approx(-2.3871832107434, abs=1e-9)
        assert cluster_log_marginal(stats, CFG_UNIT) == pytest.approx(oracle, abs=1e-9)

    def test_single_point_predictive_identity_any_dim(self):
        rng = np.random.default_rng(1)
        for d in (1, 2, 5):
            x = rng.normal(size=d)
            cfg = DPConfig(alpha=1.0, mu0=0.3, sigma0_sq=1.7, sigma_sq=0.6)
            var = cfg.sigma_sq + cfg.sigma0_sq
            expected = -0.5 * d * math.log(2 * math.pi * var) \
                - 0.5 * float(np.sum((x - 0.3) ** 2)) / var
            got = cluster_log_marginal(stats_from_points(x[None, :]), cfg)
            assert got == pytest.approx(expected, abs=1e-10)

    def test_against_quadrature_random_instances(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            pts = rng.normal(scale=2.0, size=n)
            cfg = DPConfig(alpha=1.0, mu0=float(rng.normal()),
                           sigma0_sq=float(rng.uniform(0.5, 2.0)),
                           sigma_sq=float(rng.uniform(0.5, 2.0)))
            closed = cluster_log_marginal(stats_from_points(pts[:, None]), cfg)
            assert closed == pytest.approx(quadrature_log_marginal(pts, cfg), abs=1e-6)

    def test_against_montecarlo_d3(self):
        rng = np.random.default_rng(3)
        pts = rng.normal(scale=1.5, size=(3, 3))
        cfg = DPConfig(alpha=1.0, mu0=0.1, sigma0_sq=1.2, sigma_sq=0.9)
        closed = cluster_log_marginal(stats_from_points(pts), cfg)
        est, half = montecarlo_log_marginal(pts, cfg, 1_000_000, rng)
        assert abs(math.exp(closed - est) - 1.0) < half

    def test_empty_stats_convention(self):
        assert cluster_log_marginal(stats_empty(3), CFG_UNIT) == 0.0

    def test_predictive_matches_marginal_ratio(self):
        rng = np.random.default_rng(4)
        pts = rng.normal(size=(4, 2))
        x = rng.normal(size=2)
        cfg = DPConfig(alpha=1.0, mu0=-0.2, sigma0_sq=0.8, sigma_sq=1.4)
        stats = stats_from_points(pts)
        ratio = cluster_log_marginal(stats_add(stats, x), cfg) \
            - cluster_log_marginal(stats, cfg)
        assert predictive_logpdf(x, stats, cfg) == pytest.approx(ratio, abs=1e-9)


class TestStats:
    def test_add_from_empty(self):
        x = np.array([1.0, -2.0])
        stats = stats_add(stats_empty(2), x)
        assert stats.n == 1
        assert np.array_equal(stats.sum, x)
        assert stats.sumsq == pytest.approx(5.0)

    def test_add_then_remove_is_identity(self):
        rng = np.random.default_rng(5)
        base = stats_from_points(rng.normal(size=(3, 4)))
        x = rng.normal(size=4)
        back = stats_remove(stats_add(base, x), x)
        assert back.n == base.n
        assert np.allclose(back.sum, base.sum, atol=1e-9)
        assert back.sumsq == pytest.approx(base.sumsq, abs=1e-9)

    def test_remove_to_empty_is_exact(self):
        x = np.array([0.5, 0.25])
        stats = stats_remove(stats_add(stats_empty(2), x), x)
        assert stats.n == 0
        assert np.all(stats.sum == 0.0)
        assert stats.sumsq == 0.0

    def test_remove_from_empty_rejected(self):
        with pytest.raises(ValueError):
            stats_remove(stats_empty(1), np.zeros(1))

    def test_folds_match_direct_computation(self):
        rng = np.random.default_rng(6)
        pts = rng.normal(size=(100, 3))
        stats = stats_empty(3)
        for row in pts:
            stats = stats_add(stats, row)
        direct = stats_from_points(pts)
        assert stats.n == direct.n
        assert np.allclose(stats.sum, direct.sum, atol=1e-7)
        assert stats.sumsq == pytest.approx(direct.sumsq, abs=1e-7)


class TestPosteriorScore:
    def test_single_point_score(self):
        x = np.array([[0.7]])
        a = Assignment.from_labels([0])
        expected = cluster_log_marginal(stats_from_points(x), CFG_UNIT)
        assert posterior_logscore(a, x, CFG_UNIT) == pytest.approx(expected, abs=1e-12)

    def test_total_mass_matches_bruteforce_evidence(self):
        # independent route: sequential-CRP prior x quadrature marginals
        rng = np.random.default_rng(7)
        reps = rng.normal(size=(3, 1))
        total = 0.0
        for labels in _iter_partitions(3):
            prior = sequential_crp_logprob(labels, CFG_UNIT.alpha)
            lik = 0.0
            for k in range(int(labels.max()) + 1):
                lik += quadrature_log_marginal(reps[labels == k, 0], CFG_UNIT)
            total += math.exp(prior + lik)
        direct = sum(
            math.exp(posterior_logscore(Assignment.from_labels(labels), reps, CFG_UNIT))
            for labels in _iter_partitions(3))
        assert direct == pytest.approx(total, rel=1e-6)

    def test_invariant_to_client_reordering(self):
        rng = np.random.default_rng(8)
        reps = rng.normal(size=(6, 2))
        labels = np.array([0, 0, 1, 1, 2, 0])
        a = Assignment.from_labels(labels)
        score = posterior_logscore(a, reps, CFG_UNIT)
        for _ in range(5):
            perm = rng.permutation(6)
            b = Assignment.from_labels(labels[perm])
            assert posterior_logscore(b, reps[perm], CFG_UNIT) == pytest.approx(
                score, abs=1e-9)


class TestAssignment:
    def test_from_labels_canonicalises(self):
        a = Assignment.from_labels([2, 0, 0, 1])
        assert np.array_equal(a.labels, [0, 1, 1, 2])
        assert a.k == 3
        assert np.array_equal(a.sizes, [1, 2, 1])

    def test_invalid_labels_rejected(self):
        with pytest.raises(ValueError):
            Assignment(labels=np.array([0, 2]), k=2, sizes=np.array([1, 1]))

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_canonical_labels_idempotent(self, labels):
        canon, k = canonical_labels(np.array(labels))
        again, k2 = canonical_labels(canon)
        assert k == k2
        assert np.array_equal(canon, again)
        assert canon[0] == 0
        assert canon.max() == k - 1


class TestCrpSampling:
    def test_partition_is_canonical(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            labels = sample_crp_partition(8, 1.0, rng)
            canon, _ = canonical_labels(labels)
            assert np.array_equal(labels, canon)

    def test_expected_cluster_count(self):
        rng = np.random.default_rng(10)
        draws = 20_000
        total = sum(int(sample_crp_partition(10, 1.0, rng).max()) + 1
                    for _ in range(draws))
        expected = sum(1.0 / i for i in range(1, 11))
        assert abs(total / draws - expected) / expected < 0.02


class TestEnumeration:
    def test_single_point(self):
        parts = enumerate_posterior(np.zeros((1, 1)), CFG_UNIT)
        assert len(parts) == 1
        assert parts[0][1] == pytest.approx(1.0)

    def test_identical_points_prefer_single_cluster(self):
        cfg = DPConfig(alpha=0.05, mu0=0.0, sigma0_sq=1.0, sigma_sq=1.0)
        parts = dict((tuple(lab.tolist()), p)
                     for lab, p in enumerate_posterior(np.zeros((3, 1)), cfg))
        assert parts[(0, 0, 0)] > parts[(0, 1, 2)]

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(11)
        parts = enumerate_posterior(rng.normal(size=(6, 2)), CFG_UNIT)
        assert len(parts) == 203  # Bell(6)
        assert sum(p for _, p in parts) == pytest.approx(1.0, abs=1e-9)

    def test_too_large_rejected(self):
        with pytest.raises(ValueError, match="enumeration too large"):
            enumerate_posterior(np.zeros((11, 1)), CFG_UNIT)
