"""Tests for the smooth truncation map and its regret and likelihood bounds."""

import math

import numpy as np
import pytest

from factories import constant_class, pointmass_class
from shtarkov_lab.core.experts import PointMassExpert, random_table_expert
from shtarkov_lab.models.alphabets import Distribution
from shtarkov_lab.services.truncation_service import (
    TruncationLevel,
    in_truncated_image,
    inverse_truncate,
    m_of_t,
    sample_truncated_simplex,
    truncate_class,
    truncate_dist,
    truncated_regret_gap_check,
    truncation_likelihood_gap,
    truncation_loss_gap,
)
from shtarkov_lab.shared.exceptions import UnsupportedClassError, ValidationError
from shtarkov_lab.shared.utils.enumeration import sequences
from shtarkov_lab.shared.utils.logspace import NEG_INF


class TestTruncationMap:
    def test_binary_point_mass(self):
        assert truncate_dist(Distribution.point_mass(2, 0), 0.1).probs == pytest.approx(
            (11 / 12, 1 / 12)
        )

    def test_ternary_point_mass(self):
        assert truncate_dist(Distribution.point_mass(3, 0), 0.2).probs == pytest.approx(
            (0.75, 0.125, 0.125)
        )

    def test_uniform_is_fixed(self):
        assert truncate_dist(Distribution.uniform(4), 0.3).probs == pytest.approx((0.25,) * 4)

    @pytest.mark.parametrize("delta", [0.0, 0.5, -0.1, 0.7])
    def test_level_range(self, delta):
        with pytest.raises(ValidationError):
            TruncationLevel(delta)

    def test_inverse(self):
        p = Distribution.of([0.6, 0.0, 0.4])
        q = truncate_dist(p, 0.05)
        assert in_truncated_image(q, 0.05)
        assert inverse_truncate(q, 0.05).probs == pytest.approx(p.probs, abs=1e-12)

    def test_point_mass_outside_image(self):
        point = Distribution.point_mass(2, 1)
        assert not in_truncated_image(point, 0.1)
        with pytest.raises(ValidationError):
            inverse_truncate(point, 0.1)

    def test_image_samples(self):
        rng = np.random.default_rng(0)
        draws = sample_truncated_simplex(rng, 3, 0.1, 200)
        assert draws.shape == (200, 3)
        low, high = TruncationLevel(0.1).bounds(3)
        assert draws.min() >= low
        assert draws.max() <= high + 1e-12
        assert draws.sum(axis=1) == pytest.approx(np.ones(200))


class TestLossGap:
    @pytest.mark.parametrize("delta", [0.3, 0.1, 0.01])
    def test_bounded_by_log_scale(self, delta):
        rng = np.random.default_rng(1)
        for probs in rng.dirichlet(np.ones(3), size=50):
            p = Distribution.of(probs / math.fsum(probs))
            for y in range(3):
                assert truncation_loss_gap(p, y, delta) <= math.log1p(3 * delta) + 1e-12

    def test_zero_mass_label(self):
        assert truncation_loss_gap(Distribution.point_mass(2, 0), 1, 0.1) == NEG_INF

    def test_certain_label(self):
        gap = truncation_loss_gap(Distribution.point_mass(2, 0), 0, 0.1)
        assert gap == pytest.approx(math.log(12 / 11))


class TestLikelihoodGap:
    def test_bounded_by_delta_m(self):
        rng = np.random.default_rng(2)
        f = random_table_expert(rng, 2, 2, 3, strictly_positive=False)
        delta = 0.05
        for contexts in sequences(2, 3):
            for labels in sequences(2, 3):
                gap = truncation_likelihood_gap(f, contexts, labels, delta)
                assert gap <= delta * m_of_t(3) + 1e-12

    def test_point_mass_sequence(self):
        f = PointMassExpert(2, (1, 1))
        gap = truncation_likelihood_gap(f, (0, 0), (1, 1), 0.1)
        assert gap == pytest.approx((11 / 12) ** 2 - 1.0)

    def test_missed_sequence_gains_mass(self):
        f = PointMassExpert(2, (1, 1))
        gap = truncation_likelihood_gap(f, (0, 0), (0, 0), 0.1)
        assert gap == pytest.approx((1 / 12) ** 2)

    @pytest.mark.parametrize("T,expected", [(0, 0), (1, 1), (3, 7), (10, 1023)])
    def test_m_of_t(self, T, expected):
        assert m_of_t(T) == expected

    def test_m_of_t_range(self):
        with pytest.raises(ValidationError):
            m_of_t(-1)
        with pytest.raises(ValidationError):
            m_of_t(62)


class TestTruncatedClass:
    def test_experts_are_truncated(self, two_point):
        truncated = truncate_class(two_point, 0.1)
        assert len(truncated) == 2
        p = truncated.experts[1].predict((0,), ())
        assert p[1] == pytest.approx(0.9 / 1.2)

    def test_oracle_class(self, bernoulli):
        with pytest.raises(UnsupportedClassError):
            truncate_class(bernoulli, 0.1)

    def test_regret_and_shtarkov_inequalities(self, two_point):
        report = truncated_regret_gap_check(two_point, 2)
        assert report.m_of_t == 3
        assert [row.delta for row in report.rows] == [0.1, 0.03, 0.01, 0.003, 0.001]
        assert all(row.regret_inequality for row in report.rows)
        assert all(row.shtarkov_inequality for row in report.rows)
        assert report.monotone_convergence
        assert report.rows[-1].regret_gap < 0.01

    def test_seeded_classes(self, seeded_class):
        F, T = seeded_class
        report = truncated_regret_gap_check(F, T, delta_grid=(0.2, 0.02))
        for row in report.rows:
            assert row.regret_inequality
            assert row.shtarkov_inequality

    def test_sequential_experts_stay_sequential(self):
        truncated = truncate_class(pointmass_class((0, 1), (1, 1)), 0.1)
        assert not truncated.nonsequential

    def test_constant_experts_stay_nonsequential(self):
        truncated = truncate_class(constant_class(0.0, 1.0), 0.2)
        assert truncated.nonsequential
        p = truncated.experts[0].predict((0,), ())
        assert p.probs == pytest.approx((1.2 / 1.4, 0.2 / 1.4))
