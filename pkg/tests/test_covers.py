"""Tests for sequential and global covers, fat shattering and entropy bounds."""

import math

import pytest

from factories import binary_class, constant_class
from shtarkov_lab.core.hypothesis import random_explicit_class
from shtarkov_lab.models.trees import ContextTree, RealTree, enumerate_trees
from shtarkov_lab.services.covers_service import (
    CHAINING_CONSTANT,
    binary_value_table,
    entropy_regret_bounds,
    fat_shattering_dim,
    global_entropy,
    greedy_cover_size,
    induce_tree_cover,
    is_global_cover,
    is_sequential_cover,
    min_sequential_cover,
    sequential_entropy,
    smoothed_cover_ratios,
    worst_case_cover,
)
from shtarkov_lab.services.shtarkov_service import worst_case_shtarkov
from shtarkov_lab.shared.exceptions import (
    EnumerationBudgetExceeded,
    UnsupportedClassError,
    ValidationError,
)


@pytest.fixture
def four_functions():
    """Every {0,1}-valued function on two contexts."""
    return binary_class((0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0))


@pytest.fixture
def mixed():
    return binary_class((0.1, 0.8, 0.5), (0.7, 0.4, 0.5), (0.5, 0.95, 0.2), (0.3, 0.3, 0.9))


class TestValueTable:
    def test_oracle_class(self, bernoulli):
        with pytest.raises(UnsupportedClassError):
            binary_value_table(bernoulli)

    def test_non_binary(self):
        F = random_explicit_class(0, 2, 3, 1, 1)
        with pytest.raises(ValidationError):
            binary_value_table(F)

    def test_chaining_constant(self):
        assert CHAINING_CONSTANT == pytest.approx(3.2230, abs=1e-4)


class TestMinSequentialCover:
    def test_two_clusters(self):
        F = constant_class(0.1, 0.2, 0.9)
        size, certificate = min_sequential_cover(F, ContextTree.constant([0, 0], 2), 0.15)
        assert size == 2
        assert certificate.size == 2

    def test_extreme_functions_need_two(self):
        F = constant_class(0.0, 1.0)
        size, _ = min_sequential_cover(F, ContextTree.constant([0], 2), 0.3)
        assert size == 2

    def test_half_scale_covers_everything(self, mixed):
        size, _ = min_sequential_cover(mixed, ContextTree(2, 2, (0, 1, 2)), 0.5)
        assert size == 1

    def test_zero_scale_separates_distinct_functions(self, four_functions):
        size, _ = min_sequential_cover(four_functions, ContextTree.constant([0, 1], 2), 0.0)
        assert size == 4

    def test_certificate_is_a_cover(self, mixed):
        tree = ContextTree(3, 2, (0, 1, 2, 2, 0, 1, 0))
        size, certificate = min_sequential_cover(mixed, tree, 0.15)
        ok, failure = is_sequential_cover(certificate.trees, mixed, tree, 0.15)
        assert ok and failure is None
        assert len(certificate.witness) == len(mixed) * 2**3

    def test_smaller_set_is_not_a_cover(self, mixed):
        tree = ContextTree(2, 2, (0, 1, 2))
        size, certificate = min_sequential_cover(mixed, tree, 0.1)
        assert size > 1
        ok, failure = is_sequential_cover(certificate.trees[1:], mixed, tree, 0.1)
        assert not ok
        f, path = failure
        assert 0 <= f < len(mixed) and len(path) == 2

    def test_greedy_is_an_upper_bound(self, mixed):
        for tree in enumerate_trees(2, 2, 3):
            exact, _ = min_sequential_cover(mixed, tree, 0.1)
            greedy, certificate = greedy_cover_size(mixed, tree, 0.1)
            assert exact <= greedy <= len(mixed)
            assert is_sequential_cover(certificate.trees, mixed, tree, 0.1)[0]

    def test_depth_mismatch(self, mixed):
        with pytest.raises(ValidationError):
            is_sequential_cover([RealTree(1, (0.5,))], mixed, ContextTree.constant([0, 0], 2), 0.1)

    def test_negative_scale(self, mixed):
        with pytest.raises(ValidationError):
            min_sequential_cover(mixed, ContextTree.constant([0], 2), -0.1)

    def test_search_budget(self):
        table = [tuple(0.05 * i + 0.01 * x for x in range(3)) for i in range(8)]
        G = binary_class(*table)
        with pytest.raises(EnumerationBudgetExceeded):
            min_sequential_cover(G, ContextTree(3, 2, (0, 1, 2, 0, 1, 2, 0)), 0.01, budget=3)

    def test_smoothed_ratios(self, mixed):
        tree = ContextTree(2, 2, (0, 1, 2))
        for alpha in (0.05, 0.1, 0.2):
            _, certificate = min_sequential_cover(mixed, tree, alpha)
            upper, lower = smoothed_cover_ratios(certificate, mixed, tree)
            assert upper <= 1 + 2 * alpha + 1e-12
            assert lower <= 1 + 2 * alpha + 1e-12


class TestEntropies:
    def test_worst_case_tree_dominates(self, mixed):
        size, tree, certificate = worst_case_cover(mixed, 0.1, 2)
        assert certificate.size == size
        for other in enumerate_trees(2, 2, 3):
            assert min_sequential_cover(mixed, other, 0.1)[0] <= size
        assert min_sequential_cover(mixed, tree, 0.1)[0] == size

    def test_entropy_bounded_by_log_cardinality(self, mixed):
        for alpha in (0.0, 0.05, 0.2):
            assert sequential_entropy(mixed, alpha, 2) <= math.log(len(mixed)) + 1e-12

    def test_tree_budget(self, mixed):
        with pytest.raises(EnumerationBudgetExceeded):
            worst_case_cover(mixed, 0.1, 3, tree_budget=100)

    def test_global_cover(self, mixed):
        h_global, G = global_entropy(mixed, 0.15, 2)
        assert is_global_cover(G, mixed)
        assert h_global == pytest.approx(math.log(G.size))
        assert h_global >= sequential_entropy(mixed, 0.15, 2) - 1e-12

    def test_global_cover_induces_tree_cover(self, mixed):
        _, G = global_entropy(mixed, 0.1, 2)
        for tree in enumerate_trees(2, 2, 3):
            trees = induce_tree_cover(G, tree)
            assert is_sequential_cover(trees, mixed, tree, 0.1)[0]

    def test_global_cover_zero_horizon(self, mixed):
        h_global, G = global_entropy(mixed, 0.1, 0)
        assert h_global == 0.0
        assert G.size == 1

    def test_induced_depth_check(self, mixed):
        _, G = global_entropy(mixed, 0.1, 1)
        with pytest.raises(ValidationError):
            induce_tree_cover(G, ContextTree.constant([0, 0], 2))


class TestFatShattering:
    def test_two_constants(self):
        assert fat_shattering_dim(constant_class(0.0, 1.0), 0.5, 3) == 1

    def test_all_boolean_functions(self, four_functions):
        assert fat_shattering_dim(four_functions, 1.0, 4) == 2

    def test_scale_above_range(self, four_functions):
        assert fat_shattering_dim(four_functions, 1.5, 4) == 0

    def test_capped_by_max_depth(self, four_functions):
        assert fat_shattering_dim(four_functions, 0.5, 1) == 1

    def test_positive_scale(self, four_functions):
        with pytest.raises(ValidationError):
            fat_shattering_dim(four_functions, 0.0, 2)

    def test_lower_bounds_entropy(self, mixed):
        for alpha in (0.05, 0.1, 0.2):
            fat = fat_shattering_dim(mixed, 2 * alpha + 1e-9, 2)
            assert sequential_entropy(mixed, alpha, 2) >= min(2, fat) * math.log(2) - 1e-12


class TestEntropyRegretBounds:
    def test_bounds_dominate_regret(self, mixed):
        regret = worst_case_shtarkov(mixed, 2)
        report = entropy_regret_bounds(mixed, 2, [0.05, 0.1, 0.2, 0.4], exact_regret=regret)
        assert report.c_constant == pytest.approx(CHAINING_CONSTANT)
        assert report.finite_class_bound == pytest.approx(math.log(4))
        assert len(report.rows) == 4
        for row in report.rows:
            assert row.smoothed_cover_bound >= regret - 1e-9
            assert row.global_cover_bound >= row.smoothed_cover_bound - 1e-12
            assert row.fat_check

    def test_best_scale(self, mixed):
        report = entropy_regret_bounds(mixed, 2, [0.05, 0.4])
        best = min(report.rows, key=lambda r: r.chaining_bound)
        assert report.best_alpha["chaining_bound"] == best.alpha
        assert report.best_value["chaining_bound"] == best.chaining_bound

    def test_empty_grid(self, mixed):
        with pytest.raises(ValidationError):
            entropy_regret_bounds(mixed, 2, [])
