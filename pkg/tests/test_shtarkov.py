"""Tests for Shtarkov sums and the worst-case recursion."""

import math

import pytest

from factories import binary_class, constant_class, pointmass_class
from shtarkov_lab.core.experts import ConstantExpert
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, bernoulli_full_class
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet, Prefix
from shtarkov_lab.models.trees import ContextTree, TimeVaryingConstraint, enumerate_trees
from shtarkov_lab.services.shtarkov_service import (
    SubProbClass,
    WorstCaseSolver,
    general_shtarkov,
    induce_subprob,
    shtarkov_conditional,
    shtarkov_contextfree,
    shtarkov_contextual,
    shtarkov_mc_estimate,
    shtarkov_prefix,
    worst_case_shtarkov,
    worst_case_shtarkov_bruteforce,
)
from shtarkov_lab.shared.exceptions import (
    EnumerationBudgetExceeded,
    SubProbabilityError,
    UnsupportedClassError,
    ValidationError,
)
from shtarkov_lab.shared.utils.logspace import logsumexp


class TestContextFree:
    @pytest.mark.parametrize("T,expected", [(0, 1.0), (1, 2.0), (2, 2.5)])
    def test_bernoulli_full(self, bernoulli, T, expected):
        assert shtarkov_contextfree(bernoulli, T) == pytest.approx(math.log(expected))

    def test_singleton_class_has_zero_regret(self, singleton):
        assert shtarkov_contextfree(singleton, 3) == pytest.approx(0.0, abs=1e-12)

    def test_two_point_class(self, two_point):
        assert shtarkov_contextfree(two_point, 2) == pytest.approx(math.log(1.6))

    def test_pointmass_class_counts_members(self):
        F = pointmass_class((0, 0, 1), (1, 0, 1), (1, 1, 1))
        assert shtarkov_contextfree(F, 3) == pytest.approx(math.log(3))

    def test_budget(self, bernoulli):
        with pytest.raises(EnumerationBudgetExceeded):
            shtarkov_contextfree(bernoulli, 4, budget=15)


class TestConditional:
    def test_matches_hand_computation(self):
        F = binary_class((0.2, 0.9), (0.6, 0.5))
        # y -> max over f of f(x1)^{y1}... with x = (0, 1)
        manual = 0.0
        for y1 in (0, 1):
            for y2 in (0, 1):
                manual += max(
                    (p0 if y1 else 1 - p0) * (p1 if y2 else 1 - p1)
                    for p0, p1 in [(0.2, 0.9), (0.6, 0.5)]
                )
        assert shtarkov_conditional(F, (0, 1)) == pytest.approx(math.log(manual))

    def test_length_and_context_checks(self):
        F = binary_class((0.2, 0.9))
        with pytest.raises(ValidationError):
            shtarkov_conditional(F, (0, 1), horizon=3)
        with pytest.raises(ValidationError):
            shtarkov_conditional(F, (0, 2))

    def test_contextual_on_constant_tree(self):
        F = binary_class((0.2, 0.9), (0.6, 0.5), (0.7, 0.1))
        tree = ContextTree.constant([1, 0, 1], 2)
        assert shtarkov_contextual(F, tree) == pytest.approx(shtarkov_conditional(F, (1, 0, 1)))

    def test_tree_outside_context_alphabet(self):
        F = binary_class((0.2, 0.9))
        with pytest.raises(ValidationError):
            shtarkov_contextual(F, ContextTree.constant([2], 2))


class TestPrefix:
    def test_bernoulli_after_one(self, bernoulli):
        tree = ContextTree.constant([0], 2)
        value = shtarkov_prefix(bernoulli, tree, Prefix((0,), (1,)), horizon=2)
        assert value == pytest.approx(math.log(1.25))

    def test_incomplete_prefix_rejected(self, bernoulli):
        with pytest.raises(ValidationError):
            shtarkov_prefix(bernoulli, ContextTree.constant([0], 2), Prefix((0, 0), (1,)))

    def test_depth_must_fill_horizon(self, bernoulli):
        with pytest.raises(ValidationError):
            shtarkov_prefix(bernoulli, ContextTree.constant([0], 2), Prefix((0,), (1,)), horizon=3)

    def test_empty_prefix_is_contextual(self, seeded_class):
        F, T = seeded_class
        tree = next(enumerate_trees(T, F.num_labels, F.num_contexts))
        assert shtarkov_prefix(F, tree, Prefix()) == pytest.approx(shtarkov_contextual(F, tree))


class TestWorstCase:
    def test_two_point(self, two_point):
        assert worst_case_shtarkov(two_point, 2) == pytest.approx(math.log(1.6))

    def test_prefix_value(self, bernoulli):
        value = worst_case_shtarkov(bernoulli, 2, Prefix((0,), (1,)))
        assert value == pytest.approx(math.log(1.25))

    def test_matches_bruteforce(self, seeded_class):
        F, T = seeded_class
        recursive = worst_case_shtarkov(F, T)
        brute, tree = worst_case_shtarkov_bruteforce(F, T)
        assert recursive == pytest.approx(brute, abs=1e-12)
        assert shtarkov_contextual(F, tree) == pytest.approx(brute, abs=1e-12)

    def test_dominates_every_tree(self):
        F = binary_class((0.1, 0.8), (0.7, 0.4), (0.5, 0.95))
        value = worst_case_shtarkov(F, 2)
        for tree in enumerate_trees(2, 2, 2):
            assert shtarkov_contextual(F, tree) <= value + 1e-12

    def test_bounded_by_log_cardinality(self, seeded_class):
        F, T = seeded_class
        assert worst_case_shtarkov(F, T) <= math.log(len(F)) + 1e-12

    def test_bruteforce_tree_count_budget(self):
        F = binary_class((0.1, 0.8), (0.7, 0.4))
        with pytest.raises(EnumerationBudgetExceeded):
            worst_case_shtarkov_bruteforce(F, 3, budget=100)
        value, _ = worst_case_shtarkov_bruteforce(F, 3, budget=128)
        assert value == pytest.approx(worst_case_shtarkov(F, 3))

    def test_constraint_pins_contexts(self):
        F = binary_class((0.1, 0.8), (0.7, 0.4), (0.5, 0.95))
        constraint = TimeVaryingConstraint([[1], [0], [1]])
        value = worst_case_shtarkov(F, 3, constraint=constraint)
        assert value == pytest.approx(shtarkov_conditional(F, (1, 0, 1)))
        brute, _ = worst_case_shtarkov_bruteforce(F, 3, constraint=constraint)
        assert brute == pytest.approx(value)


class TestWorstCaseSolver:
    def test_backward_step(self, seeded_class):
        F, T = seeded_class
        solver = WorstCaseSolver(F, T)
        prefix = Prefix()
        x, value = solver.best_context(prefix)
        assert value == pytest.approx(solver.value(prefix))
        assert logsumexp(solver.label_values(prefix, x)) == pytest.approx(value)

    def test_argmax_tree_is_optimal(self, seeded_class):
        F, T = seeded_class
        solver = WorstCaseSolver(F, T)
        tree = solver.argmax_tree()
        assert tree.depth == T
        assert shtarkov_contextual(F, tree) == pytest.approx(solver.value(), abs=1e-12)

    def test_argmax_tree_after_prefix(self):
        F = binary_class((0.1, 0.8), (0.7, 0.4), (0.5, 0.95))
        solver = WorstCaseSolver(F, 3)
        prefix = Prefix((1,), (0,))
        tree = solver.argmax_tree(prefix)
        assert tree.depth == 2
        assert shtarkov_prefix(F, tree, prefix) == pytest.approx(solver.value(prefix))

    def test_no_round_left(self, bernoulli):
        solver = WorstCaseSolver(bernoulli, 1)
        with pytest.raises(ValidationError):
            solver.best_context(Prefix((0,), (1,)))

    def test_negative_horizon(self, bernoulli):
        with pytest.raises(ValidationError):
            WorstCaseSolver(bernoulli, -1)


class TestMonteCarlo:
    def test_bernoulli_within_three_standard_errors(self, bernoulli):
        tree = ContextTree.constant([0, 0], 2)
        estimate, stderr = shtarkov_mc_estimate(bernoulli, tree, 10**5, seed=0)
        assert stderr > 0
        assert abs(estimate - 2.5) <= 3 * stderr

    def test_uniform_singleton_is_exact(self):
        F = ExplicitFiniteClass(
            [ConstantExpert(Distribution.uniform(2))], LabelAlphabet(2), ContextAlphabet(1)
        )
        estimate, stderr = shtarkov_mc_estimate(F, ContextTree.constant([0, 0], 2), 50, seed=3)
        assert estimate == pytest.approx(1.0)
        assert stderr == pytest.approx(0.0, abs=1e-12)

    def test_seed_reproducible(self, bernoulli):
        tree = ContextTree.constant([0, 0, 0], 2)
        first = shtarkov_mc_estimate(bernoulli, tree, 1000, seed=11)
        assert shtarkov_mc_estimate(bernoulli, tree, 1000, seed=11) == first

    def test_sample_count(self, bernoulli):
        with pytest.raises(ValidationError):
            shtarkov_mc_estimate(bernoulli, ContextTree.constant([0], 2), 0, seed=0)


class TestGeneralShtarkov:
    def test_disjoint_point_masses(self):
        P = SubProbClass.from_dicts([{"a": 1.0}, {"b": 1.0}])
        assert general_shtarkov(P) == pytest.approx(math.log(2))

    def test_single_map_gives_its_mass(self):
        P = SubProbClass.from_dicts([{"a": 0.2, "b": 0.3}])
        assert general_shtarkov(P) == pytest.approx(math.log(0.5))

    def test_mass_above_one(self):
        with pytest.raises(SubProbabilityError):
            SubProbClass.from_dicts([{"a": 0.7, "b": 0.4}])

    def test_induced_class_matches_prefix_sum(self):
        F = constant_class(0.2, 0.5, 0.8)
        tree = ContextTree.constant([0, 0], 2)
        prefix = Prefix((0,), (1,))
        P = induce_subprob(F, tree, prefix)
        assert len(P.ground) == 4
        assert general_shtarkov(P) == pytest.approx(shtarkov_prefix(F, tree, prefix))

    def test_oracle_class_cannot_be_materialised(self):
        with pytest.raises(UnsupportedClassError):
            induce_subprob(bernoulli_full_class(), ContextTree.constant([0], 2))
