"""Tests for alphabets, experts, likelihoods and hypothesis classes."""

import math

import numpy as np
import pytest
from scipy.special import logsumexp as scipy_logsumexp

from factories import binary_class, constant_class, pointmass_class
from shtarkov_lab.core.experts import (
    ConstantExpert,
    LinearExpert,
    NonSequentialExpert,
    PointMassExpert,
    TableExpert,
    random_table_expert,
)
from shtarkov_lab.core.hypothesis import (
    ExplicitFiniteClass,
    SupOracleClass,
    bernoulli_full_class,
    categorical_full_class,
)
from shtarkov_lab.core.likelihood import (
    class_sup_likelihood,
    likelihood,
    project_expert,
    verify_normalization,
)
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet, Prefix
from shtarkov_lab.models.trees import (
    ContextTree,
    RealTree,
    TimeVaryingConstraint,
    enumerate_trees,
)
from shtarkov_lab.shared.exceptions import (
    ConfigurationError,
    EnumerationBudgetExceeded,
    UnsupportedClassError,
    ValidationError,
)
from shtarkov_lab.shared.utils.enumeration import (
    check_budget,
    effective_budget,
    encode_prefix,
    tree_node_count,
)
from shtarkov_lab.shared.utils.logspace import NEG_INF, is_close, log_mul, logsumexp, softmax


class TestLogspace:
    def test_logsumexp_matches_scipy(self):
        values = [-0.5, -3.0, -1.25, -20.0]
        assert logsumexp(values) == pytest.approx(float(scipy_logsumexp(values)), abs=1e-15)

    def test_neg_inf_is_identity_and_absorbing(self):
        assert logsumexp([NEG_INF, math.log(0.25)]) == pytest.approx(math.log(0.25))
        assert logsumexp([NEG_INF, NEG_INF]) == NEG_INF
        assert logsumexp([]) == NEG_INF
        assert log_mul(0.0, NEG_INF, -1.0) == NEG_INF

    def test_softmax(self):
        assert softmax([0.0, math.log(0.25)]) == pytest.approx([0.8, 0.2])
        assert softmax([NEG_INF, NEG_INF]) == []

    def test_is_close(self):
        assert is_close(NEG_INF, NEG_INF, 1e-9)
        assert not is_close(NEG_INF, -1e300, 1e-9)


class TestEnumeration:
    def test_tree_node_count(self):
        assert tree_node_count(2, 3) == 7
        assert tree_node_count(3, 2) == 4
        assert tree_node_count(1, 5) == 5

    def test_encode_prefix_level_order(self):
        assert encode_prefix((), 2) == 0
        assert encode_prefix((0,), 2) == 1
        assert encode_prefix((1, 0), 2) == 5

    def test_check_budget(self):
        check_budget("things", 10, 10)
        with pytest.raises(EnumerationBudgetExceeded):
            check_budget("things", 11, 10)

    def test_global_ceiling(self, monkeypatch):
        monkeypatch.setenv("SHTARKOV_LAB_BUDGET", "5")
        assert effective_budget(100) == 5
        with pytest.raises(EnumerationBudgetExceeded):
            check_budget("things", 6, 100)
        monkeypatch.setenv("SHTARKOV_LAB_BUDGET", "zero")
        with pytest.raises(ConfigurationError):
            effective_budget(100)


class TestAlphabets:
    def test_distribution_must_sum_to_one(self):
        with pytest.raises(ValidationError):
            Distribution.of([0.5, 0.49])
        with pytest.raises(ValidationError):
            Distribution.of([1.2, -0.2])

    def test_strictly_positive(self):
        assert Distribution.uniform(3).strictly_positive()
        assert not Distribution.point_mass(2, 1).strictly_positive()

    def test_prefix_lengths(self):
        assert Prefix((0, 1), (1,)).complete is False
        assert Prefix((0, 1), (1, 0)).complete
        with pytest.raises(ValidationError):
            Prefix((0,), (1, 1))

    def test_prefix_validate(self):
        with pytest.raises(ValidationError, match=r"prefix.labels\[0\]"):
            Prefix((0,), (2,)).validate(LabelAlphabet(2), ContextAlphabet(1))
        with pytest.raises(ValidationError):
            Prefix((0, 0, 0), (0, 0, 0)).validate(LabelAlphabet(2), ContextAlphabet(1), 2)


class TestTrees:
    def test_constant_tree(self):
        tree = ContextTree.constant([2, 0, 1], 2)
        assert tree.contexts_along((1, 1, 0)) == (2, 0, 1)
        assert len(tree.nodes) == 7

    def test_wrong_node_count(self):
        with pytest.raises(ValidationError):
            ContextTree(2, 2, (0, 0))

    def test_enumerate_trees_count(self):
        # |X| = 2, K = 2, T = 3: 2^7 trees
        assert sum(1 for _ in enumerate_trees(3, 2, 2)) == 128

    def test_time_varying_constraint(self):
        constraint = TimeVaryingConstraint([[1], [0, 2]])
        trees = list(enumerate_trees(2, 2, 3, constraint))
        assert len(trees) == 4
        assert all(t.nodes[0] == 1 and 1 not in t.nodes[1:] for t in trees)
        with pytest.raises(ValidationError):
            TimeVaryingConstraint([[]])

    def test_real_tree_clamps(self):
        assert RealTree(1, (1.3,)).values == (1.0,)
        assert RealTree(1, (-0.2,)).values == (0.0,)


class TestLikelihood:
    def test_uniform_expert(self):
        f = ConstantExpert(Distribution.uniform(2))
        assert likelihood(f, (0, 0, 0), (1, 0, 1)) == pytest.approx(math.log(1 / 8))

    def test_empty_history(self):
        assert likelihood(ConstantExpert.bernoulli(0.25), (), ()) == 0.0

    def test_constant_bernoulli(self):
        value = likelihood(ConstantExpert.bernoulli(0.25), (0, 0), (1, 0))
        assert value == pytest.approx(math.log(0.1875))
        assert math.exp(value) == pytest.approx(0.25 * 0.75)

    def test_zero_factor(self):
        assert likelihood(PointMassExpert(2, (1, 1)), (0, 0), (1, 0)) == NEG_INF

    def test_errors(self):
        f = ConstantExpert.bernoulli(0.5)
        with pytest.raises(ValidationError):
            likelihood(f, (0, 0), (1,))
        with pytest.raises(ValidationError):
            likelihood(f, (0,), (2,))

    def test_context_outside_alphabet(self):
        f = ConstantExpert.bernoulli(0.5)
        with pytest.raises(ValidationError, match=r"contexts\[1\]"):
            likelihood(f, (0, 3), (1, 0), ContextAlphabet(2))
        assert likelihood(f, (0, 1), (1, 0), ContextAlphabet(2)) == pytest.approx(math.log(0.25))

    def test_negative_context(self):
        with pytest.raises(ValidationError, match="negative"):
            likelihood(ConstantExpert.bernoulli(0.5), (-1,), (0,))

    def test_class_sup_checks_contexts(self):
        F = binary_class((0.1, 0.8))
        with pytest.raises(ValidationError):
            F.sup_log_likelihood((0, 2), (1, 1))

    def test_chain_rule(self):
        rng = np.random.default_rng(3)
        f = random_table_expert(rng, 3, 2, 3)
        contexts, labels = (1, 0, 1), (2, 0, 1)
        head = likelihood(f, contexts[:2], labels[:2])
        step = math.log(f.predict(contexts, labels[:2])[labels[2]])
        assert likelihood(f, contexts, labels) == pytest.approx(head + step, abs=1e-12)


class TestClassSupLikelihood:
    def test_pointmass_match(self):
        F = pointmass_class((0, 1), (1, 1))
        assert class_sup_likelihood(F, (0, 0), (1, 1))[0] == 0.0

    def test_bernoulli_oracle(self, bernoulli):
        value, witness = class_sup_likelihood(bernoulli, (0, 0), (1, 0))
        assert value == pytest.approx(math.log(0.25))
        assert witness.probs == pytest.approx((0.5, 0.5))

    def test_explicit_witness(self):
        F = constant_class(0.3, 0.6)
        value, witness = class_sup_likelihood(F, (0, 0), (1, 1))
        assert value == pytest.approx(math.log(0.36))
        assert witness is F.experts[1]

    def test_ties_go_to_lowest_index(self):
        F = constant_class(0.5, 0.5)
        assert class_sup_likelihood(F, (0,), (1,))[1] is F.experts[0]

    def test_sup_dominates_members(self, seeded_class):
        F, T = seeded_class
        contexts, labels = (0,) * T, (1,) * T
        sup = class_sup_likelihood(F, contexts, labels)[0]
        assert all(sup >= likelihood(f, contexts, labels) for f in F.experts)

    def test_grid_refined_oracle_agrees(self):
        exact = bernoulli_full_class()
        refined = bernoulli_full_class(refined=True)
        for labels in [(1, 0, 0), (1, 1, 1, 0), (0, 0), (1, 0, 1, 1, 0)]:
            contexts = (0,) * len(labels)
            a = exact.sup_log_likelihood(contexts, labels)[0]
            b = refined.sup_log_likelihood(contexts, labels)[0]
            assert b == pytest.approx(a, abs=1e-6)

    def test_categorical(self):
        F = categorical_full_class(3)
        value, _ = F.sup_log_likelihood((0, 0, 0), (0, 1, 2))
        assert value == pytest.approx(3 * math.log(1 / 3))

    def test_oracle_above_one_rejected(self):
        F = SupOracleClass(lambda x, y: (0.5, None), LabelAlphabet(2), ContextAlphabet(1))
        with pytest.raises(ValidationError):
            F.sup_log_likelihood((0,), (1,))

    def test_empty_class_rejected(self):
        with pytest.raises(ValidationError):
            ExplicitFiniteClass([], LabelAlphabet(2), ContextAlphabet(1))

    def test_binary_table(self):
        F = binary_class((0.1, 0.9), (0.5, 0.5))
        assert F.binary_table().tolist() == [[0.1, 0.9], [0.5, 0.5]]
        with pytest.raises(UnsupportedClassError):
            ExplicitFiniteClass(
                [PointMassExpert(2, (1,))], LabelAlphabet(2), ContextAlphabet(1)
            ).binary_table()


class TestProjection:
    def test_constant_tree_nonsequential(self):
        f = NonSequentialExpert.binary((0.2, 0.7))
        g = project_expert(f, ContextTree.constant([1, 1], 2))
        assert g.predict((0,), ())[1] == pytest.approx(0.7)
        assert g.predict((0, 0), (0,))[1] == pytest.approx(0.7)

    def test_linear_expert_on_splitting_tree(self):
        design = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
        f = LinearExpert((0.5, -0.5, 0.25), design)
        tree = ContextTree(2, 2, (0, 1, 2))
        g = project_expert(f, tree)
        assert g.predict((0,), ())[1] == pytest.approx(0.75)
        assert g.predict((0, 0), (0,))[1] == pytest.approx(0.25)
        assert g.predict((0, 0), (1,))[1] == pytest.approx(0.625)

    def test_projection_preserves_likelihood(self):
        rng = np.random.default_rng(7)
        f = random_table_expert(rng, 2, 3, 3)
        tree = ContextTree(3, 2, (2, 0, 1, 1, 0, 2, 2))
        g = project_expert(f, tree)
        for path in [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]:
            direct = likelihood(f, tree.contexts_along(path), path)
            assert likelihood(g, (0, 0, 0), path) == pytest.approx(direct, abs=1e-12)


class TestNormalization:
    def test_uniform_expert(self):
        tree = ContextTree.constant([0, 0, 0], 2)
        assert verify_normalization(ConstantExpert(Distribution.uniform(2)), tree) == (
            pytest.approx(0.0, abs=1e-12)
        )

    def test_pointmass_expert(self):
        tree = ContextTree.constant([0, 0], 2)
        assert verify_normalization(PointMassExpert(2, (1, 0)), tree) == 0.0

    @pytest.mark.parametrize("K,X,T", [(2, 2, 2), (3, 2, 2), (2, 3, 3)])
    def test_every_tree(self, K, X, T):
        rng = np.random.default_rng(K * 100 + X * 10 + T)
        f = random_table_expert(rng, K, X, T, strictly_positive=False)
        for tree in enumerate_trees(T, K, X):
            assert abs(verify_normalization(f, tree)) <= 1e-12

    def test_table_expert_missing_history(self):
        f = TableExpert(2, {((0,), ()): Distribution.uniform(2)})
        with pytest.raises(ValidationError):
            f.check_complete(1, 2)
