"""Shtarkov sums over label paths: fixed designs, context trees, prefixes and the worst case."""

import logging
import math
from collections.abc import Hashable, Sequence
from dataclasses import dataclass

import numpy as np

from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass
from shtarkov_lab.core.likelihood import likelihood
from shtarkov_lab.models.alphabets import Prefix
from shtarkov_lab.models.trees import (
    ContextConstraint,
    ContextTree,
    allowed_contexts,
    enumerate_trees,
)
from shtarkov_lab.shared.constants import (
    DEFAULT_SEQUENCE_BUDGET,
    DEFAULT_TREE_BUDGET,
    SUBPROBABILITY_TOLERANCE,
)
from shtarkov_lab.shared.exceptions import (
    SubProbabilityError,
    UnsupportedClassError,
    ValidationError,
)
from shtarkov_lab.shared.utils.enumeration import check_budget, sequences, tree_node_count
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue, log, logsumexp

logger = logging.getLogger(__name__)


def _check_horizon(horizon: int) -> None:
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")


def _check_tree(F: HypothesisClass, tree: ContextTree) -> None:
    if tree.num_labels != F.num_labels:
        raise ValidationError(
            f"tree branches over {tree.num_labels} labels but the class has {F.num_labels}"
        )
    if tree.max_context() >= F.num_contexts:
        raise ValidationError(
            f"tree plays context {tree.max_context()} outside 0..{F.num_contexts - 1}"
        )


def _path_sum(
    F: HypothesisClass,
    tree: ContextTree,
    prefix: Prefix,
    budget: int,
) -> LogValue:
    check_budget("label paths", F.num_labels**tree.depth, budget)
    terms = []
    for path in sequences(F.num_labels, tree.depth):
        contexts = prefix.contexts + tree.contexts_along(path)
        labels = prefix.labels + path
        terms.append(F.sup_log_likelihood(contexts, labels)[0])
    return logsumexp(terms)


def shtarkov_contextfree(
    F: HypothesisClass, horizon: int, budget: int = DEFAULT_SEQUENCE_BUDGET
) -> LogValue:
    """log sum_{y in Y^T} sup_f L(f; y), every round played at context 0."""
    _check_horizon(horizon)
    return _path_sum(F, ContextTree.constant([0] * horizon, F.num_labels), Prefix(), budget)


def shtarkov_conditional(
    F: HypothesisClass,
    contexts: Sequence[int],
    horizon: int | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> LogValue:
    """log sum_y sup_f L(f; y | x_{1:T}) for a fixed context sequence."""
    if horizon is not None and len(contexts) != horizon:
        raise ValidationError(f"{len(contexts)} contexts given for horizon {horizon}")
    for t, x in enumerate(contexts):
        F.contexts.check(x, f"contexts[{t}]")
    return _path_sum(F, ContextTree.constant(list(contexts), F.num_labels), Prefix(), budget)


def shtarkov_contextual(
    F: HypothesisClass, tree: ContextTree, budget: int = DEFAULT_SEQUENCE_BUDGET
) -> LogValue:
    """log sum_{y in Y^T} sup_f L(f; y | x(y)) on a context tree."""
    _check_tree(F, tree)
    return _path_sum(F, tree, Prefix(), budget)


def shtarkov_prefix(
    F: HypothesisClass,
    tree: ContextTree,
    prefix: Prefix,
    horizon: int | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> LogValue:
    """Shtarkov sum of the continuations of a complete prefix along a tree."""
    if not prefix.complete:
        raise ValidationError("prefix Shtarkov sums need as many labels as contexts")
    if horizon is not None and tree.depth + prefix.length != horizon:
        raise ValidationError(
            f"tree depth {tree.depth} plus prefix length {prefix.length} "
            f"is not the horizon {horizon}"
        )
    _check_tree(F, tree)
    prefix.validate(F.labels, F.contexts)
    return _path_sum(F, tree, prefix, budget)


class WorstCaseSolver:
    """Backward recursion for the supremum over context trees.

    V(x_{1:t}, y_{1:t}) = max_{x allowed} log sum_y exp V(x_{1:t} x, y_{1:t} y), with the
    class sup log-likelihood at depth T. States are memoised, so one solver can answer
    every prefix of a game.
    """

    def __init__(
        self,
        F: HypothesisClass,
        horizon: int,
        constraint: ContextConstraint | None = None,
        budget: int = DEFAULT_SEQUENCE_BUDGET,
    ):
        _check_horizon(horizon)
        self.F = F
        self.horizon = horizon
        self.constraint = constraint
        self.budget = budget
        self._values: dict[tuple[tuple[int, ...], tuple[int, ...]], LogValue] = {}

    def _continuation(self, contexts: tuple[int, ...], labels: tuple[int, ...], x: int) -> LogValue:
        return logsumexp(
            [self._value(contexts + (x,), labels + (y,)) for y in range(self.F.num_labels)]
        )

    def _value(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> LogValue:
        key = (contexts, labels)
        cached = self._values.get(key)
        if cached is not None:
            return cached
        if len(contexts) == self.horizon:
            value = self.F.sup_log_likelihood(contexts, labels)[0]
        else:
            value = max(
                self._continuation(contexts, labels, x)
                for x in allowed_contexts(self.constraint, contexts, labels, self.F.num_contexts)
            )
        self._values[key] = value
        return value

    def _check_prefix(self, prefix: Prefix) -> None:
        if not prefix.complete:
            raise ValidationError("worst-case values are defined on complete prefixes")
        prefix.validate(self.F.labels, self.F.contexts, self.horizon)
        remaining = self.horizon - prefix.length
        check_budget(
            "worst-case recursion leaves",
            (self.F.num_contexts * self.F.num_labels) ** remaining,
            self.budget,
        )

    def value(self, prefix: Prefix | None = None) -> LogValue:
        prefix = prefix or Prefix()
        self._check_prefix(prefix)
        return self._value(prefix.contexts, prefix.labels)

    def best_context(self, prefix: Prefix) -> tuple[int, LogValue]:
        """Context maximising the continuation value; lowest index wins ties."""
        if prefix.length >= self.horizon:
            raise ValidationError(f"no round left after a prefix of length {prefix.length}")
        self._check_prefix(prefix)
        best_x, best = -1, NEG_INF
        for x in allowed_contexts(
            self.constraint, prefix.contexts, prefix.labels, self.F.num_contexts
        ):
            value = self._continuation(prefix.contexts, prefix.labels, x)
            if best_x < 0 or value > best:
                best_x, best = x, value
        return best_x, best

    def label_values(self, prefix: Prefix, context: int) -> list[LogValue]:
        """V(x_{1:t} x, y_{1:t} y) for every candidate label y."""
        self._check_prefix(prefix)
        contexts = prefix.contexts + (context,)
        return [self._value(contexts, prefix.labels + (y,)) for y in range(self.F.num_labels)]

    def argmax_tree(self, prefix: Prefix | None = None) -> ContextTree:
        """An optimal context tree for the remaining rounds."""
        prefix = prefix or Prefix()
        depth = self.horizon - prefix.length
        nodes: dict[tuple[int, ...], int] = {}

        def walk(current: Prefix, path: tuple[int, ...]) -> None:
            if len(path) == depth:
                return
            x, _ = self.best_context(current)
            nodes[path] = x
            for y in range(self.F.num_labels):
                walk(current.extend(x, y), path + (y,))

        walk(prefix, ())
        return ContextTree.from_function(depth, self.F.num_labels, nodes.__getitem__)


def worst_case_shtarkov(
    F: HypothesisClass,
    horizon: int,
    prefix: Prefix | None = None,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> LogValue:
    """log sup over (consistent) context trees of the prefix Shtarkov sum."""
    return WorstCaseSolver(F, horizon, constraint, budget).value(prefix)


def worst_case_shtarkov_bruteforce(
    F: HypothesisClass,
    horizon: int,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_TREE_BUDGET,
) -> tuple[LogValue, ContextTree]:
    """Enumerate every context tree and keep the first maximiser."""
    _check_horizon(horizon)
    nodes = tree_node_count(F.num_labels, horizon)
    count = F.num_contexts**nodes
    check_budget("context trees", count, budget)
    logger.info(f"Enumerating up to {count} context trees of depth {horizon}")

    best, best_tree = NEG_INF, None
    for tree in enumerate_trees(horizon, F.num_labels, F.num_contexts, constraint):
        value = _path_sum(F, tree, Prefix(), budget=F.num_labels**horizon)
        if best_tree is None or value > best:
            best, best_tree = value, tree
    return best, best_tree


def shtarkov_mc_estimate(
    F: HypothesisClass,
    tree: ContextTree,
    samples: int,
    seed: int,
) -> tuple[float, float]:
    """Unbiased estimate of the linear-domain contextual Shtarkov sum.

    Labels are drawn i.i.d. uniformly; each sample is K^T sup_f L(f; y | x(y)).
    Returns (estimate, standard error).
    """
    if samples < 1:
        raise ValidationError(f"sample count must be positive, got {samples}")
    _check_tree(F, tree)
    K, T = F.num_labels, tree.depth
    if T == 0:
        return math.exp(F.sup_log_likelihood((), ())[0]), 0.0

    rng = np.random.default_rng(seed)
    draws = rng.integers(0, K, size=(samples, T))
    paths, inverse = np.unique(draws, axis=0, return_inverse=True)
    scale = T * math.log(K)
    integrand = np.empty(len(paths))
    for i, row in enumerate(paths):
        path = tuple(int(y) for y in row)
        value = F.sup_log_likelihood(tree.contexts_along(path), path)[0]
        integrand[i] = 0.0 if value == NEG_INF else math.exp(scale + value)
    values = integrand[inverse.reshape(-1)]

    estimate = math.fsum(values) / samples
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return estimate, stderr


@dataclass(frozen=True)
class SubProbClass:
    """Finite family of sub-probability maps over a finite ground set."""

    ground: tuple[Hashable, ...]
    maps: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        if not self.maps:
            raise ValidationError("a sub-probability class needs at least one map")
        for i, m in enumerate(self.maps):
            if len(m) != len(self.ground):
                raise ValidationError(
                    f"map has {len(m)} values for a ground set of {len(self.ground)}", f"maps[{i}]"
                )
            if any(not 0.0 <= v <= 1.0 for v in m):
                raise SubProbabilityError("values must lie in [0, 1]", f"maps[{i}]")
            mass = math.fsum(m)
            if mass > 1.0 + SUBPROBABILITY_TOLERANCE:
                raise SubProbabilityError(f"total mass {mass!r} exceeds 1", f"maps[{i}]")

    @classmethod
    def from_dicts(cls, maps: Sequence[dict[Hashable, float]]) -> "SubProbClass":
        ground = tuple(sorted({k for m in maps for k in m}, key=repr))
        return cls(ground, tuple(tuple(m.get(k, 0.0) for k in ground) for m in maps))


def general_shtarkov(P: SubProbClass) -> LogValue:
    """log sum_k sup_p p(k)."""
    return log(math.fsum(max(m[k] for m in P.maps) for k in range(len(P.ground))))


def induce_subprob(
    F: HypothesisClass,
    tree: ContextTree,
    prefix: Prefix | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> SubProbClass:
    """Materialise {y -> L(f; prefix + y | prefix + x(y))} for an explicit class."""
    if not isinstance(F, ExplicitFiniteClass):
        raise UnsupportedClassError(
            f"class {F.name!r} is only known through an oracle and cannot be materialised"
        )
    prefix = prefix or Prefix()
    if not prefix.complete:
        raise ValidationError("induced sub-probability classes need a complete prefix")
    _check_tree(F, tree)
    check_budget("label paths", F.num_labels**tree.depth, budget)

    ground = tuple(sequences(F.num_labels, tree.depth))
    maps = []
    for f in F.experts:
        row = []
        for path in ground:
            value = likelihood(
                f,
                prefix.contexts + tree.contexts_along(path),
                prefix.labels + path,
                F.contexts,
            )
            row.append(0.0 if value == NEG_INF else math.exp(value))
        maps.append(tuple(row))
    return SubProbClass(ground, tuple(maps))
