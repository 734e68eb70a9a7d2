"""Label-indexed trees: context trees, real-valued trees, context constraints.

Trees are stored as flat tuples in level order: the node reached by the label
prefix (y_1, ..., y_{t-1}) sits at offset(t) + int(y_1 ... y_{t-1} in base K),
where offset(t) counts the nodes of the first t-1 levels.
"""

from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass

from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import encode_prefix, sequences, tree_node_count


def _check_node_count(depth: int, num_labels: int, count: int, kind: str) -> None:
    if depth < 0:
        raise ValidationError(f"{kind} depth must be nonnegative, got {depth}")
    expected = tree_node_count(num_labels, depth)
    if count != expected:
        raise ValidationError(
            f"{kind} of depth {depth} over {num_labels} labels needs {expected} nodes, got {count}"
        )


@dataclass(frozen=True)
class ContextTree:
    """A K-ary, context-valued tree of depth T: the adversary's context strategy."""

    depth: int
    num_labels: int
    nodes: tuple[int, ...]

    def __post_init__(self) -> None:
        _check_node_count(self.depth, self.num_labels, len(self.nodes), "context tree")

    @classmethod
    def from_function(
        cls, depth: int, num_labels: int, fn: Callable[[tuple[int, ...]], int]
    ) -> "ContextTree":
        nodes = [fn(prefix) for t in range(depth) for prefix in sequences(num_labels, t)]
        return cls(depth, num_labels, tuple(nodes))

    @classmethod
    def constant(cls, contexts: Sequence[int], num_labels: int) -> "ContextTree":
        """The tree playing x_t regardless of past labels."""
        return cls.from_function(len(contexts), num_labels, lambda prefix: contexts[len(prefix)])

    @classmethod
    def empty(cls, num_labels: int) -> "ContextTree":
        return cls(0, num_labels, ())

    def context_at(self, labels: Sequence[int]) -> int:
        """Context played after observing the label prefix."""
        if len(labels) >= self.depth:
            raise ValidationError(
                f"prefix of length {len(labels)} has no node in a tree of depth {self.depth}"
            )
        return self.nodes[encode_prefix(tuple(labels), self.num_labels)]

    def contexts_along(self, labels: Sequence[int]) -> tuple[int, ...]:
        """x_1, x_2(y_1), ..., x_s(y_{1:s-1}) for a label path of length s <= depth."""
        if len(labels) > self.depth:
            raise ValidationError(f"path of length {len(labels)} exceeds depth {self.depth}")
        return tuple(self.context_at(labels[:t]) for t in range(len(labels)))

    def subtree(self, labels: Sequence[int]) -> "ContextTree":
        """The tree rooted at the node reached by `labels`."""
        s = len(labels)
        return ContextTree.from_function(
            self.depth - s, self.num_labels, lambda prefix: self.context_at(tuple(labels) + prefix)
        )

    def max_context(self) -> int:
        return max(self.nodes, default=-1)

    def to_list(self) -> list[int]:
        return list(self.nodes)


@dataclass(frozen=True)
class RealTree:
    """A [0,1]-valued binary tree; values are clamped into [0,1]."""

    depth: int
    values: tuple[float, ...]
    num_labels: int = 2

    def __post_init__(self) -> None:
        _check_node_count(self.depth, self.num_labels, len(self.values), "real tree")
        clamped = tuple(min(1.0, max(0.0, float(v))) for v in self.values)
        object.__setattr__(self, "values", clamped)

    @classmethod
    def from_function(
        cls, depth: int, fn: Callable[[tuple[int, ...]], float], num_labels: int = 2
    ) -> "RealTree":
        values = [fn(prefix) for t in range(depth) for prefix in sequences(num_labels, t)]
        return cls(depth, tuple(values), num_labels)

    def value_at(self, labels: Sequence[int]) -> float:
        return self.values[encode_prefix(tuple(labels), self.num_labels)]

    def along(self, path: Sequence[int]) -> tuple[float, ...]:
        """v_1, v_2(y_1), ..., v_T(y_{1:T-1}) along a full path."""
        return tuple(self.value_at(path[:t]) for t in range(self.depth))


class ContextConstraint:
    """Restricts the contexts the adversary may play given the history.

    The predicate receives (x_1..x_{t-1}, y_1..y_{t-1}) and returns the allowed
    contexts for round t.
    """

    def __init__(self, predicate: Callable[[tuple[int, ...], tuple[int, ...]], Sequence[int]]):
        self._predicate = predicate

    def allowed(
        self, contexts: tuple[int, ...], labels: tuple[int, ...], num_contexts: int
    ) -> tuple[int, ...]:
        allowed = tuple(sorted(x for x in set(self._predicate(contexts, labels))
                               if 0 <= x < num_contexts))
        if not allowed:
            raise ValidationError(
                f"no allowed context after history contexts={contexts} labels={labels}"
            )
        return allowed

    def admits(self, tree: ContextTree, num_contexts: int) -> bool:
        """Whether every node of the tree plays an allowed context."""
        for t in range(tree.depth):
            for labels in sequences(tree.num_labels, t):
                history = tree.contexts_along(labels)
                if tree.context_at(labels) not in self.allowed(history, labels, num_contexts):
                    return False
        return True


class TimeVaryingConstraint(ContextConstraint):
    """Round-dependent context sets X_1, ..., X_T; rounds past the list are free."""

    def __init__(self, allowed_per_round: Sequence[Sequence[int]]):
        self.allowed_per_round = tuple(tuple(sorted(set(xs))) for xs in allowed_per_round)
        for t, xs in enumerate(self.allowed_per_round):
            if not xs:
                raise ValidationError(f"empty context set for round {t + 1}")
        super().__init__(self._round_sets)

    def _round_sets(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Sequence[int]:
        return self.allowed_per_round[len(contexts)]

    def allowed(
        self, contexts: tuple[int, ...], labels: tuple[int, ...], num_contexts: int
    ) -> tuple[int, ...]:
        t = len(contexts)
        if t >= len(self.allowed_per_round):
            return tuple(range(num_contexts))
        return super().allowed(contexts, labels, num_contexts)


def allowed_contexts(
    constraint: ContextConstraint | None,
    contexts: tuple[int, ...],
    labels: tuple[int, ...],
    num_contexts: int,
) -> tuple[int, ...]:
    """Contexts available at the next round (all of them without a constraint)."""
    if constraint is None:
        return tuple(range(num_contexts))
    return constraint.allowed(contexts, labels, num_contexts)


def enumerate_trees(
    depth: int,
    num_labels: int,
    num_contexts: int,
    constraint: ContextConstraint | None = None,
) -> Iterator[ContextTree]:
    """Every (consistent) context tree in mixed-radix order, first node most significant."""
    prefixes = [p for t in range(depth) for p in sequences(num_labels, t)]
    nodes: list[int] = [0] * len(prefixes)

    def assign(i: int) -> Iterator[ContextTree]:
        if i == len(prefixes):
            yield ContextTree(depth, num_labels, tuple(nodes))
            return
        labels = prefixes[i]
        history = tuple(
            nodes[encode_prefix(labels[:t], num_labels)] for t in range(len(labels))
        )
        for x in allowed_contexts(constraint, history, labels, num_contexts):
            nodes[i] = x
            yield from assign(i + 1)

    yield from assign(0)
