"""Likelihoods of experts and classes, tree projection and normalization checks."""

from collections.abc import Sequence
from typing import TYPE_CHECKING, Any

from shtarkov_lab.core.experts import Expert, ProjectedExpert
from shtarkov_lab.models.alphabets import ContextAlphabet
from shtarkov_lab.models.trees import ContextTree
from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import sequences
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue, log, logsumexp

if TYPE_CHECKING:
    from shtarkov_lab.core.hypothesis import HypothesisClass


def _check_lengths(contexts: Sequence[int], labels: Sequence[int]) -> None:
    if len(contexts) != len(labels):
        raise ValidationError(
            f"{len(contexts)} contexts but {len(labels)} labels; likelihood needs equal lengths"
        )


def likelihood(
    f: Expert,
    contexts: Sequence[int],
    labels: Sequence[int],
    context_alphabet: ContextAlphabet | None = None,
) -> LogValue:
    """log L(f; y_{1:d} | x_{1:d}) = sum_t log f(x_{1:t}, y_{1:t-1})(y_t).

    Contexts are checked against `context_alphabet` when given; without one
    only negative contexts are rejected.
    """
    _check_lengths(contexts, labels)
    contexts, labels = tuple(contexts), tuple(labels)
    for t, x in enumerate(contexts):
        if context_alphabet is not None:
            context_alphabet.check(x, f"contexts[{t}]")
        elif x < 0:
            raise ValidationError(f"context {x} is negative", f"contexts[{t}]")
    total = 0.0
    for t, y in enumerate(labels):
        if not 0 <= y < f.num_labels:
            raise ValidationError(f"label {y} outside 0..{f.num_labels - 1}", f"labels[{t}]")
        p = f.predict(contexts[: t + 1], labels[:t])[y]
        if p == 0.0:
            return NEG_INF
        total += log(p)
    return total


def class_sup_likelihood(
    F: "HypothesisClass", contexts: Sequence[int], labels: Sequence[int]
) -> tuple[LogValue, Any | None]:
    """sup_{f in F} log L(f; y | x), with the maximizing expert when known."""
    _check_lengths(contexts, labels)
    for t, (x, y) in enumerate(zip(contexts, labels)):
        F.contexts.check(x, f"contexts[{t}]")
        F.labels.check(y, f"labels[{t}]")
    return F.sup_log_likelihood(tuple(contexts), tuple(labels))


def project_expert(f: Expert, tree: ContextTree) -> ProjectedExpert:
    """The context-free expert f|_x induced by a context tree."""
    return ProjectedExpert(f, tree, name=f"{f.name}|tree")


def verify_normalization(f: Expert, tree: ContextTree) -> LogValue:
    """log sum_{y in Y^T} L(f; y | x(y)); zero for every valid expert."""
    terms = [
        likelihood(f, tree.contexts_along(path), path)
        for path in sequences(f.num_labels, tree.depth)
    ]
    return logsumexp(terms)
