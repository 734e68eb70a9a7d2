"""Small hand-built classes used across the test modules."""

from shtarkov_lab.core.experts import ConstantExpert, NonSequentialExpert, PointMassExpert
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass
from shtarkov_lab.models.alphabets import ContextAlphabet, LabelAlphabet


def constant_class(*probs: float) -> ExplicitFiniteClass:
    """Constant-Bernoulli experts, p = probability of label 1."""
    return ExplicitFiniteClass(
        [ConstantExpert.bernoulli(p) for p in probs], LabelAlphabet(2), ContextAlphabet(1)
    )


def binary_class(*rows: tuple[float, ...]) -> ExplicitFiniteClass:
    """Binary non-sequential experts; each row lists f(x) per context."""
    experts = [NonSequentialExpert.binary(tuple(r), name=f"f{i}") for i, r in enumerate(rows)]
    return ExplicitFiniteClass(experts, LabelAlphabet(2), ContextAlphabet(len(rows[0])))


def pointmass_class(*seqs: tuple[int, ...], num_labels: int = 2) -> ExplicitFiniteClass:
    experts = [PointMassExpert(num_labels, tuple(s)) for s in seqs]
    return ExplicitFiniteClass(experts, LabelAlphabet(num_labels), ContextAlphabet(1))
