"""Sequential experts: maps from (x_1..x_t, y_1..y_{t-1}) to a label distribution."""

import math
from abc import ABC, abstractmethod
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from shtarkov_lab.models.alphabets import Distribution
from shtarkov_lab.models.trees import ContextTree
from shtarkov_lab.shared.constants import DESIGN_NORM_TOLERANCE
from shtarkov_lab.shared.exceptions import UnsupportedClassError, ValidationError
from shtarkov_lab.shared.utils.enumeration import sequences

History = tuple[tuple[int, ...], tuple[int, ...]]


class Expert(ABC):
    """A deterministic sequential expert over a fixed label alphabet."""

    num_labels: int
    name: str

    @abstractmethod
    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        """Distribution for round t given x_1..x_t and y_1..y_{t-1}."""

    @property
    def nonsequential(self) -> bool:
        """True when predictions depend on the fresh context alone."""
        return False

    def predict_context(self, context: int) -> Distribution:
        if not self.nonsequential:
            raise UnsupportedClassError(f"expert {self.name!r} is sequential")
        return self.predict((context,), ())

    def binary_value(self, context: int) -> float:
        """Probability of label 1 at a bare context (binary, non-sequential experts)."""
        if self.num_labels != 2:
            raise UnsupportedClassError(f"expert {self.name!r} is not binary")
        return self.predict_context(context)[1]


@dataclass(frozen=True, eq=False)
class TableExpert(Expert):
    """Explicit lookup table over every history up to its depth."""

    num_labels: int
    table: Mapping[History, Distribution]
    name: str = "table"

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        try:
            return self.table[(tuple(contexts), tuple(labels))]
        except KeyError:
            raise ValidationError(
                f"expert {self.name!r} has no entry for contexts={tuple(contexts)} "
                f"labels={tuple(labels)}"
            ) from None

    def check_complete(self, num_contexts: int, depth: int) -> None:
        """Every history of depth <= `depth` must be tabulated."""
        for t in range(1, depth + 1):
            for contexts in sequences(num_contexts, t):
                for labels in sequences(self.num_labels, t - 1):
                    self.predict(contexts, labels)


@dataclass(frozen=True, eq=False)
class NonSequentialExpert(Expert):
    """x -> Distribution; ignores everything but the fresh context."""

    num_labels: int
    by_context: tuple[Distribution, ...]
    name: str = "nonsequential"

    @property
    def nonsequential(self) -> bool:
        return True

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        x = contexts[-1]
        if not 0 <= x < len(self.by_context):
            raise ValidationError(f"expert {self.name!r} has no distribution for context {x}")
        return self.by_context[x]

    @classmethod
    def binary(
        cls, values: tuple[float, ...], name: str = "nonsequential"
    ) -> "NonSequentialExpert":
        """Binary expert from per-context probabilities of label 1."""
        return cls(2, tuple(Distribution.bernoulli(v) for v in values), name)


@dataclass(frozen=True, eq=False)
class ConstantExpert(Expert):
    """Plays the same distribution every round; constant-Bernoulli(p) when K = 2."""

    distribution: Distribution
    name: str = "constant"

    @property
    def num_labels(self) -> int:
        return self.distribution.size

    @property
    def nonsequential(self) -> bool:
        return True

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return self.distribution

    @classmethod
    def bernoulli(cls, p_one: float) -> "ConstantExpert":
        return cls(Distribution.bernoulli(p_one), name=f"bernoulli({p_one:g})")


@dataclass(frozen=True, eq=False)
class PointMassExpert(Expert):
    """Puts all mass on a fixed label sequence; uniform once the sequence runs out."""

    num_labels: int
    sequence: tuple[int, ...]
    name: str = "pointmass"

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        t = len(labels)
        if t < len(self.sequence):
            return Distribution.point_mass(self.num_labels, self.sequence[t])
        return Distribution.uniform(self.num_labels)


def _as_design(design) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(design, dtype=float))
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms > 1.0 + DESIGN_NORM_TOLERANCE):
        raise ValidationError(f"design vectors must have norm <= 1, got norms {norms.tolist()}")
    return arr


@dataclass(frozen=True, eq=False)
class LinearExpert(Expert):
    """Binary expert x -> (<w, x> + 1)/2 on a finite design (contexts index design rows)."""

    weights: tuple[float, ...]
    design: tuple[tuple[float, ...], ...]
    absolute: bool = False
    name: str = "linear"
    _rows: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rows = _as_design(self.design)
        w = np.asarray(self.weights, dtype=float)
        if rows.shape[1] != w.shape[0]:
            raise ValidationError(
                f"weight dimension {w.shape[0]} does not match design dimension {rows.shape[1]}"
            )
        if float(np.linalg.norm(w)) > 1.0 + DESIGN_NORM_TOLERANCE:
            raise ValidationError(f"weight vector norm {np.linalg.norm(w):.6g} exceeds 1")
        object.__setattr__(self, "_rows", rows)

    @property
    def num_labels(self) -> int:
        return 2

    @property
    def nonsequential(self) -> bool:
        return True

    def value(self, context: int) -> float:
        inner = float(self._rows[context] @ np.asarray(self.weights, dtype=float))
        v = abs(inner) if self.absolute else (inner + 1.0) / 2.0
        return min(1.0, max(0.0, v))

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        x = contexts[-1]
        if not 0 <= x < len(self._rows):
            raise ValidationError(f"context {x} is not a design point of expert {self.name!r}")
        return Distribution.bernoulli(self.value(x))


@dataclass(frozen=True, eq=False)
class ProjectedExpert(Expert):
    """The context-free expert g(y_{1:t-1}) = f(x_{1:t}(y), y_{1:t-1}) induced by a tree."""

    base: Expert
    tree: ContextTree
    name: str = "projected"

    @property
    def num_labels(self) -> int:
        return self.base.num_labels

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        labels = tuple(labels)
        if len(labels) >= self.tree.depth:
            raise ValidationError(
                f"projected expert queried at round {len(labels) + 1} "
                f"beyond depth {self.tree.depth}"
            )
        path_contexts = self.tree.contexts_along(labels) + (self.tree.context_at(labels),)
        return self.base.predict(path_contexts, labels)


def random_table_expert(
    rng: np.random.Generator,
    num_labels: int,
    num_contexts: int,
    depth: int,
    strictly_positive: bool = True,
    name: str = "random",
) -> TableExpert:
    """Seeded table expert; with strictly_positive=False some rows contain zeros."""
    table: dict[History, Distribution] = {}
    for t in range(1, depth + 1):
        for contexts in sequences(num_contexts, t):
            for labels in sequences(num_labels, t - 1):
                probs = rng.dirichlet(np.ones(num_labels))
                if not strictly_positive and num_labels > 1 and rng.random() < 0.3:
                    probs[rng.integers(num_labels)] = 0.0
                table[(contexts, labels)] = _normalized(probs)
    return TableExpert(num_labels, table, name)


def _normalized(probs: np.ndarray) -> Distribution:
    probs = np.asarray(probs, dtype=float)
    return Distribution.of(probs / math.fsum(probs))
