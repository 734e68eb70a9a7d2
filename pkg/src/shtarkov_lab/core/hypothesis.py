"""Hypothesis classes: explicit finite lists of experts or sup-likelihood oracles."""

import logging
import math
from abc import ABC, abstractmethod
from collections import Counter
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np

from shtarkov_lab.core.experts import Expert, random_table_expert
from shtarkov_lab.core.likelihood import likelihood
from shtarkov_lab.models.alphabets import ContextAlphabet, Distribution, LabelAlphabet
from shtarkov_lab.shared.constants import GRID_REFINE_POINTS, GRID_REFINE_ROUNDS
from shtarkov_lab.shared.exceptions import UnsupportedClassError, ValidationError
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue

logger = logging.getLogger(__name__)

SUP_TOLERANCE = 1e-12


class HypothesisClass(ABC):
    """F: the class all Shtarkov sums and games are computed against.

    Sup-likelihood lookups are memoized per instance; classes are immutable so
    the cache never goes stale.
    """

    labels: LabelAlphabet
    contexts: ContextAlphabet
    name: str

    @property
    def num_labels(self) -> int:
        return self.labels.size

    @property
    def num_contexts(self) -> int:
        return self.contexts.size

    def sup_log_likelihood(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Any | None]:
        """sup_f log L(f; y | x) and a witness (maximizer) when one is available."""
        cache = self.__dict__.setdefault("_sup_cache", {})
        key = (contexts, labels)
        if key not in cache:
            cache[key] = self._sup(contexts, labels)
        return cache[key]

    @abstractmethod
    def _sup(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Any | None]:
        pass


class ExplicitFiniteClass(HypothesisClass):
    """A nonempty finite list of experts; ties go to the lowest index."""

    def __init__(
        self,
        experts: Sequence[Expert],
        labels: LabelAlphabet,
        contexts: ContextAlphabet,
        name: str = "explicit",
    ):
        if not experts:
            raise ValidationError("an explicit class needs at least one expert")
        for i, e in enumerate(experts):
            if e.num_labels != labels.size:
                raise ValidationError(
                    f"expert has {e.num_labels} labels, class has {labels.size}", f"experts[{i}]"
                )
        self.experts = tuple(experts)
        self.labels = labels
        self.contexts = contexts
        self.name = name

    def __len__(self) -> int:
        return len(self.experts)

    def _sup(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Expert]:
        best, witness = NEG_INF, self.experts[0]
        for f in self.experts:
            value = likelihood(f, contexts, labels, self.contexts)
            if value > best:
                best, witness = value, f
        return best, witness

    def with_expert(self, expert: Expert) -> "ExplicitFiniteClass":
        return ExplicitFiniteClass(
            self.experts + (expert,), self.labels, self.contexts, self.name
        )

    @property
    def nonsequential(self) -> bool:
        return all(e.nonsequential for e in self.experts)

    def binary_table(self) -> np.ndarray:
        """(|F|, |X|) array of f(x) = probability of label 1, for binary non-sequential classes."""
        if self.num_labels != 2:
            raise UnsupportedClassError(f"class {self.name!r} is not binary (K={self.num_labels})")
        if not self.nonsequential:
            raise UnsupportedClassError(f"class {self.name!r} has sequential experts")
        return np.array(
            [[e.binary_value(x) for x in range(self.num_contexts)] for e in self.experts],
            dtype=float,
        )


class SupOracleClass(HypothesisClass):
    """A class known only through a sup-log-likelihood oracle (parametric families)."""

    def __init__(
        self,
        oracle: Callable[[tuple[int, ...], tuple[int, ...]], tuple[LogValue, Any | None]],
        labels: LabelAlphabet,
        contexts: ContextAlphabet,
        name: str = "oracle",
    ):
        self.oracle = oracle
        self.labels = labels
        self.contexts = contexts
        self.name = name

    def _sup(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Any | None]:
        value, witness = self.oracle(contexts, labels)
        if value > SUP_TOLERANCE:
            raise ValidationError(
                f"oracle {self.name!r} returned log-likelihood {value!r} > 0 "
                f"for contexts={contexts} labels={labels}"
            )
        return min(value, 0.0), witness


def _empirical_log_likelihood(counts: Sequence[int], total: int) -> float:
    return math.fsum(n * math.log(n / total) for n in counts if n > 0)


@dataclass(frozen=True)
class CategoricalSupOracle:
    """Full constant-categorical class: sup at the empirical label frequencies."""

    num_labels: int

    def __call__(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Distribution]:
        d = len(labels)
        if d == 0:
            return 0.0, Distribution.uniform(self.num_labels)
        counts = Counter(labels)
        freq = [counts.get(k, 0) for k in range(self.num_labels)]
        witness = Distribution.of([n / d for n in freq])
        return _empirical_log_likelihood(freq, d), witness


@dataclass(frozen=True)
class GridRefinedBernoulliOracle:
    """Fallback for the full Bernoulli class: iterated grid refinement over p."""

    points: int = GRID_REFINE_POINTS
    rounds: int = GRID_REFINE_ROUNDS

    def __call__(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, Distribution]:
        ones = sum(labels)
        zeros = len(labels) - ones

        def objective(p: np.ndarray) -> np.ndarray:
            with np.errstate(divide="ignore", invalid="ignore"):
                a = np.where(ones > 0, ones * np.log(p), 0.0)
                b = np.where(zeros > 0, zeros * np.log1p(-p), 0.0)
            return a + b

        lo, hi = 0.0, 1.0
        best_p = 0.5
        for _ in range(self.rounds):
            grid = np.linspace(lo, hi, self.points)
            values = objective(grid)
            i = int(np.argmax(values))
            best_p = float(grid[i])
            step = (hi - lo) / (self.points - 1)
            lo, hi = max(0.0, best_p - step), min(1.0, best_p + step)
        value = float(objective(np.array([best_p]))[0])
        return value, Distribution.bernoulli(best_p)


def bernoulli_full_class(num_contexts: int = 1, refined: bool = False) -> SupOracleClass:
    """All constant Bernoulli experts p in [0,1]."""
    oracle = GridRefinedBernoulliOracle() if refined else CategoricalSupOracle(2)
    return SupOracleClass(
        oracle,
        LabelAlphabet(2),
        ContextAlphabet(num_contexts),
        name="bernoulli_full_grid_refined" if refined else "bernoulli_full",
    )


def categorical_full_class(num_labels: int, num_contexts: int = 1) -> SupOracleClass:
    """All constant distributions over num_labels labels."""
    return SupOracleClass(
        CategoricalSupOracle(num_labels),
        LabelAlphabet(num_labels),
        ContextAlphabet(num_contexts),
        name=f"categorical_full({num_labels})",
    )


def random_explicit_class(
    seed: int,
    num_experts: int,
    num_labels: int,
    num_contexts: int,
    depth: int,
    strictly_positive: bool = True,
) -> ExplicitFiniteClass:
    """Seeded class of random table experts covering every history up to `depth`."""
    rng = np.random.default_rng(seed)
    experts = [
        random_table_expert(
            rng, num_labels, num_contexts, depth, strictly_positive, name=f"random[{i}]"
        )
        for i in range(num_experts)
    ]
    logger.debug(f"Random class seed={seed}: {num_experts} experts, depth {depth}")
    return ExplicitFiniteClass(
        experts, LabelAlphabet(num_labels), ContextAlphabet(num_contexts),
        name=f"random(seed={seed})",
    )
