"""Finite alphabets, label distributions and game prefixes."""

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from shtarkov_lab.shared.constants import DISTRIBUTION_TOLERANCE
from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import sequences


@dataclass(frozen=True)
class LabelAlphabet:
    """The finite label space; labels are 0..size-1."""

    size: int

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValidationError(f"label alphabet size must be positive, got {self.size}")

    def check(self, label: int, path: str | None = None) -> int:
        if not 0 <= label < self.size:
            raise ValidationError(f"label {label} outside 0..{self.size - 1}", path)
        return label

    def sequences(self, length: int) -> Iterator[tuple[int, ...]]:
        return sequences(self.size, length)


@dataclass(frozen=True)
class ContextAlphabet:
    """The finite context space; size 1 is the context-free setting."""

    size: int
    names: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.size < 1:
            raise ValidationError(f"context alphabet size must be positive, got {self.size}")
        if self.names is not None and len(self.names) != self.size:
            raise ValidationError(f"{len(self.names)} context names for {self.size} contexts")

    def check(self, context: int, path: str | None = None) -> int:
        if not 0 <= context < self.size:
            raise ValidationError(f"context {context} outside 0..{self.size - 1}", path)
        return context

    def name(self, context: int) -> str:
        return self.names[context] if self.names else str(context)


@dataclass(frozen=True)
class Distribution:
    """A probability vector over the label alphabet."""

    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.probs) == 0:
            raise ValidationError("empty distribution")
        if any(p < 0 or not np.isfinite(p) for p in self.probs):
            raise ValidationError(f"distribution has negative or non-finite entries: {self.probs}")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
            raise ValidationError(f"distribution sums to {total!r}, not 1: {self.probs}")

    @classmethod
    def of(cls, probs: Sequence[float] | np.ndarray) -> "Distribution":
        return cls(tuple(float(p) for p in probs))

    @classmethod
    def uniform(cls, size: int) -> "Distribution":
        return cls(tuple(1.0 / size for _ in range(size)))

    @classmethod
    def point_mass(cls, size: int, label: int) -> "Distribution":
        return cls(tuple(1.0 if k == label else 0.0 for k in range(size)))

    @classmethod
    def bernoulli(cls, p_one: float) -> "Distribution":
        """Binary distribution with probability p_one on label 1."""
        return cls((1.0 - p_one, p_one))

    @property
    def size(self) -> int:
        return len(self.probs)

    def __getitem__(self, label: int) -> float:
        return self.probs[label]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def strictly_positive(self) -> bool:
        """Membership in the interior of the simplex."""
        return all(p > 0 for p in self.probs)


@dataclass(frozen=True)
class Prefix:
    """A realized history (x_1..x_t, y_1..y_s) with s in {t, t-1}."""

    contexts: tuple[int, ...] = ()
    labels: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        t, s = len(self.contexts), len(self.labels)
        if s not in (t, t - 1):
            raise ValidationError(
                f"prefix has {t} contexts and {s} labels; labels must number t or t-1"
            )

    @property
    def length(self) -> int:
        return len(self.contexts)

    @property
    def complete(self) -> bool:
        """True when every context already has its label."""
        return len(self.labels) == len(self.contexts)

    def extend(self, context: int | None = None, label: int | None = None) -> "Prefix":
        contexts = self.contexts + ((context,) if context is not None else ())
        labels = self.labels + ((label,) if label is not None else ())
        return Prefix(contexts, labels)

    def validate(
        self, labels: LabelAlphabet, contexts: ContextAlphabet, horizon: int | None = None
    ) -> "Prefix":
        for i, x in enumerate(self.contexts):
            contexts.check(x, f"prefix.contexts[{i}]")
        for i, y in enumerate(self.labels):
            labels.check(y, f"prefix.labels[{i}]")
        if horizon is not None and self.length > horizon:
            raise ValidationError(f"prefix of length {self.length} exceeds horizon {horizon}")
        return self
