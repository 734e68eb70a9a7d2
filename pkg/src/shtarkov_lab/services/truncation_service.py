"""Smooth truncation T_delta(p) = (p + delta) / (1 + K delta) and its quantitative bounds."""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from shtarkov_lab.core.experts import Expert
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass
from shtarkov_lab.core.likelihood import likelihood
from shtarkov_lab.models.alphabets import Distribution
from shtarkov_lab.models.report_types import TruncationReport, TruncationRow
from shtarkov_lab.services.game_service import minimax_regret_exact
from shtarkov_lab.services.shtarkov_service import worst_case_shtarkov
from shtarkov_lab.shared.constants import (
    DEFAULT_DELTA_GRID,
    DEFAULT_SEQUENCE_BUDGET,
    DISTRIBUTION_TOLERANCE,
    EQUALITY_TOLERANCE,
    MAX_HORIZON_FOR_M,
)
from shtarkov_lab.shared.exceptions import UnsupportedClassError, ValidationError
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue, exp, log, log_add

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TruncationLevel:
    """delta in the open interval (0, 1/2)."""

    delta: float

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 0.5:
            raise ValidationError(f"truncation level must lie in (0, 1/2), got {self.delta}")

    def bounds(self, num_labels: int) -> tuple[float, float]:
        """Coordinate range of the image set."""
        scale = 1.0 + num_labels * self.delta
        return self.delta / scale, (1.0 + self.delta) / scale


def truncate_dist(p: Distribution, delta: float) -> Distribution:
    level = TruncationLevel(delta)
    scale = 1.0 + p.size * level.delta
    return Distribution.of([(q + level.delta) / scale for q in p.probs])


def inverse_truncate(q: Distribution, delta: float) -> Distribution:
    """The unique p with T_delta(p) = q; q must lie in the image set."""
    if not in_truncated_image(q, delta):
        raise ValidationError(f"{q.probs} is not in the image of the level-{delta} truncation")
    scale = 1.0 + q.size * delta
    raw = [v * scale - delta for v in q.probs]
    clipped = [max(0.0, v) for v in raw]
    total = math.fsum(clipped)
    return Distribution.of([v / total for v in clipped])


def in_truncated_image(q: Distribution, delta: float) -> bool:
    low, high = TruncationLevel(delta).bounds(q.size)
    return all(
        low - DISTRIBUTION_TOLERANCE <= v <= high + DISTRIBUTION_TOLERANCE for v in q.probs
    )


def sample_truncated_simplex(
    rng: np.random.Generator, num_labels: int, delta: float, n: int
) -> np.ndarray:
    """n uniform draws from the image set by rejection from the uniform simplex.

    Every coordinate at or above the lower bound forces the upper bound, so only
    the minimum is tested.
    """
    low, _ = TruncationLevel(delta).bounds(num_labels)
    accepted: list[np.ndarray] = []
    count = 0
    while count < n:
        draws = rng.dirichlet(np.ones(num_labels), size=max(n, 16))
        keep = draws[draws.min(axis=1) >= low]
        accepted.append(keep)
        count += len(keep)
    return np.concatenate(accepted)[:n]


@dataclass(frozen=True, eq=False)
class TruncatedExpert(Expert):
    base: Expert
    delta: float
    name: str = "truncated"

    def __post_init__(self) -> None:
        TruncationLevel(self.delta)

    @property
    def num_labels(self) -> int:
        return self.base.num_labels

    @property
    def nonsequential(self) -> bool:
        return self.base.nonsequential

    def predict(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return truncate_dist(self.base.predict(contexts, labels), self.delta)


def truncate_class(F: HypothesisClass, delta: float) -> ExplicitFiniteClass:
    """Apply T_delta to every expert of an explicit class."""
    if not isinstance(F, ExplicitFiniteClass):
        raise UnsupportedClassError(f"class {F.name!r} has no expert list to truncate")
    TruncationLevel(delta)
    experts = [TruncatedExpert(f, delta, name=f"{f.name}^{delta:g}") for f in F.experts]
    return ExplicitFiniteClass(experts, F.labels, F.contexts, name=f"{F.name}^{delta:g}")


def truncation_loss_gap(p: Distribution, label: int, delta: float) -> LogValue:
    """l(T_delta(p), y) - l(p, y); -inf when truncation rescues a zero-mass label."""
    truncated = truncate_dist(p, delta)
    if p[label] == 0.0:
        return NEG_INF
    return math.log(p[label]) - math.log(truncated[label])


def m_of_t(horizon: int) -> int:
    """M(T) = sum_{j=1..T} C(T, j) = 2^T - 1."""
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    if horizon >= MAX_HORIZON_FOR_M:
        raise ValidationError(f"M(T) is only tabulated for T < {MAX_HORIZON_FOR_M}, got {horizon}")
    return (1 << horizon) - 1


def truncation_likelihood_gap(
    f: Expert, contexts: Sequence[int], labels: Sequence[int], delta: float
) -> float:
    """L(f^delta; y | x) - L(f; y | x) in the linear domain."""
    truncated = TruncatedExpert(f, delta)
    return exp(likelihood(truncated, contexts, labels)) - exp(likelihood(f, contexts, labels))


def truncated_regret_gap_check(
    F: HypothesisClass,
    horizon: int,
    delta_grid: Sequence[float] = DEFAULT_DELTA_GRID,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> TruncationReport:
    """Compare the class with its truncations over a grid of levels.

    Checks R(F) <= R(F^delta) + T log(1 + K delta) and
    log Sh(F^delta) <= log(Sh(F) + delta M(T) K^T) at every level.
    """
    K = F.num_labels
    m = m_of_t(horizon)
    regret = minimax_regret_exact(F, horizon, budget=budget)
    log_sh = worst_case_shtarkov(F, horizon, budget=budget)

    rows = []
    for delta in sorted(delta_grid, reverse=True):
        truncated = truncate_class(F, delta)
        truncated_regret = minimax_regret_exact(truncated, horizon, budget=budget)
        log_sh_truncated = worst_case_shtarkov(truncated, horizon, budget=budget)
        slack = truncated_regret + horizon * math.log1p(K * delta) - regret
        ceiling = log_add(log_sh, log(delta * m * K**horizon)) if m > 0 else log_sh
        rows.append(
            TruncationRow(
                delta=delta,
                regret=regret,
                truncated_regret=truncated_regret,
                regret_slack=slack,
                regret_gap=abs(truncated_regret - regret),
                log_shtarkov=log_sh,
                log_shtarkov_truncated=log_sh_truncated,
                shtarkov_ceiling=ceiling,
                regret_inequality=slack >= -EQUALITY_TOLERANCE,
                shtarkov_inequality=log_sh_truncated <= ceiling + EQUALITY_TOLERANCE,
            )
        )
        logger.debug(f"delta={delta}: regret {truncated_regret} vs {regret}")

    gaps = [row.regret_gap for row in rows]
    monotone = all(b <= a + EQUALITY_TOLERANCE for a, b in zip(gaps, gaps[1:]))
    return TruncationReport(horizon=horizon, m_of_t=m, rows=rows, monotone_convergence=monotone)
