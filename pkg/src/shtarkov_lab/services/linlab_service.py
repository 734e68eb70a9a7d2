"""Linear and absolute-linear classes on finite designs.

Lin experts map a design point x to (<w, x> + 1)/2 and AbsLin experts to
|<w, x>|, with w in the unit ball. The full Lin class is served by an exact
sup oracle on orthonormal designs; both variants also come as finite
w-grid surrogates for the cover machinery.
"""

import itertools
import logging
import math
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from shtarkov_lab.core.experts import LinearExpert
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, SupOracleClass
from shtarkov_lab.models.alphabets import ContextAlphabet, LabelAlphabet
from shtarkov_lab.models.report_types import LowerBoundReport
from shtarkov_lab.models.trees import ContextTree
from shtarkov_lab.services.covers_service import min_sequential_cover
from shtarkov_lab.services.shtarkov_service import shtarkov_conditional
from shtarkov_lab.shared.constants import (
    DEFAULT_COVER_BUDGET,
    DEFAULT_SEQUENCE_BUDGET,
    DESIGN_NORM_TOLERANCE,
    EQUALITY_TOLERANCE,
    PROJECTED_GRADIENT_ITERATIONS,
    PROJECTED_GRADIENT_STEP,
    PROJECTED_GRADIENT_TOLERANCE,
)
from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import check_budget
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue

logger = logging.getLogger(__name__)

ORTHONORMAL_TOLERANCE = 1e-12
BOUNDARY_EPS = 1e-15


def orthonormal_design(horizon: int, dim: int) -> tuple[tuple[float, ...], ...]:
    """e_1, ..., e_T in R^d."""
    if horizon < 1:
        raise ValidationError(f"horizon must be positive, got {horizon}")
    if dim < horizon:
        raise ValidationError(
            f"an orthonormal design of {horizon} points needs d >= {horizon}, got {dim}"
        )
    return tuple(tuple(float(i == t) for i in range(dim)) for t in range(horizon))


def is_orthonormal(design: Sequence[Sequence[float]]) -> bool:
    rows = np.atleast_2d(np.asarray(design, dtype=float))
    gram = rows @ rows.T
    return bool(np.all(np.abs(gram - np.eye(len(rows))) <= ORTHONORMAL_TOLERANCE))


def lin_eval(w: Sequence[float], x: Sequence[float]) -> float:
    return (float(np.dot(w, x)) + 1.0) / 2.0


def abslin_eval(w: Sequence[float], x: Sequence[float]) -> float:
    return abs(float(np.dot(w, x)))


def lemma_chain_holds(horizon: int) -> bool:
    """T log(1 + 1/sqrt(T)) >= sqrt(T)/4."""
    root = math.sqrt(horizon)
    return horizon * math.log1p(1.0 / root) >= root / 4.0


# ============================================================================
# Sup oracle for the full Lin class
# ============================================================================


def _coordinate(ones: int, zeros: int, multiplier: float) -> float:
    """Maximiser of ones log(1+w) + zeros log(1-w) - multiplier w^2 on [-1, 1]."""
    if ones == 0 and zeros == 0:
        return 0.0
    if zeros == 0:
        return min(1.0, (-1.0 + math.sqrt(1.0 + 2.0 * ones / multiplier)) / 2.0)
    if ones == 0:
        return -min(1.0, (-1.0 + math.sqrt(1.0 + 2.0 * zeros / multiplier)) / 2.0)

    def stationarity(w: float) -> float:
        return ones / (1.0 + w) - zeros / (1.0 - w) - 2.0 * multiplier * w

    return optimize.brentq(stationarity, -1.0 + BOUNDARY_EPS, 1.0 - BOUNDARY_EPS, xtol=1e-15)


def _log_likelihood(counts: Sequence[tuple[int, int]], w: Sequence[float]) -> LogValue:
    total = 0.0
    for (ones, zeros), wj in zip(counts, w):
        p_one = (1.0 + wj) / 2.0
        for n, p in ((ones, p_one), (zeros, 1.0 - p_one)):
            if n == 0:
                continue
            if p <= 0.0:
                return NEG_INF
            total += n * math.log(p)
    return total


def orthonormal_lin_sup(counts: Sequence[tuple[int, int]]) -> tuple[LogValue, list[float]]:
    """Exact sup over the unit ball when every context is its own orthonormal axis.

    counts[j] = (ones, zeros) at context j. The per-coordinate optimum is
    (ones - zeros)/(ones + zeros); when that leaves the ball the multiplier of
    |w| = 1 is found by bracketing.
    """
    free = [
        (a - b) / (a + b) if a + b > 0 else 0.0
        for a, b in counts
    ]
    if math.fsum(w * w for w in free) <= 1.0:
        return _log_likelihood(counts, free), free

    def excess(multiplier: float) -> float:
        return math.fsum(_coordinate(a, b, multiplier) ** 2 for a, b in counts) - 1.0

    low, high = 1e-12, 1.0
    while excess(high) > 0:
        high *= 2.0
    multiplier = optimize.brentq(excess, low, high, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    w = [_coordinate(a, b, multiplier) for a, b in counts]
    norm = math.sqrt(math.fsum(v * v for v in w))
    if norm > 1.0:
        w = [v / norm for v in w]
    return _log_likelihood(counts, w), w


def projected_gradient_lin_sup(
    design: np.ndarray,
    contexts: Sequence[int],
    labels: Sequence[int],
    iterations: int = PROJECTED_GRADIENT_ITERATIONS,
    step: float = PROJECTED_GRADIENT_STEP,
    tolerance: float = PROJECTED_GRADIENT_TOLERANCE,
) -> tuple[LogValue, np.ndarray]:
    """Projected gradient ascent from w = sum_t (2y_t - 1)/sqrt(T) x_t."""
    rows = design[list(contexts)]
    signs = 2.0 * np.asarray(labels, dtype=float) - 1.0
    T = len(labels)
    if T == 0:
        return 0.0, np.zeros(design.shape[1])

    def project(w: np.ndarray) -> np.ndarray:
        norm = np.linalg.norm(w)
        return w / norm if norm > 1.0 else w

    def objective(w: np.ndarray) -> float:
        p = (1.0 + signs * (rows @ w)) / 2.0
        if np.any(p <= 0.0):
            return NEG_INF
        return float(np.sum(np.log(p)))

    w = project((signs[:, None] * rows).sum(axis=0) / math.sqrt(T))
    best_w, best = w, objective(w)
    for k in range(1, iterations + 1):
        margins = np.maximum(1.0 + signs * (rows @ w), BOUNDARY_EPS)
        gradient = (signs / margins) @ rows
        candidate = project(w + step / math.sqrt(k) * gradient)
        value = objective(candidate)
        moved = float(np.linalg.norm(candidate - w))
        w = candidate
        if value > best:
            best_w, best = candidate, value
        if moved < tolerance:
            break
    return best, best_w


@dataclass(frozen=True, eq=False)
class LinearSupOracle:
    """sup_{|w| <= 1} log L(f_w; y | x) for the Lin class on a finite design.

    Exact on orthonormal designs (any context repetition); other designs fall
    back to projected gradient and report `exact = False`.
    """

    design: tuple[tuple[float, ...], ...]
    _rows: np.ndarray = field(init=False, repr=False)
    _orthonormal: bool = field(init=False, repr=False)

    def __post_init__(self) -> None:
        rows = np.atleast_2d(np.asarray(self.design, dtype=float))
        if np.any(np.linalg.norm(rows, axis=1) > 1.0 + DESIGN_NORM_TOLERANCE):
            raise ValidationError("design vectors must have norm <= 1")
        object.__setattr__(self, "_rows", rows)
        object.__setattr__(self, "_orthonormal", is_orthonormal(rows))

    @property
    def exact(self) -> bool:
        return self._orthonormal

    def __call__(
        self, contexts: tuple[int, ...], labels: tuple[int, ...]
    ) -> tuple[LogValue, tuple[float, ...]]:
        if not self._orthonormal:
            value, w = projected_gradient_lin_sup(self._rows, contexts, labels)
            return value, tuple(float(v) for v in w)

        if not labels:
            return 0.0, tuple(0.0 for _ in range(self._rows.shape[1]))
        counts: Counter[tuple[int, int]] = Counter(zip(contexts, labels))
        used = sorted(set(contexts))
        per_context = [(counts[(x, 1)], counts[(x, 0)]) for x in used]
        if all(a + b == 1 for a, b in per_context):
            T = len(used)
            r = 1.0 / math.sqrt(T)
            value = T * math.log((1.0 + r) / 2.0)
            coefficients = [r if a else -r for a, _ in per_context]
        else:
            value, coefficients = orthonormal_lin_sup(per_context)
        w = np.asarray(coefficients) @ self._rows[used]
        return value, tuple(float(v) for v in w)


def lin_sup_likelihood(
    design: Sequence[Sequence[float]],
    labels: Sequence[int],
    contexts: Sequence[int] | None = None,
) -> tuple[LogValue, bool]:
    """Sup log-likelihood of the full Lin class; contexts default to 0..T-1.

    Returns (value, exact).
    """
    contexts = tuple(range(len(labels))) if contexts is None else tuple(contexts)
    if len(contexts) != len(labels):
        raise ValidationError(f"{len(contexts)} contexts but {len(labels)} labels")
    oracle = LinearSupOracle(tuple(tuple(map(float, row)) for row in design))
    value, _ = oracle(contexts, tuple(labels))
    return value, oracle.exact


def linear_full_class(design: Sequence[Sequence[float]]) -> SupOracleClass:
    """The full Lin class over the unit ball, one context per design point."""
    oracle = LinearSupOracle(tuple(tuple(map(float, row)) for row in design))
    return SupOracleClass(
        oracle, LabelAlphabet(2), ContextAlphabet(len(design)), name="linear_full"
    )


# ============================================================================
# Grid surrogates
# ============================================================================


def ball_grid(dim: int, resolution: int) -> list[tuple[float, ...]]:
    """Points of the lattice (Z / resolution)^d inside the unit ball."""
    if dim < 1 or resolution < 1:
        raise ValidationError(
            f"ball grid needs dim >= 1 and resolution >= 1, got {dim}, {resolution}"
        )
    steps = [k / resolution for k in range(-resolution, resolution + 1)]
    return [
        w for w in itertools.product(steps, repeat=dim)
        if math.fsum(v * v for v in w) <= 1.0 + DESIGN_NORM_TOLERANCE
    ]


def linear_grid_class(
    design: Sequence[Sequence[float]],
    grid: Sequence[Sequence[float]],
    absolute: bool = False,
) -> ExplicitFiniteClass:
    """Finite surrogate; weights giving identical functions on the design are merged."""
    design = tuple(tuple(map(float, row)) for row in design)
    variant = "abs_linear" if absolute else "linear"
    experts, seen = [], set()
    for w in grid:
        expert = LinearExpert(tuple(map(float, w)), design, absolute, name=f"{variant}{tuple(w)}")
        signature = tuple(expert.value(x) for x in range(len(design)))
        if signature in seen:
            continue
        seen.add(signature)
        experts.append(expert)
    return ExplicitFiniteClass(
        experts, LabelAlphabet(2), ContextAlphabet(len(design)), name=f"{variant}_grid"
    )


def compare_linear_cover_sizes(
    design: Sequence[Sequence[float]],
    grid: Sequence[Sequence[float]],
    alpha: float,
    tree: ContextTree,
    budget: int = DEFAULT_COVER_BUDGET,
) -> dict[str, int | bool]:
    """Min cover sizes of the Lin and AbsLin grid surrogates on one tree."""
    lin, _ = min_sequential_cover(linear_grid_class(design, grid), tree, alpha, budget)
    abs_lin, _ = min_sequential_cover(linear_grid_class(design, grid, True), tree, alpha, budget)
    return {"linear": lin, "abs_linear": abs_lin, "equal": lin == abs_lin}


# ============================================================================
# Lower-bound experiment
# ============================================================================


def lin_lower_bound_experiment(
    horizon: int, dim: int, budget: int = DEFAULT_SEQUENCE_BUDGET
) -> LowerBoundReport:
    """Conditional Shtarkov sum of the full Lin class on e_1..e_T."""
    design = orthonormal_design(horizon, dim)
    check_budget("label paths", 2**horizon, budget)
    F = linear_full_class(design)
    value = shtarkov_conditional(F, tuple(range(horizon)), horizon, budget)

    root = math.sqrt(horizon)
    lower = horizon * math.log1p(1.0 / root)
    quarter = root / 4.0
    closed = horizon * math.log((1.0 + 1.0 / root) / 2.0) + horizon * math.log(2.0)
    logger.info(f"Lin lower bound at T={horizon}: {value:.9f} vs {lower:.9f}")
    return LowerBoundReport(
        horizon=horizon,
        dim=dim,
        conditional_shtarkov_log=value,
        lower_bound_log=lower,
        quarter_sqrt_t=quarter,
        closed_form_log=closed,
        holds=value >= lower - EQUALITY_TOLERANCE and lower >= quarter,
    )
