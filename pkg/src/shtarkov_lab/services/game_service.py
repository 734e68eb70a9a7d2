"""Exact values of the sequential prediction game.

Three structurally different computations of the same number: backward
induction with the closed-form learner response, the swapped (dual) game
evaluated in the linear domain, and a simplex-grid oracle that replaces the
closed-form response by a search over a lattice of predictions.
"""

import logging
import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field

import numpy as np

from shtarkov_lab.core.hypothesis import HypothesisClass
from shtarkov_lab.models.report_types import GameValueReport
from shtarkov_lab.models.trees import (
    ContextConstraint,
    ContextTree,
    TimeVaryingConstraint,
    allowed_contexts,
)
from shtarkov_lab.services.shtarkov_service import shtarkov_conditional, worst_case_shtarkov
from shtarkov_lab.shared.constants import DEFAULT_SEQUENCE_BUDGET, DEFAULT_SIMPLEX_BUDGET
from shtarkov_lab.shared.exceptions import ValidationError
from shtarkov_lab.shared.utils.enumeration import check_budget, sequences, simplex_lattice_size
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue, log, logsumexp, softmax

logger = logging.getLogger(__name__)

State = tuple[tuple[int, ...], tuple[int, ...]]


def _check_game(F: HypothesisClass, horizon: int, budget: int) -> None:
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    check_budget("game histories", (F.num_contexts * F.num_labels) ** horizon, budget)


def learner_best_response(continuations: Sequence[LogValue]) -> tuple[LogValue, list[float]]:
    """inf_p max_y [-log p(y) + G(y)] and the optimal prediction.

    The optimum is p = softmax(G) and the value is log sum_y exp G(y). When every
    G(y) is -inf the value is -inf and the prediction is uniform.
    """
    p = softmax(continuations)
    if not p:
        return NEG_INF, [1.0 / len(continuations)] * len(continuations)
    return logsumexp(continuations), p


def minimax_regret_exact(
    F: HypothesisClass,
    horizon: int,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> LogValue:
    """Backward induction over histories with the closed-form learner response."""
    _check_game(F, horizon, budget)
    values: dict[State, LogValue] = {}

    def node(contexts: tuple[int, ...], labels: tuple[int, ...]) -> LogValue:
        key = (contexts, labels)
        if key in values:
            return values[key]
        if len(contexts) == horizon:
            value = F.sup_log_likelihood(contexts, labels)[0]
        else:
            value = max(
                learner_best_response(
                    [node(contexts + (x,), labels + (y,)) for y in range(F.num_labels)]
                )[0]
                for x in allowed_contexts(constraint, contexts, labels, F.num_contexts)
            )
        values[key] = value
        return value

    return node((), ())


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def simplex_lattice(num_labels: int, resolution: int) -> np.ndarray:
    """All p with p * resolution a nonnegative integer vector summing to resolution."""
    points = np.array(list(_compositions(resolution, num_labels)), dtype=float)
    return points / resolution


def _grid_response(lattice: np.ndarray, continuations: Sequence[LogValue]) -> LogValue:
    g = np.asarray(continuations, dtype=float)
    finite = np.isfinite(g)
    if not finite.any():
        return NEG_INF
    with np.errstate(divide="ignore"):
        losses = -np.log(lattice)
    scores = np.where(finite, losses + np.where(finite, g, 0.0), -np.inf)
    return float(np.min(np.max(scores, axis=1)))


def minimax_regret_grid(
    F: HypothesisClass,
    horizon: int,
    grid_resolution: float,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET,
) -> LogValue:
    """Backward induction with the learner restricted to a simplex lattice of step h.

    An upper bound on the exact value; lattices for h and h/2 are nested, so the
    bound can only improve as h shrinks.
    """
    if not 0 < grid_resolution <= 0.1:
        raise ValidationError(f"grid resolution must lie in (0, 0.1], got {grid_resolution}")
    _check_game(F, horizon, budget)
    resolution = round(1.0 / grid_resolution)
    if abs(resolution * grid_resolution - 1.0) > 1e-9:
        raise ValidationError(
            f"grid step {grid_resolution} does not divide 1; use 1/n for an integer n"
        )
    lattice_size = simplex_lattice_size(F.num_labels, resolution)
    check_budget("simplex lattice points", lattice_size, simplex_budget)
    lattice = simplex_lattice(F.num_labels, resolution)
    logger.info(f"Grid game over {len(lattice)} lattice points, horizon {horizon}")

    values: dict[State, LogValue] = {}

    def node(contexts: tuple[int, ...], labels: tuple[int, ...]) -> LogValue:
        key = (contexts, labels)
        if key in values:
            return values[key]
        if len(contexts) == horizon:
            value = F.sup_log_likelihood(contexts, labels)[0]
        else:
            value = max(
                _grid_response(
                    lattice, [node(contexts + (x,), labels + (y,)) for y in range(F.num_labels)]
                )
                for x in allowed_contexts(constraint, contexts, labels, F.num_contexts)
            )
        values[key] = value
        return value

    return node((), ())


@dataclass
class DualSolution:
    """The swapped game at its optimal context tree."""

    value: LogValue
    log_sum: LogValue
    entropy: float
    expected_score: float
    tree: ContextTree
    path_distribution: dict[tuple[int, ...], float] = field(default_factory=dict)


def dual_game_value(
    F: HypothesisClass,
    horizon: int,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> DualSolution:
    """sup over trees of H(P*) + E_{P*}[F_x], with P* the softmax of the path scores.

    Leaf scores are summed in the linear domain with compensated summation, apart
    from the log-domain recursion of the worst-case solver.
    """
    _check_game(F, horizon, budget)
    K = F.num_labels
    masses: dict[State, float] = {}
    choices: dict[State, int] = {}

    def node(contexts: tuple[int, ...], labels: tuple[int, ...]) -> float:
        key = (contexts, labels)
        if key in masses:
            return masses[key]
        if len(contexts) == horizon:
            score = F.sup_log_likelihood(contexts, labels)[0]
            mass = 0.0 if score == NEG_INF else math.exp(score)
        else:
            mass, best_x = -1.0, -1
            for x in allowed_contexts(constraint, contexts, labels, F.num_contexts):
                total = math.fsum(node(contexts + (x,), labels + (y,)) for y in range(K))
                if total > mass:
                    mass, best_x = total, x
            choices[key] = best_x
        masses[key] = mass
        return mass

    root = node((), ())

    def tree_context(path: tuple[int, ...]) -> int:
        contexts: tuple[int, ...] = ()
        for t in range(len(path) + 1):
            x = choices[(contexts, path[:t])]
            contexts = contexts + (x,)
        return contexts[-1]

    tree = ContextTree.from_function(horizon, K, tree_context)
    paths = list(sequences(K, horizon))
    scores = [F.sup_log_likelihood(tree.contexts_along(p), p)[0] for p in paths]
    probs = softmax(scores)
    if not probs:
        return DualSolution(NEG_INF, NEG_INF, 0.0, NEG_INF, tree, {})

    entropy = -math.fsum(q * math.log(q) for q in probs if q > 0)
    expected = math.fsum(q * s for q, s in zip(probs, scores) if q > 0)
    return DualSolution(
        value=entropy + expected,
        log_sum=log(root),
        entropy=entropy,
        expected_score=expected,
        tree=tree,
        path_distribution={p: q for p, q in zip(paths, probs)},
    )


def fixed_design_regret(
    F: HypothesisClass,
    horizon: int,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> tuple[LogValue, tuple[int, ...]]:
    """Max over context sequences of the conditional Shtarkov sum, with the first maximiser."""
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    check_budget("context sequences", F.num_contexts**horizon, budget)
    best, best_sequence = NEG_INF, None
    for contexts in sequences(F.num_contexts, horizon):
        if constraint is not None and not constraint.admits(
            ContextTree.constant(contexts, F.num_labels), F.num_contexts
        ):
            continue
        value = shtarkov_conditional(F, contexts, budget=budget)
        if best_sequence is None or value > best:
            best, best_sequence = value, contexts
    if best_sequence is None:
        raise ValidationError("no context sequence satisfies the constraint")
    return best, best_sequence


def pinned_design_regret(
    F: HypothesisClass,
    contexts: Sequence[int],
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> LogValue:
    """Minimax regret by backward induction with the adversary held to x_1..x_T.

    Solves the game itself rather than summing likelihoods, so it is an
    independent computation of the conditional Shtarkov sum at `contexts`.
    """
    for t, x in enumerate(contexts):
        F.contexts.check(x, f"contexts[{t}]")
    pinned = TimeVaryingConstraint([[x] for x in contexts])
    return minimax_regret_exact(F, len(contexts), pinned, budget=budget)


def _max_abs_gap(values: Sequence[LogValue]) -> float:
    gap = 0.0
    for i, a in enumerate(values):
        for b in values[i + 1 :]:
            if a == b:
                continue
            gap = max(gap, abs(a - b))
    return gap


def solve_game(
    F: HypothesisClass,
    horizon: int,
    grid_resolution: float | None = None,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
    simplex_budget: int = DEFAULT_SIMPLEX_BUDGET,
) -> GameValueReport:
    """All game values side by side."""
    primal = minimax_regret_exact(F, horizon, constraint, budget)
    dual = dual_game_value(F, horizon, constraint, budget).value
    worst = worst_case_shtarkov(F, horizon, constraint=constraint, budget=budget)
    values = [primal, dual, worst]
    grid = None
    if grid_resolution is not None:
        grid = minimax_regret_grid(F, horizon, grid_resolution, constraint, budget, simplex_budget)
        values.append(grid)
    return GameValueReport(
        horizon=horizon,
        primal_value=primal,
        dual_value=dual,
        worstcase_shtarkov=worst,
        grid_value=grid,
        grid_resolution=grid_resolution,
        max_abs_gap=_max_abs_gap(values),
    )
