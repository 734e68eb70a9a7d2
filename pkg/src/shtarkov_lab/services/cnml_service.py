"""The contextual NML forecaster, baselines, adversaries and the play harness."""

import logging
import math
from abc import ABC, abstractmethod

from shtarkov_lab.core.experts import Expert
from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass
from shtarkov_lab.core.likelihood import likelihood
from shtarkov_lab.models.alphabets import Distribution, Prefix
from shtarkov_lab.models.report_types import Transcript, WorstRegretResult
from shtarkov_lab.models.trees import ContextConstraint, ContextTree, allowed_contexts
from shtarkov_lab.services.shtarkov_service import WorstCaseSolver
from shtarkov_lab.services.truncation_service import truncate_dist
from shtarkov_lab.shared.constants import DEFAULT_SEQUENCE_BUDGET, REGRET_ACCOUNTING_TOLERANCE
from shtarkov_lab.shared.exceptions import (
    DegenerateClassError,
    RegretAccountingError,
    ValidationError,
)
from shtarkov_lab.shared.utils.enumeration import check_budget, sequences
from shtarkov_lab.shared.utils.logspace import NEG_INF, LogValue, softmax

logger = logging.getLogger(__name__)


def _loss(p: Distribution, y: int) -> float:
    q = p[y]
    return math.inf if q == 0.0 else -math.log(q)


def _regret(learner_loss: float, sup_log_likelihood: LogValue) -> float:
    # Once every expert has infinite loss the learner wins outright.
    if sup_log_likelihood == NEG_INF:
        return -math.inf
    return learner_loss + sup_log_likelihood


def cnml_predict(
    F: HypothesisClass,
    horizon: int,
    prefix: Prefix,
    constraint: ContextConstraint | None = None,
    solver: WorstCaseSolver | None = None,
) -> Distribution:
    """Normalise the worst-case prefix Shtarkov values of each candidate label.

    Args:
        F: The hypothesis class
        horizon: Number of rounds T
        prefix: History (x_1..x_t, y_1..y_{t-1}) with the current context revealed
        constraint: Optional restriction on future contexts
        solver: Worst-case solver to reuse across rounds of one game

    Returns:
        The prediction for round t; uniform when every continuation has zero mass
    """
    if prefix.complete:
        raise ValidationError("cNML predicts after the round's context and before its label")
    if prefix.length > horizon:
        raise ValidationError(f"round {prefix.length} is past the horizon {horizon}")
    solver = solver or WorstCaseSolver(F, horizon, constraint)
    scores = [solver.value(prefix.extend(label=y)) for y in range(F.num_labels)]
    probs = softmax(scores)
    if not probs:
        return Distribution.uniform(F.num_labels)
    return Distribution.of(probs)


# ============================================================================
# Forecasters
# ============================================================================


class Forecaster(ABC):
    """A deterministic learner: observe context, emit a distribution, observe the label."""

    name: str = "forecaster"

    def __init__(self, num_labels: int):
        self.num_labels = num_labels
        self._contexts: tuple[int, ...] = ()
        self._labels: tuple[int, ...] = ()

    @abstractmethod
    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        """
        Prediction as a pure function of the history.

        Args:
            contexts: x_1..x_t, the current context included
            labels: y_1..y_{t-1}

        Returns:
            Distribution over the labels
        """
        pass

    def reset(self) -> None:
        self._contexts, self._labels = (), ()

    def predict(self, context: int) -> Distribution:
        self._contexts = self._contexts + (context,)
        return self.forecast(self._contexts, self._labels)

    def observe(self, label: int) -> None:
        self._labels = self._labels + (label,)


class CNMLForecaster(Forecaster):
    name = "cnml"

    def __init__(
        self,
        F: HypothesisClass,
        horizon: int,
        constraint: ContextConstraint | None = None,
        budget: int = DEFAULT_SEQUENCE_BUDGET,
    ):
        super().__init__(F.num_labels)
        self.F = F
        self.horizon = horizon
        self.constraint = constraint
        self.solver = WorstCaseSolver(F, horizon, constraint, budget)

    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return cnml_predict(self.F, self.horizon, Prefix(contexts, labels), solver=self.solver)


class UniformForecaster(Forecaster):
    name = "uniform"

    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return Distribution.uniform(self.num_labels)


class BayesMixtureForecaster(Forecaster):
    """Posterior-weighted mixture over an explicit class with a uniform prior."""

    name = "bayes"

    def __init__(self, F: ExplicitFiniteClass):
        super().__init__(F.num_labels)
        self.F = F

    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        weights = softmax(
            [likelihood(f, contexts[:-1], labels, self.F.contexts) for f in self.F.experts]
        )
        if not weights:
            return Distribution.uniform(self.num_labels)
        predictions = [f.predict(contexts, labels) for f in self.F.experts]
        mixed = [
            math.fsum(w * p[y] for w, p in zip(weights, predictions))
            for y in range(self.num_labels)
        ]
        total = math.fsum(mixed)
        return Distribution.of([m / total for m in mixed])


class ExpertForecaster(Forecaster):
    """Copies one expert's prediction."""

    def __init__(self, expert: Expert):
        super().__init__(expert.num_labels)
        self.expert = expert
        self.name = f"expert:{expert.name}"

    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return self.expert.predict(contexts, labels)


class TruncatedForecaster(Forecaster):
    """Any forecaster with the smooth truncation map applied to its output."""

    def __init__(self, base: Forecaster, delta: float):
        super().__init__(base.num_labels)
        self.base = base
        self.delta = delta
        self.name = f"truncated({base.name},{delta:g})"

    def forecast(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> Distribution:
        return truncate_dist(self.base.forecast(contexts, labels), self.delta)


# ============================================================================
# Adversaries
# ============================================================================


class Adversary(ABC):
    """Nature: picks the context, then the label after seeing the prediction."""

    @abstractmethod
    def context(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> int:
        pass

    @abstractmethod
    def label(
        self, contexts: tuple[int, ...], labels: tuple[int, ...], prediction: Distribution
    ) -> int:
        pass


class SequenceAdversary(Adversary):
    def __init__(self, contexts: tuple[int, ...], labels: tuple[int, ...]):
        if len(contexts) != len(labels):
            raise ValidationError(
                f"sequence adversary has {len(contexts)} contexts and {len(labels)} labels"
            )
        self.contexts = tuple(contexts)
        self.labels = tuple(labels)

    def context(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> int:
        return self.contexts[len(contexts)]

    def label(
        self, contexts: tuple[int, ...], labels: tuple[int, ...], prediction: Distribution
    ) -> int:
        return self.labels[len(labels)]


class WorstCaseAdversary(Adversary):
    """Plays the worst-case optimal context and the regret-maximising label."""

    def __init__(
        self,
        F: HypothesisClass,
        horizon: int,
        constraint: ContextConstraint | None = None,
        solver: WorstCaseSolver | None = None,
    ):
        self.solver = solver or WorstCaseSolver(F, horizon, constraint)

    def context(self, contexts: tuple[int, ...], labels: tuple[int, ...]) -> int:
        return self.solver.best_context(Prefix(contexts, labels))[0]

    def label(
        self, contexts: tuple[int, ...], labels: tuple[int, ...], prediction: Distribution
    ) -> int:
        values = self.solver.label_values(Prefix(contexts[:-1], labels), contexts[-1])
        losses = [_loss(prediction, y) for y in range(len(values))]
        scores = [loss + v if v != NEG_INF else NEG_INF for loss, v in zip(losses, values)]
        if all(s == NEG_INF for s in scores):
            scores = losses
        return max(range(len(scores)), key=lambda y: (scores[y], -y))


# ============================================================================
# Games
# ============================================================================


def play_game(
    forecaster: Forecaster,
    adversary: Adversary,
    F: HypothesisClass,
    horizon: int,
) -> Transcript:
    """Run the protocol context -> prediction -> label for T rounds."""
    forecaster.reset()
    contexts: tuple[int, ...] = ()
    labels: tuple[int, ...] = ()
    transcript = Transcript(forecaster=forecaster.name)
    cumulative = 0.0
    running, previous_sup = 0.0, 0.0
    for t in range(horizon):
        x = F.contexts.check(adversary.context(contexts, labels), f"round {t + 1} context")
        contexts = contexts + (x,)
        prediction = forecaster.predict(x)
        y = F.labels.check(adversary.label(contexts, labels, prediction), f"round {t + 1} label")
        forecaster.observe(y)
        labels = labels + (y,)

        loss = _loss(prediction, y)
        cumulative += loss
        # regret_t - regret_{t-1} = loss_t + sup_t - sup_{t-1}
        sup_t = F.sup_log_likelihood(contexts, labels)[0]
        if math.isfinite(running) and math.isfinite(sup_t) and math.isfinite(loss):
            running += loss + sup_t - previous_sup
        else:
            running = _regret(cumulative, sup_t)
        previous_sup = sup_t
        transcript.contexts.append(x)
        transcript.predictions.append(list(prediction.probs))
        transcript.labels.append(y)
        transcript.losses.append(loss)
        transcript.regrets.append(running)

    sup = F.sup_log_likelihood(contexts, labels)[0]
    learner_loss = math.fsum(transcript.losses)
    regret = _regret(learner_loss, sup)
    if math.isfinite(regret) and not abs(running - regret) <= REGRET_ACCOUNTING_TOLERANCE:
        raise RegretAccountingError(
            f"running regret {running!r} differs from recomputed regret {regret!r}"
        )
    if not math.isfinite(regret) and running != regret:
        raise RegretAccountingError(f"running regret {running!r} but the game ended at {regret!r}")
    transcript.learner_loss = learner_loss
    transcript.best_expert_loss = math.inf if sup == NEG_INF else -sup
    transcript.regret = regret
    logger.debug(f"Game against {F.name!r} finished with regret {transcript.regret}")
    return transcript


def exhaustive_worst_regret(
    forecaster: Forecaster,
    F: HypothesisClass,
    horizon: int,
    constraint: ContextConstraint | None = None,
    budget: int = DEFAULT_SEQUENCE_BUDGET,
) -> WorstRegretResult:
    """Worst realised regret over every (context, label) sequence.

    For a deterministic forecaster this covers every adaptive adversary.
    """
    check_budget(
        "context-label sequences", (F.num_contexts * F.num_labels) ** horizon, budget
    )
    best: list = [None, (), ()]

    def walk(contexts: tuple[int, ...], labels: tuple[int, ...], loss: float) -> None:
        if len(contexts) == horizon:
            regret = _regret(loss, F.sup_log_likelihood(contexts, labels)[0])
            if best[0] is None or regret > best[0]:
                best[0], best[1], best[2] = regret, contexts, labels
            return
        for x in allowed_contexts(constraint, contexts, labels, F.num_contexts):
            prediction = forecaster.forecast(contexts + (x,), labels)
            for y in range(F.num_labels):
                walk(contexts + (x,), labels + (y,), loss + _loss(prediction, y))

    walk((), (), 0.0)
    return WorstRegretResult(
        forecaster=forecaster.name,
        value=best[0],
        worst_contexts=list(best[1]),
        worst_labels=list(best[2]),
    )


# ============================================================================
# NML distributions
# ============================================================================


def _normalized_maximum_likelihood(
    F: HypothesisClass, tree: ContextTree, budget: int
) -> dict[tuple[int, ...], float]:
    check_budget("label paths", F.num_labels**tree.depth, budget)
    paths = list(sequences(F.num_labels, tree.depth))
    scores = [F.sup_log_likelihood(tree.contexts_along(p), p)[0] for p in paths]
    probs = softmax(scores)
    if not probs:
        raise DegenerateClassError(f"class {F.name!r} has Shtarkov sum 0 at horizon {tree.depth}")
    return dict(zip(paths, probs))


def nml_distribution(
    F: HypothesisClass, horizon: int, budget: int = DEFAULT_SEQUENCE_BUDGET
) -> dict[tuple[int, ...], float]:
    """p(y) = sup_f L(f; y) / sum_y' sup_f L(f; y'), every round at context 0."""
    if horizon < 0:
        raise ValidationError(f"horizon must be nonnegative, got {horizon}")
    return _normalized_maximum_likelihood(
        F, ContextTree.constant([0] * horizon, F.num_labels), budget
    )


def fixed_design_nml(
    F: HypothesisClass, contexts: tuple[int, ...], budget: int = DEFAULT_SEQUENCE_BUDGET
) -> dict[tuple[int, ...], float]:
    """NML of the class projected onto a known context sequence."""
    for t, x in enumerate(contexts):
        F.contexts.check(x, f"contexts[{t}]")
    return _normalized_maximum_likelihood(
        F, ContextTree.constant(list(contexts), F.num_labels), budget
    )
