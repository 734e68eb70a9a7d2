"""cNML game commands."""

import logging
from pathlib import Path

from shtarkov_lab.core.hypothesis import ExplicitFiniteClass, HypothesisClass
from shtarkov_lab.services.class_loader import parse_constraint, parse_prefix
from shtarkov_lab.services.cnml_service import (
    Adversary,
    BayesMixtureForecaster,
    CNMLForecaster,
    Forecaster,
    SequenceAdversary,
    TruncatedForecaster,
    UniformForecaster,
    WorstCaseAdversary,
    cnml_predict,
    exhaustive_worst_regret,
    play_game,
)
from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.services.shtarkov_service import WorstCaseSolver
from shtarkov_lab.shared.exceptions import UnsupportedClassError, ValidationError

logger = logging.getLogger(__name__)

FORECASTERS = ("cnml", "uniform", "bayes", "truncated")


def build_forecaster(
    name: str, F: HypothesisClass, horizon: int, delta: float, constraint, budget: int
) -> Forecaster:
    if name == "cnml":
        return CNMLForecaster(F, horizon, constraint, budget)
    if name == "uniform":
        return UniformForecaster(F.num_labels)
    if name == "bayes":
        if not isinstance(F, ExplicitFiniteClass):
            raise UnsupportedClassError(
                f"the Bayes mixture needs an explicit class, got {F.name!r}"
            )
        return BayesMixtureForecaster(F)
    if name == "truncated":
        return TruncatedForecaster(CNMLForecaster(F, horizon, constraint, budget), delta)
    raise ValidationError(f"unknown forecaster {name!r}; choose from {', '.join(FORECASTERS)}")


def parse_adversary(
    spec: str, F: HypothesisClass, horizon: int, constraint, budget: int
) -> Adversary:
    """`worstcase`, or `sequence:FILE` with a JSON {"contexts": [...], "labels": [...]}."""
    if spec == "worstcase":
        solver = WorstCaseSolver(F, horizon, constraint, budget)
        return WorstCaseAdversary(F, horizon, constraint, solver)
    kind, _, path = spec.partition(":")
    if kind != "sequence" or not path:
        raise ValidationError(
            f"unknown adversary {spec!r}; use worstcase or sequence:FILE", "adversary"
        )
    sequence = parse_prefix(Path(path), F, horizon)
    if sequence.length != horizon or not sequence.complete:
        raise ValidationError(
            f"a sequence adversary needs {horizon} contexts and {horizon} labels, got "
            f"{len(sequence.contexts)} and {len(sequence.labels)}",
            "adversary",
        )
    return SequenceAdversary(sequence.contexts, sequence.labels)


def play(
    forecaster: str = "cnml",
    adversary: str = "worstcase",
    delta: float = 0.01,
    constraint_path: Path | None = None,
) -> dict:
    """Play one game and return its transcript.

    Args:
        forecaster: One of cnml, uniform, bayes, truncated
        adversary: worstcase, or sequence:FILE for a fixed context/label sequence
        delta: Truncation level for the truncated forecaster
        constraint_path: Optional time-varying context constraint
    """
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    budget = config.effective_budgets.sequences
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    learner = build_forecaster(forecaster, F, config.horizon, delta, constraint, budget)
    opponent = parse_adversary(adversary, F, config.horizon, constraint, budget)
    transcript = play_game(learner, opponent, F, config.horizon)
    return transcript.model_dump()


def worst(
    forecaster: str = "cnml", delta: float = 0.01, constraint_path: Path | None = None
) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    budget = config.effective_budgets.sequences
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    learner = build_forecaster(forecaster, F, config.horizon, delta, constraint, budget)
    result = exhaustive_worst_regret(learner, F, config.horizon, constraint, budget)
    return result.model_dump()


def predict(prefix_path: Path, constraint_path: Path | None = None) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    prefix = parse_prefix(prefix_path, F, config.horizon)
    solver = WorstCaseSolver(F, config.horizon, constraint, config.effective_budgets.sequences)
    p = cnml_predict(F, config.horizon, prefix, constraint, solver)
    return {
        "prefix": {"contexts": list(prefix.contexts), "labels": list(prefix.labels)},
        "prediction": list(p.probs),
    }
