"""Shtarkov-sum commands over the configured class."""

import logging
from pathlib import Path

from shtarkov_lab.models.alphabets import Prefix
from shtarkov_lab.services.class_loader import parse_constraint, parse_prefix, parse_tree
from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.services.shtarkov_service import (
    WorstCaseSolver,
    general_shtarkov,
    induce_subprob,
    shtarkov_conditional,
    shtarkov_contextfree,
    shtarkov_contextual,
    shtarkov_mc_estimate,
    shtarkov_prefix,
    worst_case_shtarkov_bruteforce,
)
from shtarkov_lab.shared.constants import DEFAULT_MC_SAMPLES
from shtarkov_lab.shared.exceptions import ValidationError

logger = logging.getLogger(__name__)


def contextfree() -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    value = shtarkov_contextfree(F, config.horizon, config.effective_budgets.sequences)
    return {"horizon": config.horizon, "log_shtarkov": value}


def conditional(contexts: list[int]) -> dict:
    """Shtarkov sum at a fixed context sequence; its length sets the horizon."""
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    value = shtarkov_conditional(F, contexts, budget=config.effective_budgets.sequences)
    return {"contexts": list(contexts), "log_shtarkov": value}


def contextual(tree_path: Path) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    tree = parse_tree(tree_path, F)
    value = shtarkov_contextual(F, tree, config.effective_budgets.sequences)
    return {"tree": tree.to_list(), "depth": tree.depth, "log_shtarkov": value}


def prefix(tree_path: Path, prefix_path: Path) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    tree = parse_tree(tree_path, F)
    p = parse_prefix(prefix_path, F)
    value = shtarkov_prefix(F, tree, p, budget=config.effective_budgets.sequences)
    return {
        "prefix": {"contexts": list(p.contexts), "labels": list(p.labels)},
        "log_shtarkov": value,
    }


def worstcase(prefix_path: Path | None = None, constraint_path: Path | None = None) -> dict:
    """Worst-case (prefix) Shtarkov sum with the maximising context tree.

    Args:
        prefix_path: Optional complete prefix to condition on
        constraint_path: Optional time-varying context constraint

    Returns:
        Payload with the value and the argmax tree in level order
    """
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    p = parse_prefix(prefix_path, F, config.horizon) if prefix_path else None
    if p is not None and not p.complete:
        raise ValidationError("worst-case prefix sums need a prefix with every label", "prefix")

    solver = WorstCaseSolver(F, config.horizon, constraint, config.effective_budgets.sequences)
    tree = solver.argmax_tree(p)
    return {
        "horizon": config.horizon,
        "log_shtarkov": solver.value(p),
        "argmax_tree": tree.to_list(),
    }


def bruteforce(constraint_path: Path | None = None) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    value, tree = worst_case_shtarkov_bruteforce(
        F, config.horizon, constraint, config.effective_budgets.trees
    )
    return {"horizon": config.horizon, "log_shtarkov": value, "argmax_tree": tree.to_list()}


def monte_carlo(tree_path: Path, samples: int = DEFAULT_MC_SAMPLES) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    tree = parse_tree(tree_path, F)
    exact = shtarkov_contextual(F, tree, config.effective_budgets.sequences)
    estimate, stderr = shtarkov_mc_estimate(F, tree, samples, config.seed)
    logger.info(f"MC estimate over {samples} samples: {estimate} +/- {stderr}")
    return {
        "samples": samples,
        "seed": config.seed,
        "estimate": estimate,
        "stderr": stderr,
        "log_shtarkov_exact": exact,
    }


def general(tree_path: Path, prefix_path: Path | None = None) -> dict:
    """General Shtarkov sum of the induced sub-probability class, next to the prefix sum."""
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    tree = parse_tree(tree_path, F)
    p = parse_prefix(prefix_path, F) if prefix_path else None
    budget = config.effective_budgets.sequences
    subprob = induce_subprob(F, tree, p, budget)
    return {
        "ground_size": len(subprob.ground),
        "num_maps": len(subprob.maps),
        "log_general_shtarkov": general_shtarkov(subprob),
        "log_shtarkov_prefix": shtarkov_prefix(F, tree, p or Prefix(), budget=budget),
    }
