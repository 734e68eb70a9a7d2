"""Game-value commands."""

import logging
from pathlib import Path

from shtarkov_lab.services.class_loader import parse_constraint
from shtarkov_lab.services.game_service import fixed_design_regret, solve_game
from shtarkov_lab.services.service_container import ServiceContainer

logger = logging.getLogger(__name__)


def solve(grid: float | None = None, constraint_path: Path | None = None) -> dict:
    """Primal, dual and worst-case Shtarkov values of the configured game.

    Args:
        grid: Optional simplex-grid step for the learner-restricted game
        constraint_path: Optional time-varying context constraint
    """
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    budgets = config.effective_budgets
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    report = solve_game(F, config.horizon, grid, constraint, budgets.sequences, budgets.simplex)
    if report.max_abs_gap > config.tolerances.equality:
        logger.warning(f"Game values disagree by {report.max_abs_gap:.3g}")
    return report.model_dump()


def fixed_design(constraint_path: Path | None = None) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    constraint = parse_constraint(constraint_path, F.num_contexts) if constraint_path else None
    value, contexts = fixed_design_regret(
        F, config.horizon, constraint, config.effective_budgets.sequences
    )
    return {"horizon": config.horizon, "fixed_design_regret": value, "contexts": list(contexts)}
