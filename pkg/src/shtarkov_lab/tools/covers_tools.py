"""Cover, entropy and fat-shattering commands (binary explicit classes)."""

import logging
import math
from pathlib import Path

from shtarkov_lab.services.class_loader import parse_tree
from shtarkov_lab.services.covers_service import (
    entropy_regret_bounds,
    fat_shattering_dim,
    global_entropy,
    greedy_cover_size,
    is_global_cover,
    min_sequential_cover,
    worst_case_cover,
)
from shtarkov_lab.services.game_service import minimax_regret_exact
from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.shared.exceptions import EnumerationBudgetExceeded

logger = logging.getLogger(__name__)


def min_cover(tree_path: Path, alpha: float) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    tree = parse_tree(tree_path, F)
    size, certificate = min_sequential_cover(F, tree, alpha, config.effective_budgets.covers)
    greedy, _ = greedy_cover_size(F, tree, alpha)
    return {
        "alpha": alpha,
        "min_cover_size": size,
        "greedy_cover_size": greedy,
        "cover": [list(v.values) for v in certificate.trees],
    }


def entropy(alpha: float) -> dict:
    """Sequential and global entropies at one scale, with the worst tree."""
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    budgets = config.effective_budgets
    size, tree, _ = worst_case_cover(F, alpha, config.horizon, budgets.covers, budgets.trees)
    h_global, cover = global_entropy(F, alpha, config.horizon, budgets.covers)
    return {
        "alpha": alpha,
        "horizon": config.horizon,
        "worst_cover_size": size,
        "worst_tree": tree.to_list(),
        "sequential_entropy": math.log(size),
        "global_entropy": h_global,
        "global_cover_size": len(cover.maps),
    }


def global_cover(alpha: float) -> dict:
    """Smallest global sequential cover over every context history up to the horizon."""
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    h_global, cover = global_entropy(F, alpha, config.horizon, config.effective_budgets.covers)
    return {
        "alpha": alpha,
        "horizon": config.horizon,
        "global_entropy": h_global,
        "global_cover_size": cover.size,
        "valid": is_global_cover(cover, F),
    }


def fat(alpha: float, max_depth: int | None = None) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    depth = config.horizon if max_depth is None else max_depth
    dim = fat_shattering_dim(F, alpha, depth, config.effective_budgets.covers)
    return {"alpha": alpha, "max_depth": depth, "fat_dimension": dim}


def bounds(alphas: list[float]) -> dict:
    """Cover-based regret bounds next to the exact regret when it is computable."""
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    budgets = config.effective_budgets
    try:
        exact = minimax_regret_exact(F, config.horizon, budget=budgets.sequences)
    except EnumerationBudgetExceeded as e:
        logger.warning(f"Exact regret skipped: {e}")
        exact = None
    report = entropy_regret_bounds(
        F, config.horizon, alphas, exact, budgets.covers, budgets.trees
    )
    return report.model_dump()
