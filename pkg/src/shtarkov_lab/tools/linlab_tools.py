"""Linear-class experiments; these build their own classes and ignore --spec."""

import logging

from shtarkov_lab.models.trees import ContextTree
from shtarkov_lab.services.linlab_service import (
    ball_grid,
    compare_linear_cover_sizes,
    lin_lower_bound_experiment,
    lin_sup_likelihood,
    orthonormal_design,
)
from shtarkov_lab.services.service_container import ServiceContainer

logger = logging.getLogger(__name__)


def lowerbound(dim: int | None = None) -> dict:
    """Conditional Shtarkov sum of the full Lin class on e_1..e_T.

    Args:
        dim: Ambient dimension, defaults to the horizon
    """
    config = ServiceContainer.get_config()
    T = config.horizon
    report = lin_lower_bound_experiment(T, dim or T, config.effective_budgets.sequences)
    return report.model_dump()


def sup(labels: list[int], dim: int | None = None) -> dict:
    design = orthonormal_design(len(labels), dim or len(labels))
    value, exact = lin_sup_likelihood(design, labels)
    return {"labels": list(labels), "log_sup_likelihood": value, "exact": exact}


def compare_covers(dim: int, resolution: int, alpha: float) -> dict:
    """Min cover sizes of Lin and AbsLin grid classes on the constant tree e_1, e_2, ...."""
    config = ServiceContainer.get_config()
    T = config.horizon
    design = orthonormal_design(T, dim)
    tree = ContextTree.constant(list(range(T)), 2)
    result = compare_linear_cover_sizes(
        design, ball_grid(dim, resolution), alpha, tree, config.effective_budgets.covers
    )
    return {"alpha": alpha, "resolution": resolution, **result}
