"""Budget-checked enumeration helpers."""

import itertools
import logging
import os
from collections.abc import Iterator
from math import comb

from shtarkov_lab.shared.constants import GLOBAL_BUDGET_ENV
from shtarkov_lab.shared.exceptions import ConfigurationError, EnumerationBudgetExceeded

logger = logging.getLogger(__name__)


def global_budget_ceiling() -> int | None:
    """The SHTARKOV_LAB_BUDGET ceiling, if set."""
    raw = os.getenv(GLOBAL_BUDGET_ENV)
    if raw is None or raw.strip() == "":
        return None
    try:
        ceiling = int(raw)
    except ValueError:
        raise ConfigurationError(f"{GLOBAL_BUDGET_ENV} must be an integer, got {raw!r}") from None
    if ceiling < 1:
        raise ConfigurationError(f"{GLOBAL_BUDGET_ENV} must be positive, got {ceiling}")
    return ceiling


def effective_budget(budget: int) -> int:
    """Clamp a budget to the global ceiling."""
    ceiling = global_budget_ceiling()
    return budget if ceiling is None else min(budget, ceiling)


def check_budget(what: str, required: int | float, budget: int) -> None:
    """Raise EnumerationBudgetExceeded when `required` items exceed `budget`."""
    budget = effective_budget(budget)
    if required > budget:
        logger.warning(f"Budget exceeded for {what}: {required:.6g} > {budget}")
        raise EnumerationBudgetExceeded(what, required, budget)


def sequences(alphabet_size: int, length: int) -> Iterator[tuple[int, ...]]:
    """All sequences over 0..alphabet_size-1 in lexicographic order."""
    return itertools.product(range(alphabet_size), repeat=length)


def tree_node_count(num_labels: int, depth: int) -> int:
    """Node count of a complete num_labels-ary tree of the given depth."""
    if num_labels == 1:
        return depth
    return (num_labels**depth - 1) // (num_labels - 1)


def tree_depth_for(num_labels: int, node_count: int) -> int | None:
    """Depth of the complete tree with exactly `node_count` nodes, if any."""
    depth = 0
    while tree_node_count(num_labels, depth) < node_count:
        depth += 1
    return depth if tree_node_count(num_labels, depth) == node_count else None


def encode_prefix(labels: tuple[int, ...] | list[int], num_labels: int) -> int:
    """Flat node index of the node reached by `labels` (level order, mixed radix)."""
    depth = len(labels)
    offset = tree_node_count(num_labels, depth)
    index = 0
    for y in labels:
        index = index * num_labels + y
    return offset + index


def simplex_lattice_size(num_labels: int, resolution: int) -> int:
    """Number of points p = n / resolution with n a composition of resolution."""
    return comb(resolution + num_labels - 1, num_labels - 1)
