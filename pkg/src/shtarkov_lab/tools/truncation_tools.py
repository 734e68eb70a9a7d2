"""Truncation check command."""

from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.services.truncation_service import truncated_regret_gap_check
from shtarkov_lab.shared.constants import DEFAULT_DELTA_GRID


def check(deltas: list[float] | None = None) -> dict:
    config = ServiceContainer.get_config()
    F = ServiceContainer.get_class()
    report = truncated_regret_gap_check(
        F, config.horizon, deltas or DEFAULT_DELTA_GRID, config.effective_budgets.sequences
    )
    return report.model_dump()
