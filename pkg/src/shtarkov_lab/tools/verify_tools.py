"""Verification suite command."""

from shtarkov_lab.services.service_container import ServiceContainer
from shtarkov_lab.services.verify_service import CHECKS, verify_suite
from shtarkov_lab.shared.exceptions import ValidationError


def verify(only: list[str] | None = None) -> dict:
    known = {check.name for check in CHECKS}
    unknown = sorted(set(only or ()) - known)
    if unknown:
        raise ValidationError(f"unknown checks: {', '.join(unknown)}", "only")
    report = verify_suite(ServiceContainer.get_config(), only)
    return report.model_dump()
