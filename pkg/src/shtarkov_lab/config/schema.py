"""Run configuration with pydantic-settings and YAML support."""

import os
import re
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, Field, ValidationError as PydanticValidationError, model_validator
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from shtarkov_lab.shared.constants import (
    DEFAULT_COVER_BUDGET,
    DEFAULT_SEED,
    DEFAULT_SEQUENCE_BUDGET,
    DEFAULT_SIMPLEX_BUDGET,
    DEFAULT_TREE_BUDGET,
    DISTRIBUTION_TOLERANCE,
    EQUALITY_TOLERANCE,
    NORMALIZATION_TOLERANCE,
)
from shtarkov_lab.shared.exceptions import ConfigurationError
from shtarkov_lab.shared.utils.enumeration import effective_budget

ENV_PATTERN = re.compile(r"\$\{([^:}]+)(:([^}]*))?\}")


class YamlSettingsSource(PydanticBaseSettingsSource):
    """Settings source reading a YAML file with ${VAR:default} expansion."""

    def __init__(self, settings_cls: type[BaseSettings], config_path: Path | None = None):
        super().__init__(settings_cls)
        self.config_path = config_path or Path("config.yaml")

    @staticmethod
    def _substitute(match: re.Match) -> str:
        default = match.group(3) if match.group(3) is not None else ""
        return os.environ.get(match.group(1), default)

    def _expand(self, value: Any) -> Any:
        if isinstance(value, dict):
            return {k: self._expand(v) for k, v in value.items()}
        if isinstance(value, list):
            return [self._expand(item) for item in value]
        if not isinstance(value, str):
            return value
        if ENV_PATTERN.fullmatch(value):
            expanded = ENV_PATTERN.sub(self._substitute, value).strip()
            # Unset variable without a default leaves the field to lower sources
            return expanded or None
        return ENV_PATTERN.sub(self._substitute, value)

    def get_field_value(self, field_name: str, field_info: Any) -> Any:
        """Unused; values come from __call__."""
        return None

    def __call__(self) -> dict[str, Any]:
        if not self.config_path.exists():
            return {}
        with open(self.config_path) as f:
            raw = yaml.safe_load(f) or {}
        expanded = self._expand(raw)
        return _drop_none(expanded)


def _drop_none(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _drop_none(v) for k, v in value.items() if v is not None}
    return value


class BudgetConfig(BaseModel):
    """Caps on exhaustive enumerations."""

    trees: int = Field(default=DEFAULT_TREE_BUDGET, gt=0, description="Context trees")
    sequences: int = Field(
        default=DEFAULT_SEQUENCE_BUDGET, gt=0, description="Label paths and game histories"
    )
    simplex: int = Field(default=DEFAULT_SIMPLEX_BUDGET, gt=0, description="Simplex lattice points")
    covers: int = Field(default=DEFAULT_COVER_BUDGET, gt=0, description="Cover search nodes")

    def clamped(self) -> "BudgetConfig":
        """Every budget clamped to the SHTARKOV_LAB_BUDGET ceiling."""
        return BudgetConfig(
            trees=effective_budget(self.trees),
            sequences=effective_budget(self.sequences),
            simplex=effective_budget(self.simplex),
            covers=effective_budget(self.covers),
        )


class ToleranceConfig(BaseModel):
    equality: float = Field(default=EQUALITY_TOLERANCE, gt=0)
    normalization: float = Field(default=NORMALIZATION_TOLERANCE, gt=0)
    distribution: float = Field(default=DISTRIBUTION_TOLERANCE, gt=0)


class OutputConfig(BaseModel):
    format: Literal["json", "table"] = Field(default="json", description="Report format")
    include_timing: bool = Field(
        default=False, description="Emit wall time (breaks byte-identical reports)"
    )


class RunConfig(BaseSettings):
    """Configuration for one CLI run, from YAML, environment and flags."""

    spec_path: Path | None = Field(default=None, description="Class-spec JSON file")
    horizon: int = Field(default=2, ge=0, description="Game horizon T")
    seed: int = Field(default=DEFAULT_SEED, ge=0, lt=2**64)
    log_level: str = Field(default="WARNING")
    budgets: BudgetConfig = Field(default_factory=BudgetConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    model_config = SettingsConfigDict(
        env_prefix="SHTARKOV_LAB_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="ignore",
        validate_assignment=True,
    )

    @model_validator(mode="after")
    def _check_log_level(self) -> "RunConfig":
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"unknown log level {self.log_level!r}")
        return self

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """CLI args (init) > env vars > yaml > defaults."""
        config_path = Path(os.environ.get("CONFIG_PATH", "config/config.yaml"))
        return (init_settings, env_settings, YamlSettingsSource(settings_cls, config_path))

    @classmethod
    def load(cls, **overrides: Any) -> "RunConfig":
        """Build the config, turning pydantic errors into ConfigurationError."""
        try:
            return cls(**overrides)
        except PydanticValidationError as e:
            first = e.errors()[0]
            loc = ".".join(str(part) for part in first["loc"])
            raise ConfigurationError(f"{loc}: {first['msg']}") from None

    def apply_cli_overrides(self, args) -> None:
        """Apply CLI argument overrides to configuration."""
        try:
            if getattr(args, "spec", None):
                self.spec_path = Path(args.spec)
            if getattr(args, "horizon", None) is not None:
                self.horizon = args.horizon
            if getattr(args, "seed", None) is not None:
                self.seed = args.seed
            if getattr(args, "budget", None) is not None:
                self.budgets = BudgetConfig(
                    trees=args.budget,
                    sequences=args.budget,
                    simplex=args.budget,
                    covers=args.budget,
                )
            if getattr(args, "budget_trees", None) is not None:
                self.budgets = self.budgets.model_copy(update={"trees": args.budget_trees})
            if getattr(args, "budget_seqs", None) is not None:
                self.budgets = self.budgets.model_copy(update={"sequences": args.budget_seqs})
            if getattr(args, "tolerance", None) is not None:
                self.tolerances = self.tolerances.model_copy(update={"equality": args.tolerance})
            if getattr(args, "out", None):
                self.output = self.output.model_copy(update={"format": args.out})
            if getattr(args, "timing", False):
                self.output = self.output.model_copy(update={"include_timing": True})
            if getattr(args, "verbose", False):
                self.log_level = "INFO"
        except PydanticValidationError as e:
            first = e.errors()[0]
            loc = ".".join(str(part) for part in first["loc"])
            raise ConfigurationError(f"{loc}: {first['msg']}") from None

        # model_copy skips validation
        for name in ("trees", "sequences", "simplex", "covers"):
            if getattr(self.budgets, name) <= 0:
                raise ConfigurationError(f"budgets.{name} must be positive")
        if self.tolerances.equality <= 0:
            raise ConfigurationError("tolerances.equality must be positive")

    @property
    def effective_budgets(self) -> BudgetConfig:
        return self.budgets.clamped()
