"""Report type definitions for shtarkov-lab commands."""

from typing import Any, Literal

from pydantic import BaseModel, Field


class GameValueReport(BaseModel):
    """Primal, dual and worst-case Shtarkov values of one game."""

    horizon: int
    primal_value: float = Field(..., description="Backward-induction minimax regret")
    dual_value: float = Field(..., description="Entropy plus expected score at the optimal tree")
    worstcase_shtarkov: float = Field(..., description="log sup over trees of the Shtarkov sum")
    grid_value: float | None = Field(default=None, description="Simplex-grid upper bound")
    grid_resolution: float | None = None
    max_abs_gap: float = Field(..., description="Largest pairwise deviation among the values")


class Transcript(BaseModel):
    """Full record of one played game."""

    forecaster: str
    contexts: list[int] = Field(default_factory=list)
    predictions: list[list[float]] = Field(default_factory=list)
    labels: list[int] = Field(default_factory=list)
    losses: list[float] = Field(default_factory=list)
    regrets: list[float] = Field(
        default_factory=list, description="Running regret after each round"
    )
    learner_loss: float = 0.0
    best_expert_loss: float = 0.0
    regret: float = 0.0


class WorstRegretResult(BaseModel):
    forecaster: str
    value: float
    worst_contexts: list[int]
    worst_labels: list[int]


class BoundRow(BaseModel):
    """All entropy bounds at one scale."""

    alpha: float
    sequential_entropy: float = Field(..., description="log of the worst-case min cover size")
    global_entropy: float = Field(..., description="log of the min global cover size")
    smoothed_cover_bound: float = Field(..., description="T log(1+2 alpha) + sequential entropy")
    chaining_bound: float = Field(..., description="4 T alpha + c * sequential entropy")
    global_cover_bound: float = Field(..., description="T log(1+2 alpha) + global entropy")
    fat_dimension: int | None = Field(
        default=None, description="Fat dimension at scale just above 2 alpha"
    )
    fat_lower_bound: float | None = Field(default=None, description="min(T, fat) * log 2")
    fat_check: bool | None = Field(
        default=None, description="sequential entropy >= fat lower bound"
    )


class BoundReport(BaseModel):
    horizon: int
    c_constant: float
    finite_class_bound: float | None = Field(default=None, description="log |F|")
    exact_regret: float | None = None
    rows: list[BoundRow] = Field(default_factory=list)
    best_alpha: dict[str, float] = Field(default_factory=dict)
    best_value: dict[str, float] = Field(default_factory=dict)


class TruncationRow(BaseModel):
    delta: float
    regret: float
    truncated_regret: float
    regret_slack: float = Field(..., description="R(F^delta) + T log(1+K delta) - R(F)")
    regret_gap: float = Field(..., description="|R(F^delta) - R(F)|")
    log_shtarkov: float
    log_shtarkov_truncated: float
    shtarkov_ceiling: float = Field(..., description="log(Sh(F) + delta M(T) K^T)")
    regret_inequality: bool
    shtarkov_inequality: bool


class TruncationReport(BaseModel):
    horizon: int
    m_of_t: int
    rows: list[TruncationRow] = Field(default_factory=list)
    monotone_convergence: bool


class LowerBoundReport(BaseModel):
    horizon: int
    dim: int
    conditional_shtarkov_log: float
    lower_bound_log: float = Field(..., description="T log(1 + 1/sqrt(T))")
    quarter_sqrt_t: float = Field(..., description="sqrt(T)/4")
    closed_form_log: float = Field(..., description="T log((1 + 1/sqrt(T))/2) + T log 2")
    holds: bool


class CheckResult(BaseModel):
    name: str
    result: str = Field(..., description="Which identity or bound the check exercises")
    status: Literal["pass", "fail", "skipped"]
    detail: str = ""


class VerifyReport(BaseModel):
    checks: list[CheckResult] = Field(default_factory=list)
    passed: int = 0
    failed: int = 0
    skipped: int = 0


class Report(BaseModel):
    """Envelope written by every command."""

    command: list[str]
    config: dict[str, Any]
    result: dict[str, Any]
    version: str
    wall_time: float | None = Field(default=None, description="Seconds; only with include_timing")
