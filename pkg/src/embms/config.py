"""Experiment configuration: YAML file validated into typed, defaulted models.

Every field has a default, so an empty file is a valid config (one static
SCF run at the small-scale settings). Units: rates in bit/s, distances in
metres, times in frames.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .areas.constraints import CONSTRAINT_I_MODES
from .planners import PLANNERS

Distribution = Literal["exponential", "uniform"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ScenarioSection(_Strict):
    cells: list[int] = Field(default=[57], min_length=1)
    zones: list[int] = Field(default=[4], min_length=1)
    distribution: list[Distribution] = Field(default=["exponential"], min_length=1)
    service_rate: list[int] = Field(default=[500_000], min_length=1)
    # item 0 at 2 Mb/s everywhere, one 1 Mb/s item per zone, 14 small items
    mixed_rates: bool = False
    unicast_fraction: float = Field(default=0.25, ge=0.0, le=1.0)
    density: float = Field(default=60.0, gt=0.0)
    items_per_zone: int = Field(default=16, ge=1)
    neighbor_overlap: int = Field(default=12, ge=0)
    inter_site_distance: float = Field(default=500.0, gt=0.0)

    @field_validator("cells", "zones")
    @classmethod
    def _positive(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("must be positive")
        return v

    @field_validator("service_rate")
    @classmethod
    def _rate(cls, v):
        if any(x <= 0 for x in v):
            raise ValueError("service rate must be positive")
        return v

    @model_validator(mode="after")
    def _overlap(self):
        if self.neighbor_overlap > self.items_per_zone:
            raise ValueError("neighbor_overlap cannot exceed items_per_zone")
        return self


class PlannerSection(_Strict):
    tau: int = Field(default=2, ge=1)
    max_mbsfn: list[int] = Field(default=[256], min_length=1)
    constraint_i_mode: list[str] = Field(default=["neighbor_limit"], min_length=1)
    target_serve_fraction: float = Field(default=1.0, ge=0.0, le=1.0)
    fast_hill_climbing: bool = True
    mcf_exhaustive: bool = False

    @field_validator("max_mbsfn")
    @classmethod
    def _mbsfn(cls, v):
        if any(x < 1 for x in v):
            raise ValueError("max_mbsfn must be >= 1")
        return v

    @field_validator("constraint_i_mode")
    @classmethod
    def _mode(cls, v):
        bad = [m for m in v if m not in CONSTRAINT_I_MODES]
        if bad:
            raise ValueError(f"unknown mode {bad}; valid: {list(CONSTRAINT_I_MODES)}")
        return v


class DynamicSection(_Strict):
    horizon: int = Field(default=180, ge=1)
    period: int = Field(default=30, ge=1)
    sigma0_sq: list[float] = Field(default=[0.0], min_length=1)
    # per-item variance overrides (item id -> sigma0^2), applied at every sweep point
    item_sigma0_sq: dict[int, float] = Field(default_factory=dict)
    duration_range: tuple[int, int] = (10, 30)

    @field_validator("sigma0_sq")
    @classmethod
    def _sigma(cls, v):
        if any(x < 0 for x in v):
            raise ValueError("sigma0_sq must be >= 0")
        return v

    @field_validator("item_sigma0_sq")
    @classmethod
    def _item_sigma(cls, v):
        if any(x < 0 for x in v.values()):
            raise ValueError("item_sigma0_sq values must be >= 0")
        return v

    @model_validator(mode="after")
    def _timing(self):
        lo, hi = self.duration_range
        if not 1 <= lo <= hi:
            raise ValueError("duration_range must satisfy 1 <= lo <= hi")
        if hi > self.horizon:
            raise ValueError("duration_range upper bound exceeds horizon")
        if self.horizon % self.period:
            raise ValueError("period must divide horizon")
        return self


class ExperimentConfig(_Strict):
    name: str = "experiment"
    scenario: ScenarioSection = ScenarioSection()
    planners: list[str] = Field(default=["scf"], min_length=1)
    planner: PlannerSection = PlannerSection()
    seeds: list[int] = Field(default=[0], min_length=1)
    static: bool = True
    dynamic: DynamicSection | None = None

    @field_validator("planners")
    @classmethod
    def _planners(cls, v):
        bad = [p for p in v if p not in PLANNERS]
        if bad:
            raise ValueError(f"unknown planner {bad}; valid: {list(PLANNERS)}")
        return v

    @field_validator("seeds", mode="before")
    @classmethod
    def _seeds(cls, v):
        # {start, count} shorthand
        if isinstance(v, dict):
            return list(range(int(v.get("start", 0)), int(v.get("start", 0)) + int(v["count"])))
        return v


class ConfigError(ValueError):
    """Validation failure; ``errors`` lists (field path, message)."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = errors
        super().__init__("; ".join(f"{p}: {m}" for p, m in errors))


def parse_config(data) -> ExperimentConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([("<root>", "config must be a mapping")])
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        errs = [(".".join(str(x) for x in err["loc"]) or "<root>", err["msg"]) for err in e.errors()]
        raise ConfigError(errs) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError([("<file>", f"YAML syntax error: {e}")]) from None
    return parse_config(data)


def effective_config(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump(mode="json")
