from pydantic import AliasChoices, BaseModel, ConfigDict, Field, model_validator
from typing import List, Optional, Tuple
from enum import Enum

# Published calibration of the S-field on highD, coefficients in increasing power order
PUBLISHED_GAMMA_X_POLY = [1.2925, 1.0621, -3.7051e-2, 5.1053e-4]
PUBLISHED_BETA_X_POLY = [3.2589, 9.6673e-3, -1.4834e-3, 2.2214e-5]


class SFieldParams(BaseModel):
    """Subjective-field parameters"""
    model_config = ConfigDict(frozen=True)

    gamma_x_poly: List[float] = Field(default_factory=lambda: list(PUBLISHED_GAMMA_X_POLY), min_length=1)
    beta_x_poly: List[float] = Field(default_factory=lambda: list(PUBLISHED_BETA_X_POLY), min_length=1)
    gamma_y: float = Field(1.4310, gt=0)
    beta_y: float = Field(4.9956, ge=2)
    gamma_l: float = Field(1.18, gt=0)
    beta_l: float = Field(2.46, ge=2)
    gamma_b: float = Field(1.64, gt=0)
    beta_b: float = Field(5.17, ge=2)
    kappa_l: float = Field(0.25, ge=0, le=1)
    kappa_b: float = Field(0.25, ge=0, le=1)

    def without_lane_terms(self) -> "SFieldParams":
        """Vehicle-only variant used by the case-study analyses"""
        return self.model_copy(update={"kappa_l": 0.0, "kappa_b": 0.0})


class SFieldRisk(BaseModel):
    model_config = ConfigDict(frozen=True)

    per_vehicle: List[Tuple[int, float]] = Field(default_factory=list)
    per_marker: List[float] = Field(default_factory=list)
    per_boundary: List[float] = Field(default_factory=list)
    aggregated: float = 0.0


class DStarRule(str, Enum):
    HALF_WIDTH_SUM = "half_width_sum"
    FIXED = "fixed"


class OFieldParams(BaseModel):
    """
    Objective-field parameters. `beta_p`, `t_star` and a fixed `d_star` are
    also accepted under their calibration-table names `beta_d`, `gamma_t`
    and `gamma_d`.
    """
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    beta_p: float = Field(10.0, ge=1, validation_alias=AliasChoices("beta_p", "beta_d"))
    beta_t: float = Field(2.0, ge=1)
    t_star: float = Field(7.5, gt=0, validation_alias=AliasChoices("t_star", "gamma_t"))
    d_star_rule: DStarRule = DStarRule.HALF_WIDTH_SUM
    d_star: Optional[float] = Field(None, gt=0, validation_alias=AliasChoices("d_star", "gamma_d"))

    @model_validator(mode="after")
    def _check_rule(self):
        if self.d_star_rule == DStarRule.FIXED and self.d_star is None:
            raise ValueError("d_star_rule 'fixed' requires a positive d_star")
        return self

    def collision_distance(self, width_ego: float, width_other: float) -> float:
        if self.d_star_rule == DStarRule.FIXED:
            return float(self.d_star)
        return 0.5 * (width_ego + width_other)


class FieldParameterSet(BaseModel):
    """Contents of a parameter file"""
    s_field: SFieldParams = Field(default_factory=SFieldParams)
    o_field: OFieldParams = Field(default_factory=OFieldParams)


class CpaRegime(str, Enum):
    OVERLAP = "overlap"
    APPROACHING = "approaching"
    RECEDING = "receding"


class CpaResult(BaseModel):
    """Closest point of approach under constant relative velocity"""
    model_config = ConfigDict(frozen=True)

    t_m: float
    d_m: float
    regime: CpaRegime
