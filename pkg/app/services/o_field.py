"""
Objective (O) field: collision probability from relative kinematics under
constant velocities, as the product of a spatial factor on the closest
approach distance and a temporal factor on the time to reach it.
"""
import math
from typing import Iterable, Tuple

from app.models.fields import CpaRegime, CpaResult, OFieldParams
from app.models.trajectory import VehicleState
from app.services.geometry import center_vector
from app.utils.validators import validate_finite, validate_probabilities

INF = math.inf


def cpa(D: Tuple[float, float], V: Tuple[float, float]) -> CpaResult:
    """Closest point of approach for relative position D and relative velocity V."""
    dx, dy = D
    vx, vy = V
    validate_finite(dx, dy, vx, vy, name="relative kinematics")

    if dx == 0.0 and dy == 0.0:
        return CpaResult(t_m=0.0, d_m=0.0, regime=CpaRegime.OVERLAP)

    closing = dx * vx + dy * vy
    if closing < 0.0:
        vv = vx * vx + vy * vy
        t_m = -closing / vv
        d_m = abs(dx * vy - dy * vx) / math.sqrt(vv)
        return CpaResult(t_m=t_m, d_m=d_m, regime=CpaRegime.APPROACHING)

    # includes |V| = 0, where D.V = 0 fails the strict approach test
    return CpaResult(t_m=INF, d_m=INF, regime=CpaRegime.RECEDING)


def spatial_factor(d_m: float, d_star: float, beta_p: float) -> float:
    if math.isinf(d_m):
        return 0.0
    return math.exp(-((d_m / d_star) ** beta_p))


def temporal_factor(t_m: float, t_star: float, beta_t: float) -> float:
    if math.isinf(t_m):
        return 0.0
    return math.exp(-((t_m / t_star) ** beta_t))


def cpa_risk(result: CpaResult, d_star: float, params: OFieldParams) -> float:
    if result.regime == CpaRegime.OVERLAP:
        return 1.0
    if result.regime == CpaRegime.RECEDING:
        return 0.0
    return spatial_factor(result.d_m, d_star, params.beta_p) * temporal_factor(result.t_m, params.t_star, params.beta_t)


def pair_cpa(ego: VehicleState, other: VehicleState) -> CpaResult:
    c = center_vector(ego, other)
    return cpa((c.dx, c.dy), (c.dvx, c.dvy))


def pair_objective_risk(ego: VehicleState, other: VehicleState, params: OFieldParams = None) -> float:
    params = params or OFieldParams()
    d_star = params.collision_distance(ego.width, other.width)
    return cpa_risk(pair_cpa(ego, other), d_star, params)


def aggregate_objective(pair_risks: Iterable[float]) -> float:
    """Probability of a collision with any neighbor: 1 - prod(1 - r)."""
    risks = list(pair_risks)
    validate_probabilities(risks)
    survival = 1.0
    for r in risks:
        survival *= 1.0 - r
    return 1.0 - survival
