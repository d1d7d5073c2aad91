"""
Subjective (S) field: perceived proximity risk from nearby vehicles, lane
markers and road boundaries, each a 0-1 scaled generalized-Gaussian kernel.
"""
import math
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from app.models.fields import SFieldParams, SFieldRisk
from app.models.trajectory import GapVector, SceneFrame
from app.services.geometry import gap_vector, nearest_lines
from app.utils.exceptions import FieldParameterError
from app.utils.validators import validate_finite

GAMMA_X_FLOOR = 0.05  # meters
BETA_FLOOR = 2.0


def ggd_kernel(distance, gamma, beta):
    """exp(-|d/gamma|^beta); accepts scalars or numpy arrays."""
    return np.exp(-np.abs(np.asarray(distance, dtype=float) / gamma) ** beta)


def _check_shape(gamma: float, beta: float, name: str) -> None:
    if not gamma > 0:
        raise FieldParameterError(f"gamma_{name} must be positive, got {gamma}")
    if not beta >= BETA_FLOOR:
        raise FieldParameterError(f"beta_{name} must be >= 2, got {beta}")


def params_at_velocity(params: SFieldParams, v: float) -> Tuple[float, float, float, float]:
    """(gamma_x, beta_x, gamma_y, beta_y) at ego speed v, cubics clamped to their constraints."""
    if v < 0:
        raise FieldParameterError(f"Velocity must be non-negative, got {v}")
    gamma_x = max(GAMMA_X_FLOOR, float(P.polyval(v, params.gamma_x_poly)))
    beta_x = max(BETA_FLOOR, float(P.polyval(v, params.beta_x_poly)))
    return gamma_x, beta_x, params.gamma_y, params.beta_y


def vehicle_proximity_risk(gap: GapVector, gamma_x: float, beta_x: float,
                           gamma_y: float, beta_y: float) -> float:
    validate_finite(gap.dx, gap.dy, name="gap")
    _check_shape(gamma_x, beta_x, "x")
    _check_shape(gamma_y, beta_y, "y")
    return math.exp(-abs(gap.dx / gamma_x) ** beta_x - abs(gap.dy / gamma_y) ** beta_y)


def lane_marker_risk(dy: float, gamma_l: float, beta_l: float) -> float:
    validate_finite(dy, name="marker distance")
    _check_shape(gamma_l, beta_l, "l")
    return math.exp(-abs(dy / gamma_l) ** beta_l)


def boundary_risk(dy: float, gamma_b: float, beta_b: float) -> float:
    validate_finite(dy, name="boundary distance")
    _check_shape(gamma_b, beta_b, "b")
    return math.exp(-abs(dy / gamma_b) ** beta_b)


def combine_risks(vehicle_risks, marker_risks=(), boundary_risks=(),
                  kappa_l: float = 0.0, kappa_b: float = 0.0) -> float:
    """1 - prod(1 - r_v) * prod(1 - kappa_l r_l) * prod(1 - kappa_b r_b)"""
    tolerance = 1.0
    for r in vehicle_risks:
        tolerance *= 1.0 - r
    for r in marker_risks:
        tolerance *= 1.0 - kappa_l * r
    for r in boundary_risks:
        tolerance *= 1.0 - kappa_b * r
    return 1.0 - tolerance


def aggregate_subjective(scene: SceneFrame, params: SFieldParams) -> SFieldRisk:
    """Aggregated S-field risk experienced by the scene's ego."""
    ego = scene.ego
    gamma_x, beta_x, gamma_y, beta_y = params_at_velocity(params, ego.speed)

    per_vehicle = [
        (other.vehicle_id, vehicle_proximity_risk(gap_vector(ego, other), gamma_x, beta_x, gamma_y, beta_y))
        for other in scene.neighbors
    ]

    marker_dys, boundary_dys = nearest_lines(ego.y, scene.lanes)
    per_marker = [lane_marker_risk(dy, params.gamma_l, params.beta_l) for dy in marker_dys]
    per_boundary = [boundary_risk(dy, params.gamma_b, params.beta_b) for dy in boundary_dys]

    aggregated = combine_risks(
        [r for _, r in per_vehicle], per_marker, per_boundary,
        kappa_l=params.kappa_l, kappa_b=params.kappa_b,
    )
    return SFieldRisk(
        per_vehicle=per_vehicle,
        per_marker=per_marker,
        per_boundary=per_boundary,
        aggregated=aggregated,
    )
