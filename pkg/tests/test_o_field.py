import math

import numpy as np
import pytest

from app.models.fields import CpaRegime, DStarRule, OFieldParams
from app.services.o_field import (
    aggregate_objective,
    cpa,
    cpa_risk,
    pair_objective_risk,
    spatial_factor,
    temporal_factor,
)
from app.utils.exceptions import FieldParameterError


def _numeric_cpa(D, V, horizon=100.0, step=1e-4):
    t = np.arange(0.0, horizon + step / 2, step)
    distance = np.hypot(D[0] + V[0] * t, D[1] + V[1] * t)
    k = int(np.argmin(distance))
    return t[k], distance[k]


def test_cpa_examples():
    head_on = cpa((20.0, 0.0), (-5.0, 0.0))
    assert head_on.regime == CpaRegime.APPROACHING
    assert head_on.t_m == pytest.approx(4.0)
    assert head_on.d_m == pytest.approx(0.0)

    offset = cpa((10.0, 5.0), (-5.0, 0.0))
    assert (offset.t_m, offset.d_m) == (pytest.approx(2.0), pytest.approx(5.0))
    t, d = _numeric_cpa((10.0, 5.0), (-5.0, 0.0))
    assert t == pytest.approx(2.0, abs=1e-2) and d == pytest.approx(5.0, abs=1e-2)

    receding = cpa((10.0, 0.0), (2.0, 0.0))
    assert receding.regime == CpaRegime.RECEDING
    assert math.isinf(receding.t_m) and math.isinf(receding.d_m)


def test_cpa_overlap_and_standstill():
    overlap = cpa((0.0, 0.0), (3.0, 1.0))
    assert overlap.regime == CpaRegime.OVERLAP
    assert (overlap.t_m, overlap.d_m) == (0.0, 0.0)
    assert cpa((5.0, 1.0), (0.0, 0.0)).regime == CpaRegime.RECEDING
    # perpendicular relative motion has D.V = 0 and is not approaching
    assert cpa((5.0, 0.0), (0.0, 2.0)).regime == CpaRegime.RECEDING


def _approaching_pairs(rng, n, d_max=200.0, v_max=50.0, v_min=1.0):
    """Random (D, V) with D.V < 0 inside the |D| <= d_max, v_min <= |V| <= v_max annulus."""
    pairs = []
    while len(pairs) < n:
        D = rng.uniform(-d_max, d_max, 2)
        V = rng.uniform(-v_max, v_max, 2)
        if np.hypot(*D) > d_max or not v_min <= np.hypot(*V) <= v_max or np.dot(D, V) >= 0:
            continue
        pairs.append((tuple(D), tuple(V)))
    return pairs


def _numeric_cpa_batch(D, V, step=1e-4, coarse_points=2001):
    """
    Sampled minimum of |D + V t| for many pairs at once. |D + V t| is convex
    in t, so a coarse scan over [0, |D|/|V|] brackets the minimum within one
    coarse step and a fine scan at `step` resolves it.
    """
    D, V = np.asarray(D), np.asarray(V)
    horizon = np.hypot(D[:, 0], D[:, 1]) / np.hypot(V[:, 0], V[:, 1])
    coarse = np.linspace(0.0, 1.0, coarse_points)[None, :] * horizon[:, None]
    distance = np.hypot(D[:, :1] + V[:, :1] * coarse, D[:, 1:] + V[:, 1:] * coarse)
    center = coarse[np.arange(len(D)), np.argmin(distance, axis=1)]
    half_width = horizon / (coarse_points - 1)

    offsets = np.arange(-int(np.ceil(half_width.max() / step)), int(np.ceil(half_width.max() / step)) + 1) * step
    fine = np.maximum(center[:, None] + offsets[None, :], 0.0)
    distance = np.hypot(D[:, :1] + V[:, :1] * fine, D[:, 1:] + V[:, 1:] * fine)
    k = np.argmin(distance, axis=1)
    rows = np.arange(len(D))
    return fine[rows, k], distance[rows, k]


def test_cpa_matches_numeric_minimization():
    pairs = _approaching_pairs(np.random.default_rng(2), 10_000)
    closed = np.array([(r.t_m, r.d_m) for r in (cpa(D, V) for D, V in pairs)])

    for chunk in np.array_split(np.arange(len(pairs)), 40):
        t, d = _numeric_cpa_batch([pairs[i][0] for i in chunk], [pairs[i][1] for i in chunk])
        np.testing.assert_allclose(closed[chunk, 0], t, rtol=0, atol=1e-2)
        np.testing.assert_allclose(closed[chunk, 1], d, rtol=0, atol=1e-2)


def test_cpa_speed_magnitude_invariance():
    for D, V in _approaching_pairs(np.random.default_rng(5), 1000):
        base = cpa(D, V)
        for c in (0.1, 2.0, 10.0):
            scaled = cpa(D, (c * V[0], c * V[1]))
            assert abs(scaled.d_m - base.d_m) <= 1e-9
            assert abs(scaled.t_m - base.t_m / c) <= 1e-9


def test_cpa_rejects_non_finite():
    with pytest.raises(FieldParameterError):
        cpa((float("inf"), 0.0), (1.0, 0.0))


def test_spatial_and_temporal_factors():
    assert spatial_factor(0.0, 2.0, 10.0) == 1.0
    assert spatial_factor(2.0, 2.0, 10.0) == pytest.approx(math.exp(-1))
    assert spatial_factor(math.inf, 2.0, 10.0) == 0.0
    assert temporal_factor(0.0, 7.5, 2.0) == 1.0
    assert temporal_factor(7.5, 7.5, 2.0) == pytest.approx(math.exp(-1))
    assert temporal_factor(math.inf, 7.5, 2.0) == 0.0


def test_pair_objective_risk_head_on(make_state):
    ego = make_state(1, x=100.0, vx=30.0, width=2.0)
    other = make_state(2, x=120.0, vx=25.0, width=2.0)
    expected = math.exp(-(4.0 / 7.5) ** 2)
    assert pair_objective_risk(ego, other) == pytest.approx(expected)
    assert pair_objective_risk(ego, other) == pytest.approx(0.7524, abs=1e-4)


def test_pair_objective_risk_branches(make_state):
    ego = make_state(1, x=0.0, vx=20.0)
    assert pair_objective_risk(ego, make_state(2, x=0.0, vx=25.0)) == 1.0
    assert pair_objective_risk(ego, make_state(2, x=30.0, vx=25.0)) == 0.0
    assert pair_objective_risk(ego, make_state(2, x=30.0, vx=20.0)) == 0.0


def test_pair_objective_risk_is_symmetric(make_state):
    rng = np.random.default_rng(8)
    for _ in range(40):
        a = make_state(1, x=rng.uniform(-50, 50), y=rng.uniform(-4, 4), vx=rng.uniform(15, 35),
                       vy=rng.uniform(-1, 1), width=rng.uniform(1.6, 2.6))
        b = make_state(2, x=rng.uniform(-50, 50), y=rng.uniform(-4, 4), vx=rng.uniform(15, 35),
                       vy=rng.uniform(-1, 1), width=rng.uniform(1.6, 2.6))
        assert pair_objective_risk(a, b) == pytest.approx(pair_objective_risk(b, a), abs=1e-12)


def test_fixed_collision_distance(make_state):
    params = OFieldParams(d_star_rule=DStarRule.FIXED, d_star=5.0)
    ego = make_state(1, x=0.0, y=0.0, vx=25.0)
    other = make_state(2, x=20.0, y=5.0, vx=20.0)
    # t_m = 4, d_m = 5 = d*
    expected = math.exp(-1.0) * math.exp(-(4.0 / 7.5) ** 2)
    assert pair_objective_risk(ego, other, params) == pytest.approx(expected)
    result = cpa((20.0, 5.0), (-5.0, 0.0))
    assert cpa_risk(result, 5.0, params) == pytest.approx(expected)


def test_aggregate_objective():
    assert aggregate_objective([]) == 0.0
    assert aggregate_objective([0.3, 1.0]) == 1.0
    assert aggregate_objective([0.5, 0.5]) == pytest.approx(0.75)
    assert aggregate_objective([0.2, 0.3]) >= aggregate_objective([0.2])
    with pytest.raises(FieldParameterError):
        aggregate_objective([1.2])
