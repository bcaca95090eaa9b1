import math

import numpy as np
import pytest

from resonant_tangency import _kernels
from resonant_tangency.errors import EscapedDomain, NoConvergence, NotSingleRound
from resonant_tangency.map_core import ModelParams
from resonant_tangency.orbits import (
    Stability,
    StabilityIndicators,
    classify_stability,
    find_periodic_orbit,
    iterate_with_jacobian,
    orbit_from_point,
    single_round_ok,
)


def attractor_by_iteration(start, n_period, params, n_steps=20000):
    """Run forward and return the last period of the trajectory (no Newton involved)."""
    traj = _kernels.trajectory(start[0], start[1], n_steps, params.packed)
    cycle = traj[-n_period:]
    drift = np.max(np.abs(traj[-1] - traj[-1 - n_period]))
    return cycle, drift


def test_k10_orbit_matches_forward_iteration(params):
    orb = find_periodic_orbit(10, params)
    a10 = params.alpha**10
    found = []
    for sx in np.linspace(0.8, 1.6, 5):
        for sy in np.linspace(0.95, 1.05, 5):
            cycle, drift = attractor_by_iteration((sx * a10, sy), 11, params)
            if drift < 1e-12 and single_round_ok(cycle, params):
                found.append(cycle[np.argmax(cycle[:, 1])])
    assert found
    for top in found:
        np.testing.assert_allclose(orb.start, top, atol=1e-10)
    assert orb.residual <= 1e-10
    assert orb.stability is Stability.STABLE
    assert abs(orb.start[1] - 1.0) <= 0.05
    # x / alpha^k carries a first-order k a1 alpha^k correction at moderate k
    assert 1.2 < orb.start[0] / params.alpha**10 < 1.45


def test_orbit_height_approaches_ansatz(params):
    ratios = [find_periodic_orbit(k, params).start[0] / params.alpha**k for k in (15, 22, 30)]
    assert abs(ratios[-1] - 1.0) < 0.02
    assert ratios[0] > ratios[1] > ratios[2]


def test_orbit_structure(params):
    k = 12
    orb = find_periodic_orbit(k, params)
    assert orb.points.shape == (k + 1, 2)
    assert orb.period == 13
    assert orb.points[0, 1] >= params.h1
    assert np.all(orb.points[1:, 1] <= params.h0)
    # after reinjection the orbit climbs the y-axis by factors of 1/alpha
    ys = orb.points[1:, 1]
    np.testing.assert_allclose(ys[1:] / ys[:-1], 1.0 / params.alpha, rtol=0.05)
    assert single_round_ok(orb.points, params)
    assert orb.strict


def test_monodromy_shift_invariance(params):
    orb = find_periodic_orbit(9, params)
    n = orb.period
    for i in range(n):
        _, mono = iterate_with_jacobian(orb.points[i], n, params)
        assert np.trace(mono) == pytest.approx(orb.trace, abs=1e-9)
        assert np.linalg.det(mono) == pytest.approx(orb.det, abs=1e-9)


def test_fixed_point_k0(params):
    orb = find_periodic_orbit(0, params)
    np.testing.assert_allclose(orb.start, [1.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(np.abs(orb.multipliers), math.sqrt(0.5), atol=1e-9)
    assert orb.stability is Stability.STABLE


def test_multipliers_inside_unit_circle(params):
    for k in (5, 8, 14, 20):
        orb = find_periodic_orbit(k, params)
        assert max(abs(z) for z in orb.multipliers) < 1.0
        assert orb.det == pytest.approx(np.prod(orb.multipliers).real, rel=1e-9)


def test_low_periods_are_not_single_round_with_stated_constants(params):
    with pytest.raises((NotSingleRound, NoConvergence)):
        find_periodic_orbit(2, params)


def test_low_periods_exist_with_flipped_resonance_sign():
    prm = ModelParams(a10=-0.2)
    for k in range(1, 6):
        assert find_periodic_orbit(k, prm).stability is Stability.STABLE


def test_k_cap(params):
    with pytest.raises(ValueError):
        find_periodic_orbit(31, params)
    assert find_periodic_orbit(31, params, k_cap=40).residual < 1e-10


def test_certificate_modes(params):
    with pytest.raises(ValueError):
        find_periodic_orbit(5, params, certificate="loose")
    pts = np.array([[0.1, 1.0], [0.05, 0.5], [0.04, 0.9]])  # second visit in the strip
    assert not single_round_ok(pts, params)
    assert not single_round_ok(pts, params, strict=False)
    pts[2, 1] = 0.7
    assert single_round_ok(pts, params) and single_round_ok(pts, params, strict=False)
    pts[0, 1] = 0.9  # the only excursion sits in the strip
    assert not single_round_ok(pts, params) and single_round_ok(pts, params, strict=False)


def test_escape_detection(params):
    with pytest.raises(EscapedDomain):
        iterate_with_jacobian((0.0, -0.5), 60, params)


@pytest.mark.parametrize(
    "tau, delta, expected",
    [
        (0.0, 0.5, Stability.STABLE),
        (1.5, 0.5, Stability.SADDLE_NODE_CRITICAL),
        (-1.5, 0.5, Stability.PERIOD_DOUBLING_CRITICAL),
        (2.0, 0.5, Stability.UNSTABLE),
        (0.0, 1.2, Stability.UNSTABLE),
        (-1.7, 0.5, Stability.UNSTABLE),
    ],
)
def test_classify_stability(tau, delta, expected):
    assert classify_stability(StabilityIndicators(tau, delta)) is expected


def test_indicator_signs():
    ind = StabilityIndicators(0.3, 0.4)
    assert ind.g_sn == pytest.approx(1.1)
    assert ind.g_pd == pytest.approx(1.7)


def test_orbit_from_point_rotates_to_reinjection(params):
    orb = find_periodic_orbit(7, params)
    again = orbit_from_point(orb.points[3], 7, params)
    np.testing.assert_allclose(again.points, orb.points, atol=1e-12)
