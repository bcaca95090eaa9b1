import pytest

from resonant_tangency.asymptotics import ScalingCase
from resonant_tangency.errors import InsufficientData
from resonant_tangency.orbits import Stability
from resonant_tangency.scan import (
    DirectionRay,
    fit_limit,
    fit_variable,
    fits_from_results,
    locate_bifurcations,
    locate_each,
    locate_many,
    orbit_at,
    prediction_for,
    stability_window,
)


@pytest.mark.parametrize(
    "v, case",
    [
        ((1, 0, 0, 0), ScalingCase.CASE1_MU1),
        ((0, 1, 0, 0), ScalingCase.CASE2_MU2),
        ((0, 0, 1, 0), ScalingCase.CASE3_MU3),
        ((0, 0, 0, 1), ScalingCase.CASE4_MU4),
        ((1, 1, 0, 0), ScalingCase.GENERAL_TRANSVERSE),
        ((0, 1, 1, 0), ScalingCase.GENERAL_TANGENT),
        ((0, 0, 1, 1), ScalingCase.CASE3_MU3),
    ],
)
def test_direction_classification(params, v, case):
    assert DirectionRay.from_vector(v, params).case is case


def test_direction_validation(params):
    with pytest.raises(ValueError):
        DirectionRay.from_vector((0, 0, 0, 0), params)
    with pytest.raises(ValueError):
        DirectionRay.from_vector((1, 0, 0), params)
    with pytest.raises(ValueError):
        DirectionRay.axis(5, params)
    assert DirectionRay.axis(2).mu(0.5, (1, 1, 1, 1)) == (1.0, 1.5, 1.0, 1.0)


@pytest.fixture(scope="module")
def located():
    from resonant_tangency.map_core import ModelParams

    params = ModelParams()
    ray = DirectionRay.axis(3, params)
    return params, ray, locate_bifurcations(16, ray, params)


def test_located_values_zero_the_test_functions(located):
    params, ray, (sn, pd) = located
    assert abs(sn.indicators_at.g_sn) <= 1e-8
    assert abs(pd.indicators_at.g_pd) <= 1e-8
    assert sn.epsilon > 0 > pd.epsilon
    pred = prediction_for(16, ray, params)
    # k = 16 is still far from the limit, especially for PD
    assert sn.scaled_value == pytest.approx(pred.sn_limit, rel=0.2)
    assert pd.scaled_value == pytest.approx(pred.pd_limit, rel=0.5)
    assert sn.strict and pd.strict


def test_fold_brackets_orbit_existence(located):
    params, ray, (sn, _) = located
    inside = orbit_at(16, sn.epsilon * (1 - 1e-4), ray, params)
    assert inside.stability is Stability.STABLE
    assert 0 < inside.indicators.g_sn < 0.05  # square-root approach to the fold
    with pytest.raises(Exception):
        orbit_at(16, sn.epsilon * (1 + 1e-3), ray, params, sn.point)


def test_period_doubling_sign_change(located):
    params, ray, (_, pd) = located
    before = orbit_at(16, pd.epsilon * (1 - 1e-4), ray, params, pd.point)
    after = orbit_at(16, pd.epsilon * (1 + 1e-4), ray, params, pd.point)
    assert before.indicators.g_pd > 0 > after.indicators.g_pd


def test_stability_window(located):
    params, ray, _ = located
    inside, outside = stability_window(16, ray, params)
    assert len(inside) == 10
    assert all(s is Stability.STABLE for _, s in inside)
    assert all(s in (None, Stability.UNSTABLE) for _, s in outside)


def test_fit_recovers_synthetic_limits():
    a = 0.8
    ks = range(10, 23)
    seq = [(k, 0.7 - 0.4 * fit_variable(None, k, a) + 0.2 * fit_variable(None, k, a) ** 2) for k in ks]
    lim, slope, rms = fit_limit(ScalingCase.CASE3_MU3, seq, a)
    assert lim == pytest.approx(0.7, abs=1e-12)
    assert slope == pytest.approx(-0.4, abs=1e-10)
    assert rms < 1e-12
    lin = [(k, 1.5 + 2.0 * k * a**k) for k in ks]
    assert fit_limit(ScalingCase.CASE1_MU1, lin, a, degree=1)[0] == pytest.approx(1.5, abs=1e-12)


def test_failures_are_reported_not_dropped(params):
    found = locate_each(9, DirectionRay.axis(1, params), params)
    assert set(found) == {"SN", "PD"}
    for item in found.values():
        assert isinstance(item, str) or not item.strict or item.strict


def test_insufficient_points(params):
    ray = DirectionRay.axis(3, params)
    results = locate_many(range(14, 17), ray, params)
    with pytest.raises(InsufficientData):
        fits_from_results(results, ray, params)


def test_parallel_matches_serial(params):
    ray = DirectionRay.axis(4, params)
    a = locate_many(range(14, 17), ray, params, jobs=1)
    b = locate_many(range(14, 17), ray, params, jobs=2)
    for (ka, fa), (kb, fb) in zip(a, b):
        assert ka == kb
        for kind in ("SN", "PD"):
            assert fa[kind].epsilon == fb[kind].epsilon
