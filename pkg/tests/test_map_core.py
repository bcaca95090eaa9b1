import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonant_tangency import _kernels
from resonant_tangency.map_core import (
    ModelParams,
    blend_weight,
    eigenvalue_product,
    extract_normal_form,
    f_apply,
    f_apply_many,
    f_jacobian,
    f_param_jacobian,
    n_eig,
    n_eig_fd,
    u0_apply,
    u1_apply,
)

from conftest import fd_jacobian

coord = st.floats(-1.5, 1.5, allow_nan=False)
small_mu = st.tuples(*[st.floats(-0.05, 0.05, allow_nan=False)] * 4)


def reference_f(p, prm: ModelParams):
    """Blended map written straight from the definitions, independent of the kernels."""
    x, y = p
    h0, h1 = prm.h0, prm.h1
    if y <= h0:
        return u0_apply(p, prm)
    if y >= h1:
        return u1_apply(p, prm)
    z = (y - h0) / (h1 - h0)
    r = 3 * z**2 - 2 * z**3
    return (1 - r) * u0_apply(p, prm) + r * u1_apply(p, prm)


def test_params_validation():
    with pytest.raises(ValueError):
        ModelParams(alpha=1.2)
    with pytest.raises(ValueError):
        ModelParams(d50=0.0)
    with pytest.raises(ValueError):
        ModelParams(mu=(0.0, 0.0))
    p = ModelParams()
    assert p.h0 == pytest.approx(2.6 / 3)
    assert p.h1 == pytest.approx(2.8 / 3)
    with pytest.raises(ValueError):
        p.packed[0] = 0.5


def test_blend_weight_endpoints():
    assert blend_weight(0.0) == 0.0
    assert blend_weight(1.0) == 1.0
    assert blend_weight(0.5) == pytest.approx(0.5)


def test_homoclinic_point_maps_to_tangency_point(params):
    np.testing.assert_array_equal(f_apply((0.0, 1.0), params), [1.0, 0.0])


def test_fixed_point_multipliers(params):
    np.testing.assert_allclose(f_apply((1.0, 1.0), params), [1.0, 1.0], atol=0)
    jac = f_jacobian((1.0, 1.0), params)
    np.testing.assert_allclose(jac, [[0.0, -0.5], [1.0, 0.0]], atol=1e-15)
    ev = np.linalg.eigvals(jac)
    np.testing.assert_allclose(np.abs(ev), math.sqrt(0.5), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(coord, coord, small_mu)
def test_kernel_matches_reference(x, y, mu):
    prm = ModelParams(mu=mu)
    np.testing.assert_allclose(f_apply((x, y), prm), reference_f((x, y), prm), rtol=1e-13, atol=1e-14)


@settings(max_examples=200, deadline=None)
@given(coord, coord, small_mu)
def test_jacobian_matches_finite_differences(x, y, mu):
    prm = ModelParams(mu=mu)
    fd = fd_jacobian(lambda p: reference_f(p, prm), (x, y), h=1e-7)
    np.testing.assert_allclose(f_jacobian((x, y), prm), fd, atol=2e-6)


@settings(max_examples=100, deadline=None)
@given(coord, st.floats(0.5, 1.3), small_mu)
def test_param_jacobian_matches_finite_differences(x, y, mu):
    prm = ModelParams(mu=mu)
    fd = fd_jacobian(lambda m: reference_f((x, y), prm.with_mu(m)), np.array(mu), h=1e-7)
    np.testing.assert_allclose(f_param_jacobian((x, y), prm), fd, atol=2e-6)


@pytest.mark.parametrize("seam", ["h0", "h1"])
def test_seams_are_c1(params, seam):
    h = getattr(params, seam)

    def jump(x, d):
        lo, hi = np.array([x, h - d]), np.array([x, h + d])
        return (np.max(np.abs(f_apply(lo, params) - f_apply(hi, params))),
                np.max(np.abs(f_jacobian(lo, params) - f_jacobian(hi, params))))

    for x in np.linspace(-0.5, 1.2, 9):
        v1, j1 = jump(x, 1e-6)
        v2, j2 = jump(x, 1e-8)
        assert v2 < 1e-7
        # the derivative jump closes linearly with the offset
        assert j2 <= 0.02 * j1 + 1e-12


@settings(max_examples=200, deadline=None)
@given(coord, coord)
def test_saddle_map_determinant_identity(x, y):
    prm = ModelParams()
    a = prm.a10
    fd = fd_jacobian(lambda p: u0_apply(p, prm), (x, y), h=1e-6)
    assert np.linalg.det(fd) == pytest.approx(1.0 - 3.0 * a * a * (x * y) ** 2, abs=1e-7)
    if y <= prm.h0:
        assert np.linalg.det(f_jacobian((x, y), prm)) == pytest.approx(1.0 - 3.0 * a * a * (x * y) ** 2, abs=1e-12)


def test_axes_invariant_under_saddle_map(params):
    for t in np.linspace(-0.8, 0.8, 7):
        assert f_apply((t, 0.0), params)[1] == 0.0
        assert f_apply((0.0, t), params)[0] == 0.0


def test_normal_form_against_taylor_data():
    prm = ModelParams(mu=(0.01, -0.02, 0.03, 0.04))
    nf = extract_normal_form(prm)
    # derivatives of U1 at (0, 1) by finite differences
    jac1 = fd_jacobian(lambda p: u1_apply(p, prm), (0.0, 1.0))
    u1 = u1_apply((0.0, 1.0), prm)
    assert nf.c0 == pytest.approx(u1[0])
    assert nf.d0 == pytest.approx(u1[1])
    assert nf.c1 == pytest.approx(jac1[0, 0], abs=1e-8)
    assert nf.c2 == pytest.approx(jac1[0, 1])
    assert nf.d1 == pytest.approx(jac1[1, 0])
    assert nf.d2 == pytest.approx(jac1[1, 1], abs=1e-8)
    h = 1e-4
    d5 = (u1_apply((0, 1 + h), prm)[1] - 2 * u1[1] + u1_apply((0, 1 - h), prm)[1]) / (2 * h * h)
    assert nf.d5 == pytest.approx(d5, rel=1e-6)
    jac0 = f_jacobian((0.0, 0.0), prm)
    assert nf.lam == pytest.approx(jac0[0, 0])
    assert nf.sigma == pytest.approx(jac0[1, 1])
    assert nf.a1 + nf.b1 == pytest.approx(0.04)


def test_n_eig_closed_form_matches_numerics(params):
    np.testing.assert_allclose(n_eig(params), n_eig_fd(params), atol=1e-8)
    assert eigenvalue_product(params) == pytest.approx(1.0)


def test_apply_many_matches_single(params):
    rng = np.random.default_rng(3)
    pts = rng.uniform(-0.2, 1.3, size=(50, 2))
    many = f_apply_many(pts, params)
    for p, q in zip(pts, many):
        np.testing.assert_array_equal(f_apply(p, params), q)


@pytest.mark.skipif(_kernels.NB is None, reason="numba not installed")
def test_compiled_and_python_kernels_agree(params):
    v = np.array([0.3, -0.2, 0.1, 0.5])
    for x, y in [(0.1, 0.2), (0.4, 0.9), (0.2, 0.92), (0.9, 1.1)]:
        np.testing.assert_allclose(_kernels.PY.step(x, y, params.packed, v), _kernels.NB.step(x, y, params.packed, v),
                                   rtol=1e-15, atol=1e-15)
    a = _kernels.PY.newton(0.2, 1.0, 8, params.packed, 1e-12, 50, 10, 1e3)
    b = _kernels.NB.newton(0.2, 1.0, 8, params.packed, 1e-12, 50, 10, 1e3)
    np.testing.assert_allclose(a[:2], b[:2], rtol=1e-12)
    assert a[4] == b[4]


def test_env_flag_selects_python_backend():
    code = "from resonant_tangency import backend; print(backend())"
    env = dict(os.environ, RESONANT_TANGENCY_NUMBA="0")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
