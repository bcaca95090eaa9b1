"""The four-parameter C^1 map family with a globally resonant tangency at mu = 0.

Below the strip ``h0 < y < h1`` the map is the local saddle map ``U0``; above
it the reinjection map ``U1``; inside, a C^1 convex blend of the two.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels

DEFAULT_ALPHA = 0.8
DEFAULT_A10 = 0.2
DEFAULT_C20 = -0.5
DEFAULT_D50 = 1.0


@dataclass(frozen=True)
class ModelParams:
    """Constants of the family plus the unfolding parameters ``mu``."""

    alpha: float = DEFAULT_ALPHA
    a10: float = DEFAULT_A10
    c20: float = DEFAULT_C20
    d50: float = DEFAULT_D50
    mu: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    packed: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        if len(mu) != 4:
            raise ValueError(f"mu must have 4 components, got {len(mu)}")
        object.__setattr__(self, "mu", mu)
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.d50 == 0.0:
            raise ValueError("d50 must be nonzero")
        values = np.array([self.alpha, self.a10, self.c20, self.d50, *mu], dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("parameters must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "packed", values)

    @property
    def h0(self) -> float:
        return (2.0 * self.alpha + 1.0) / 3.0

    @property
    def h1(self) -> float:
        return (self.alpha + 2.0) / 3.0

    def with_mu(self, mu) -> "ModelParams":
        return replace(self, mu=tuple(mu))


@dataclass(frozen=True)
class NormalFormCoeffs:
    """Taylor data of the reinjection map at (0, 1) and of the saddle map.

    ``chi`` is the sign of ``d1`` at mu = 0 and ``chi_eig`` the sign of the
    eigenvalue product; both are exact integers.
    """

    c0: float
    c1: float
    c2: float
    d0: float
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    a1: float
    b1: float
    lam: float
    sigma: float
    chi: int
    chi_eig: int
    m: int
    alpha: float


def blend_weight(z):
    """The smoothstep ``3 z^2 - 2 z^3``; accepts scalars or arrays."""
    return 3.0 * z * z - 2.0 * z * z * z


def u0_apply(p, params: ModelParams) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    _, mu2, _, mu4 = params.mu
    a = params.alpha
    xy = x * y
    return np.array(
        [(a + mu2) * x * (1.0 + (params.a10 + mu4) * xy), (1.0 / a) * y * (1.0 - params.a10 * xy)]
    )


def u1_apply(p, params: ModelParams) -> np.ndarray:
    x, y = float(p[0]), float(p[1])
    mu1, _, mu3, _ = params.mu
    return np.array(
        [1.0 + params.c20 * (y - 1.0), mu1 + (1.0 + mu3) * x + params.d50 * (y - 1.0) ** 2]
    )


def f_apply(p, params: ModelParams) -> np.ndarray:
    """One iterate of the blended map at a single point."""
    res = _kernels.step(float(p[0]), float(p[1]), params.packed, _ZERO4)
    return np.array([res[0], res[1]])


def f_jacobian(p, params: ModelParams) -> np.ndarray:
    """Exact 2x2 derivative of :func:`f_apply`."""
    res = _kernels.step(float(p[0]), float(p[1]), params.packed, _ZERO4)
    return np.array([[res[2], res[3]], [res[4], res[5]]])


def f_param_jacobian(p, params: ModelParams) -> np.ndarray:
    """The 2x4 derivative of f with respect to ``mu``."""
    out = np.empty((2, 4))
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1.0
        res = _kernels.step(float(p[0]), float(p[1]), params.packed, e)
        out[:, i] = res[6], res[7]
    return out


def f_apply_many(points, params: ModelParams) -> np.ndarray:
    """Apply f to an ``(n, 2)`` array of points."""
    pts = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    xs, ys = _kernels.map_many(pts[:, 0].copy(), pts[:, 1].copy(), params.packed)
    return np.column_stack([xs, ys])


def extract_normal_form(params: ModelParams) -> NormalFormCoeffs:
    """Closed-form normal-form coefficients of the family at ``params.mu``."""
    mu1, mu2, mu3, mu4 = params.mu
    return NormalFormCoeffs(
        c0=1.0,
        c1=0.0,
        c2=params.c20,
        d0=mu1,
        d1=1.0 + mu3,
        d2=0.0,
        d3=0.0,
        d4=0.0,
        d5=params.d50,
        a1=params.a10 + mu4,
        b1=-params.a10,
        lam=params.alpha + mu2,
        sigma=1.0 / params.alpha,
        chi=1,
        chi_eig=1,
        m=1,
        alpha=params.alpha,
    )


def eigenvalue_product(params: ModelParams) -> float:
    nf = extract_normal_form(params)
    return nf.lam * nf.sigma


def n_eig(params: ModelParams) -> np.ndarray:
    """Gradient of the eigenvalue product at ``mu`` (closed form)."""
    return np.array([0.0, 1.0 / params.alpha, 0.0, 0.0])


def n_eig_fd(params: ModelParams, h: float = 1e-6) -> np.ndarray:
    """Gradient of the eigenvalue product of ``D f(0, 0)`` by central differences.

    Works from the numerically computed eigenvalues, so it also covers
    perturbed constants where the closed form might not be trusted.
    """
    grad = np.zeros(4)
    base = np.array(params.mu)
    for i in range(4):
        vals = []
        for sgn in (1.0, -1.0):
            mu = base.copy()
            mu[i] += sgn * h
            ev = np.linalg.eigvals(f_jacobian((0.0, 0.0), params.with_mu(mu)))
            vals.append(float(np.real(np.prod(ev))))
        grad[i] = (vals[0] - vals[1]) / (2.0 * h)
    return grad


def n_tang(params: ModelParams) -> np.ndarray:
    """Gradient of ``d0`` with respect to ``mu``; ``d0 = mu1`` for this family."""
    return np.array([1.0, 0.0, 0.0, 0.0])


def resonance_gradient(params: ModelParams) -> np.ndarray:
    """Gradient of ``a1 + b1`` with respect to ``mu``."""
    return np.array([0.0, 0.0, 0.0, 1.0])


def d1_gradient(params: ModelParams) -> np.ndarray:
    """Gradient of ``d1`` with respect to ``mu``."""
    return np.array([0.0, 0.0, 1.0, 0.0])


_ZERO4 = np.zeros(4)
