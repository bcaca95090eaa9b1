"""Single-round periodic orbits as fixed points of the (k+1)-fold map."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .asymptotics import seed_point
from .errors import EscapedDomain, NoConvergence, NotSingleRound
from .map_core import ModelParams

logger = logging.getLogger(__name__)

K_CAP = 30
DEFAULT_BOUND = 1e3
_ZERO4 = np.zeros(4)


class Stability(str, enum.Enum):
    STABLE = "stable"
    SADDLE_NODE_CRITICAL = "saddle_node_critical"
    PERIOD_DOUBLING_CRITICAL = "period_doubling_critical"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityIndicators:
    tau: float
    delta: float

    @property
    def g_sn(self) -> float:
        return self.delta - self.tau + 1.0

    @property
    def g_pd(self) -> float:
        return self.delta + self.tau + 1.0


def classify_stability(ind: StabilityIndicators, tol: float = 1e-9) -> Stability:
    """Classify by the 2x2 multiplier criterion ``|tau| - 1 < delta < 1``."""
    if abs(ind.g_sn) <= tol:
        return Stability.SADDLE_NODE_CRITICAL
    if abs(ind.g_pd) <= tol:
        return Stability.PERIOD_DOUBLING_CRITICAL
    if ind.delta - (abs(ind.tau) - 1.0) > tol and 1.0 - ind.delta > tol:
        return Stability.STABLE
    return Stability.UNSTABLE


@dataclass(frozen=True)
class PeriodicOrbit:
    k: int
    m: int
    points: np.ndarray
    trace: float
    det: float
    multipliers: tuple[complex, complex]
    residual: float
    stability: Stability
    iterations: int = 0
    strict: bool = True  # no point inside the blend strip

    @property
    def period(self) -> int:
        return self.k + self.m

    @property
    def indicators(self) -> StabilityIndicators:
        return StabilityIndicators(self.trace, self.det)

    @property
    def start(self) -> np.ndarray:
        return self.points[0]


def iterate_with_jacobian(p, n: int, params: ModelParams, bound: float = DEFAULT_BOUND):
    """Return ``f^n(p)`` and the product of the step Jacobians along the way."""
    if n < 1:
        raise ValueError("n must be at least 1")
    x, y, m00, m01, m10, m11, _, _, ok = _kernels.iterate(
        float(p[0]), float(p[1]), int(n), params.packed, _ZERO4, float(bound)
    )
    if not ok:
        raise EscapedDomain(f"iterate left the box |x|,|y| <= {bound}")
    return np.array([x, y]), np.array([[m00, m01], [m10, m11]])


def iterate_full(p, n: int, params: ModelParams, v=None, bound: float = DEFAULT_BOUND):
    """Like :func:`iterate_with_jacobian` but also returns d f^n / d eps along ``v``."""
    vv = _ZERO4 if v is None else np.asarray(v, dtype=float)
    x, y, m00, m01, m10, m11, dx, dy, ok = _kernels.iterate(
        float(p[0]), float(p[1]), int(n), params.packed, vv, float(bound)
    )
    if not ok:
        raise EscapedDomain(f"iterate left the box |x|,|y| <= {bound}")
    return np.array([x, y]), np.array([[m00, m01], [m10, m11]]), np.array([dx, dy])


CERTIFICATES = ("relaxed", "strict")


def single_round_ok(points: np.ndarray, params: ModelParams, strict: bool = True) -> bool:
    """Single-round test on one period of points.

    Strict: exactly one point with ``y >= h1`` and none inside the blend
    strip ``(h0, h1)``.  Relaxed: exactly one point with ``y > h0``, i.e. one
    excursion per period, which may sit inside the strip.
    """
    y = points[:, 1]
    if not strict:
        return int(np.count_nonzero(y > params.h0)) == 1
    n_upper = int(np.count_nonzero(y >= params.h1))
    n_strip = int(np.count_nonzero((y > params.h0) & (y < params.h1)))
    return n_upper == 1 and n_strip == 0


def orbit_from_point(p, k: int, params: ModelParams, m: int = 1, iterations: int = 0,
                     tol: float = 1e-9, bound: float = DEFAULT_BOUND) -> PeriodicOrbit:
    """Assemble a :class:`PeriodicOrbit` from one converged point.

    The points are rotated so that the highest one (the visit to the
    reinjection region) comes first.
    """
    n = k + m
    traj = _kernels.trajectory(float(p[0]), float(p[1]), n, params.packed)
    pts = traj[:n]
    residual = float(np.max(np.abs(traj[n] - traj[0])))
    pts = np.roll(pts, -int(np.argmax(pts[:, 1])), axis=0)
    _, mono = iterate_with_jacobian(pts[0], n, params, bound)
    tau = float(np.trace(mono))
    delta = float(np.linalg.det(mono))
    ev = np.linalg.eigvals(mono).astype(complex)
    ev = tuple(sorted(ev, key=lambda z: (abs(z), z.real)))
    ind = StabilityIndicators(tau, delta)
    return PeriodicOrbit(k, m, pts, tau, delta, ev, residual, classify_stability(ind, tol), iterations,
                         single_round_ok(pts, params, strict=True))


def _solve(seed, n, params, tol, max_iter, bound):
    x0, y0 = float(seed[0]), float(seed[1])
    # plain Newton first, then one damped retry
    for halvings in (0, 10):
        x, y, res, its, status = _kernels.newton(x0, y0, n, params.packed, tol, max_iter, halvings, bound)
        if status == 0:
            return np.array([x, y]), its
    return None, its


def find_periodic_orbit(
    k: int,
    params: ModelParams,
    seed=None,
    *,
    tol_newton: float = 1e-12,
    max_iter: int = 50,
    k_cap: int = K_CAP,
    bound: float = DEFAULT_BOUND,
    fallback: bool = True,
    certificate: str = "strict",
) -> PeriodicOrbit:
    """Find the single-round period-(k+1) orbit through a point near ``(alpha^k, 1)``.

    Seeds are tried in order: ``seed`` if given, then (when ``fallback`` or
    when no seed is given) the asymptotic seed, then (when ``fallback``) the
    previous period's orbit point shifted by alpha.  ``k = 0`` returns the
    fixed point near (1, 1).  ``certificate`` is ``"strict"`` or
    ``"relaxed"`` (see :func:`single_round_ok`); the returned orbit's
    ``strict`` field always records the strict test.
    """
    if k < 0 or k > k_cap:
        raise ValueError(f"k must lie in [0, {k_cap}], got {k}")
    if certificate not in CERTIFICATES:
        raise ValueError(f"certificate must be one of {CERTIFICATES}")
    strict = certificate == "strict"
    n = k + 1
    seeds = []
    if seed is not None:
        seeds.append(np.asarray(seed, dtype=float))
    if seed is None or fallback:
        if k == 0:
            seeds.append(np.array([1.0, 1.0]))
        else:
            seeds.append(np.array(seed_point(k, params)))
    saw_multi_round = False
    last_its = 0
    tried_prev = False
    while seeds:
        s = seeds.pop(0)
        p, last_its = _solve(s, n, params, tol_newton, max_iter, bound)
        if p is not None:
            orbit = orbit_from_point(p, k, params, iterations=last_its, bound=bound)
            if single_round_ok(orbit.points, params, strict):
                return orbit
            saw_multi_round = True
            logger.debug("k=%d seed %s converged to a non-single-round orbit", k, s)
        if not seeds and fallback and k > 0 and not tried_prev:
            tried_prev = True
            try:
                prev = find_periodic_orbit(k - 1, params, tol_newton=tol_newton, max_iter=max_iter,
                                           k_cap=k_cap, bound=bound, fallback=True,
                                           certificate=certificate)
            except (NoConvergence, NotSingleRound):
                break
            p0 = prev.points[0]
            seeds.append(np.array([params.alpha * p0[0], p0[1]]))
    if saw_multi_round:
        raise NotSingleRound(f"k={k}: Newton converged but the orbit is not single-round")
    raise NoConvergence(f"k={k}: Newton did not converge within {max_iter} iterations (last run {last_its})")
