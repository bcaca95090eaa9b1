"""Saddle-node and period-doubling values along parameter rays ``mu = eps v``."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .asymptotics import (
    AsymptoticPrediction,
    ScalingCase,
    case_rate,
    predict,
)
from .errors import (
    EscapedDomain,
    InsufficientData,
    NoBifurcationInRange,
    NoConvergence,
    NotSingleRound,
    SolverError,
)
from .map_core import ModelParams, extract_normal_form, n_eig
from .orbits import (
    PeriodicOrbit,
    StabilityIndicators,
    find_periodic_orbit,
    iterate_full,
    orbit_from_point,
    single_round_ok,
)

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 6
_LOST = (NoConvergence, NotSingleRound, EscapedDomain)


@dataclass(frozen=True)
class DirectionRay:
    v: tuple[float, float, float, float]
    case: ScalingCase

    @classmethod
    def from_vector(cls, v, params: ModelParams | None = None) -> "DirectionRay":
        """Classify a direction by which leading-order law governs it."""
        params = params or ModelParams()
        v = tuple(float(c) for c in v)
        if len(v) != 4:
            raise ValueError("direction must have 4 components")
        if not any(v):
            raise ValueError("direction must be nonzero")
        v1, v2, v3, v4 = v
        if v1 != 0.0:
            case = ScalingCase.CASE1_MU1 if (v2, v3, v4) == (0.0, 0.0, 0.0) else ScalingCase.GENERAL_TRANSVERSE
        elif float(np.dot(n_eig(params), v)) != 0.0:
            case = ScalingCase.CASE2_MU2 if (v3, v4) == (0.0, 0.0) else ScalingCase.GENERAL_TANGENT
        elif v3 != 0.0:
            # mu3 moves bifurcations at rate alpha^k, faster than mu4's 1/k
            case = ScalingCase.CASE3_MU3
        else:
            case = ScalingCase.CASE4_MU4
        return cls(v, case)

    @classmethod
    def axis(cls, i: int, params: ModelParams | None = None) -> "DirectionRay":
        """The coordinate ray ``e_i`` (1-based)."""
        if i not in (1, 2, 3, 4):
            raise ValueError(f"direction index must be 1..4, got {i}")
        v = [0.0] * 4
        v[i - 1] = 1.0
        return cls.from_vector(v, params)

    def mu(self, eps: float, base=(0.0, 0.0, 0.0, 0.0)) -> tuple[float, ...]:
        return tuple(b + eps * c for b, c in zip(base, self.v))


@dataclass(frozen=True)
class BifurcationPoint:
    kind: str
    k: int
    epsilon: float
    scaled_value: float
    indicators_at: StabilityIndicators
    point: np.ndarray = field(repr=False)
    case: ScalingCase = ScalingCase.CASE1_MU1
    strict: bool = True  # orbit at the bifurcation stays out of the blend strip


@dataclass(frozen=True)
class ScalingFit:
    kind: str
    case: ScalingCase
    sequence: tuple[tuple[int, float], ...]
    extrapolated_limit: float
    slope: float
    fit_residual: float
    failures: tuple[tuple[int, str], ...] = ()
    linear_limit: float = math.nan  # one-term fit, kept for comparison
    points: tuple[BifurcationPoint, ...] = field(default=(), repr=False)
    # located, but the orbit enters the blend strip: not used in the fit
    strip_points: tuple[BifurcationPoint, ...] = field(default=(), repr=False)

    @property
    def ks(self) -> np.ndarray:
        return np.array([k for k, _ in self.sequence])

    @property
    def values(self) -> np.ndarray:
        return np.array([s for _, s in self.sequence])


def _params_at(params: ModelParams, ray: DirectionRay, eps: float) -> ModelParams:
    return params.with_mu(ray.mu(eps, params.mu))


def orbit_at(k: int, eps: float, ray: DirectionRay, params: ModelParams, warm_seed=None,
             tol_newton: float = 1e-12, certificate: str = "relaxed") -> PeriodicOrbit:
    """Single-round orbit of period k+1 at ``mu = base + eps v``.

    Scans use the relaxed certificate so that an orbit can be followed while
    its reinjection point dips into the blend strip; ``orbit.strict`` tells
    whether it did.
    """
    p = _params_at(params, ray, eps)
    return find_periodic_orbit(k, p, seed=warm_seed, tol_newton=tol_newton,
                               fallback=warm_seed is None, certificate=certificate)


def stability_indicators_at(k: int, eps: float, ray: DirectionRay, params: ModelParams,
                            warm_seed=None, tol_newton: float = 1e-12) -> StabilityIndicators:
    return orbit_at(k, eps, ray, params, warm_seed, tol_newton).indicators


def prediction_for(k: int, ray: DirectionRay, params: ModelParams) -> AsymptoticPrediction:
    c0 = extract_normal_form(params.with_mu((0.0, 0.0, 0.0, 0.0)))
    return predict(ray.case, k, c0, ray.v)


def _g_sn_at(k, x, y, eps, ray, params):
    p = _params_at(params, ray, eps)
    _, mono, _ = iterate_full((x, y), k + 1, p, ray.v)
    return float(np.linalg.det(mono) - np.trace(mono) + 1.0)


def _refine_fold(k, point, eps, ray, params, tol=1e-12, max_iter=30):
    """Solve ``f^(k+1)(p) = p`` together with ``g_sn = 0`` for ``(p, eps)``.

    Newton on the three unknowns; the derivatives of the first two equations
    are exact, those of ``g_sn`` are central differences.
    """
    n = k + 1
    z = np.array([point[0], point[1], eps], dtype=float)
    scale = np.array([max(abs(z[0]), 1e-300), 1.0, max(abs(z[2]), 1e-300)])
    for _ in range(max_iter):
        p = _params_at(params, ray, z[2])
        img, mono, deps = iterate_full(z[:2], n, p, ray.v)
        g = float(np.linalg.det(mono) - np.trace(mono) + 1.0)
        r = np.array([img[0] - z[0], img[1] - z[1], g])
        jac = np.zeros((3, 3))
        jac[:2, :2] = mono - np.eye(2)
        jac[:2, 2] = deps
        for j in range(3):
            h = 1e-6 * scale[j]
            zp = z.copy()
            zm = z.copy()
            zp[j] += h
            zm[j] -= h
            gp = _g_sn_at(k, zp[0], zp[1], zp[2], ray, params)
            gm = _g_sn_at(k, zm[0], zm[1], zm[2], ray, params)
            jac[2, j] = (gp - gm) / (2.0 * h)
        dz = np.linalg.solve(jac * scale, -r) * scale
        z = z + dz
        if np.all(np.abs(dz) <= tol * scale) and max(abs(r[0]), abs(r[1])) <= tol:
            break
    else:
        raise NoConvergence(f"k={k}: fold refinement did not converge")
    return z[:2], float(z[2])


def _probe(k, eps, ray, params, seed, tol_newton):
    """Orbit at eps continued from ``seed``, or None if it is lost."""
    try:
        return orbit_at(k, eps, ray, params, seed, tol_newton)
    except _LOST:
        return None


def _scan_side(k, sign, step, limit, base_orbit, ray, params, tol_newton):
    """March from eps = 0 in direction ``sign`` until a test function trips.

    Returns ``(event, eps_good, orbit_good, eps_bad, orbit_bad)`` where event
    is ``"SN"`` or ``"PD"``; ``orbit_bad`` is None after a fold.
    """
    eps_good, orb_good = 0.0, base_orbit
    h = step
    while abs(eps_good) < limit:
        eps_new = eps_good + sign * h
        orb = _probe(k, eps_new, ray, params, orb_good.start, tol_newton)
        if orb is None:
            return "SN", eps_good, orb_good, eps_new, None
        ind = orb.indicators
        sn_trip = ind.g_sn <= 0.0
        pd_trip = ind.g_pd <= 0.0
        if sn_trip and pd_trip:
            if h < step * 2.0**-30:
                raise NoBifurcationInRange(f"k={k}: saddle-node and period-doubling not separable")
            h *= 0.5
            continue
        if sn_trip:
            return "SN", eps_good, orb_good, eps_new, orb
        if pd_trip:
            return "PD", eps_good, orb_good, eps_new, orb
        eps_good, orb_good = eps_new, orb
    raise NoBifurcationInRange(f"k={k}: no bifurcation for |eps| <= {limit:.3g} on the {'+' if sign > 0 else '-'} side")


def _locate_sn(k, eps_a, orb_a, eps_b, ray, params, tol_bisect, tol_newton, fold_tol=1e-6):
    # bisect on "orbit still continues with g_sn > 0"
    while abs(eps_b - eps_a) > tol_bisect * abs(eps_a):
        mid = 0.5 * (eps_a + eps_b)
        orb = _probe(k, mid, ray, params, orb_a.start, tol_newton)
        if orb is not None and orb.indicators.g_sn > 0.0:
            eps_a, orb_a = mid, orb
        else:
            eps_b = mid
    try:
        pt, eps = _refine_fold(k, orb_a.start, eps_a, ray, params)
        orb = orbit_from_point(pt, k, _params_at(params, ray, eps))
        if single_round_ok(orb.points, _params_at(params, ray, eps), strict=False):
            return eps, orb
    except (SolverError, np.linalg.LinAlgError) as exc:
        logger.debug("k=%d: fold refinement failed (%s)", k, exc)
    # the orbit was lost without its multiplier reaching +1: it left the
    # single-round region (or escaped) rather than folding
    if abs(orb_a.indicators.g_sn) > fold_tol:
        raise NoBifurcationInRange(
            f"k={k}: orbit lost at eps={eps_a:.6g} with g_sn={orb_a.indicators.g_sn:.3g}, not a fold"
        )
    return eps_a, orb_a


def _locate_pd(k, eps_a, orb_a, eps_b, orb_b, ray, params, tol_bisect, tol_newton):
    cache = {eps_a: orb_a, eps_b: orb_b}

    def g(eps):
        nearest = min(cache, key=lambda e: abs(e - eps))
        orb = orbit_at(k, eps, ray, params, cache[nearest].start, tol_newton)
        cache[eps] = orb
        return orb.indicators.g_pd

    # tighter than tol_bisect so that |g_pd| lands well inside 1e-8
    xtol = min(tol_bisect, 1e-12) * abs(eps_a if eps_a != 0.0 else eps_b)
    eps = brentq(g, eps_a, eps_b, xtol=xtol, rtol=1e-15, maxiter=200)
    nearest = min(cache, key=lambda e: abs(e - eps))
    return eps, orbit_at(k, eps, ray, params, cache[nearest].start, tol_newton)


def locate_each(
    k: int,
    ray: DirectionRay,
    params: ModelParams,
    *,
    tol_bisect: float = 1e-8,
    tol_newton: float = 1e-12,
    step_fraction: float = 0.1,
    range_factor: float = 10.0,
) -> dict:
    """Locate the saddle-node and period-doubling values of orbit k separately.

    Each kind is searched on the side of eps = 0 where its predicted value
    lies, with steps of ``step_fraction`` times the predicted magnitude, out
    to ``range_factor`` times it.  Returns ``{"SN": ..., "PD": ...}`` where
    each value is a :class:`BifurcationPoint` or an error message.
    """
    try:
        base = find_periodic_orbit(k, params, tol_newton=tol_newton, certificate="relaxed")
    except SolverError as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return {"SN": msg, "PD": msg}
    pred = prediction_for(k, ray, params)
    rate = case_rate(ray.case, k, params.alpha)
    out = {}
    for kind, lim in (("SN", pred.sn_limit), ("PD", pred.pd_limit)):
        sign = 1.0 if lim > 0 else -1.0
        mag = abs(lim) * rate
        try:
            event, ea, oa, eb, ob = _scan_side(k, sign, step_fraction * mag, range_factor * mag,
                                               base, ray, params, tol_newton)
            if event != kind:
                raise NoBifurcationInRange(f"k={k}: hit {event} before {kind} on the expected side")
            if kind == "SN":
                eps, orb = _locate_sn(k, ea, oa, eb, ray, params, tol_bisect, tol_newton)
            else:
                eps, orb = _locate_pd(k, ea, oa, eb, ob, ray, params, tol_bisect, tol_newton)
        except SolverError as exc:
            out[kind] = f"{type(exc).__name__}: {exc}"
            continue
        out[kind] = BifurcationPoint(kind, k, eps, eps / rate, orb.indicators, orb.start.copy(),
                                     ray.case, orb.strict)
    return out


def locate_bifurcations(k: int, ray: DirectionRay, params: ModelParams, **kw) -> tuple[BifurcationPoint, BifurcationPoint]:
    """The saddle-node and period-doubling values bounding the stable window of orbit k.

    Same keywords as :func:`locate_each`; raises :class:`NoBifurcationInRange`
    (or another solver error) if either value is missing.
    """
    found = locate_each(k, ray, params, **kw)
    for kind in ("SN", "PD"):
        if isinstance(found[kind], str):
            raise NoBifurcationInRange(found[kind])
    return found["SN"], found["PD"]


def stability_window(k: int, ray: DirectionRay, params: ModelParams, samples: int = 10,
                     overshoot: float = 0.05, **kw):
    """Classify orbits inside and just outside the window between PD and SN.

    Returns ``(inside, outside)``: lists of ``(eps, Stability or None)``
    where None means the orbit could not be continued (past the fold).
    Inside points are spaced uniformly strictly between the two endpoints.
    """
    sn, pd = locate_bifurcations(k, ray, params, **kw)
    lo, hi = sorted((sn.epsilon, pd.epsilon))
    inside_eps = lo + (hi - lo) * np.arange(1, samples + 1) / (samples + 1)
    outside_eps = [pd.epsilon * (1.0 + overshoot), sn.epsilon * (1.0 + overshoot)]
    # continue outward from eps = 0: the bifurcation points themselves are
    # poor Newton seeds (the fold one is singular)
    base = find_periodic_orbit(k, params, certificate="relaxed")
    result = {}
    for side in (-1.0, 1.0):
        ordered = sorted((e for e in list(inside_eps) + outside_eps if e * side > 0), key=abs)
        seed = base.start
        for eps in ordered:
            try:
                orb = orbit_at(k, float(eps), ray, params, seed)
            except _LOST:
                result[float(eps)] = None
                continue
            result[float(eps)] = orb.stability
            seed = orb.start
    inside = [(float(e), result[float(e)]) for e in inside_eps]
    outside = [(float(e), result[float(e)]) for e in outside_eps]
    return inside, outside


FIT_DEGREE = 2


def fit_variable(case: ScalingCase, k: int, alpha: float) -> float:
    """Variable in which the scaled sequences are extrapolated: ``k alpha^k``.

    Also used for the mu4 ray: in this family mu4 enters the quadratic for
    the orbit offset exactly through ``k (a1 + b1)``, so the only visible
    corrections there are the same ``k alpha^k`` terms as for mu3.
    """
    return k * alpha**k


def fit_limit(case: ScalingCase, sequence, alpha: float, degree: int = FIT_DEGREE):
    """Least-squares polynomial in ``c = k alpha^k``; returns (limit, slope, rms).

    ``degree = 1`` is the plain one-term model ``limit + slope * c``.
    """
    ks = np.array([k for k, _ in sequence], dtype=float)
    vals = np.array([s for _, s in sequence], dtype=float)
    if len(ks) < degree + 1:
        raise InsufficientData(f"{len(ks)} points cannot fit degree {degree}")
    x = np.array([fit_variable(case, int(k), alpha) for k in ks])
    A = np.vander(x, degree + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - vals) ** 2)))
    return float(coef[0]), float(coef[1]), rms


def _locate_job(args):
    k, ray, params, kw = args
    return k, locate_each(k, ray, params, **kw)


def locate_many(ks, ray: DirectionRay, params: ModelParams, jobs: int = 1, **kw):
    """Run :func:`locate_each` for each k; returns ``[(k, {kind: point or error})]`` sorted by k."""
    tasks = [(int(k), ray, params, kw) for k in ks]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(_locate_job, tasks))
    else:
        out = [_locate_job(t) for t in tasks]
    return sorted(out, key=lambda r: r[0])


def fits_from_results(results, ray: DirectionRay, params: ModelParams, degree: int = FIT_DEGREE):
    """Fit SN and PD limits from :func:`locate_many` output.

    A value enters the fit only if it was located and its orbit passes the
    strict single-round certificate; everything else is listed in
    ``failures`` with the reason.
    """
    fits = []
    for kind in ("SN", "PD"):
        pts, strip, failures = [], [], []
        for k, found in results:
            item = found[kind]
            if isinstance(item, str):
                failures.append((k, item))
            elif not item.strict:
                failures.append((k, "orbit enters the blend strip"))
                strip.append(item)
            else:
                pts.append(item)
        seq = tuple((b.k, b.scaled_value) for b in pts)
        if len(seq) < max(MIN_FIT_POINTS, degree + 1):
            raise InsufficientData(f"{kind}: {len(seq)} usable points, need at least {MIN_FIT_POINTS}")
        lim, slope, rms = fit_limit(ray.case, seq, params.alpha, degree)
        lin, _, _ = fit_limit(ray.case, seq, params.alpha, 1)
        fits.append(ScalingFit(kind, ray.case, seq, lim, slope, rms, tuple(failures), lin, tuple(pts),
                               tuple(strip)))
    return fits[0], fits[1]


def scaled_sequence(k_range, ray: DirectionRay, params: ModelParams, jobs: int = 1,
                    degree: int = FIT_DEGREE, **kw):
    """Locate bifurcations for every k in ``k_range`` and fit the scaled limits.

    ``k_range`` is an inclusive ``(k_lo, k_hi)`` pair or an iterable of k.
    See :func:`fits_from_results` for which values are used.
    """
    if isinstance(k_range, tuple) and len(k_range) == 2:
        ks = range(k_range[0], k_range[1] + 1)
    else:
        ks = list(k_range)
    results = locate_many(ks, ray, params, jobs=jobs, **kw)
    return fits_from_results(results, ray, params, degree)
