"""Closed-form leading-order theory of the unfolding.

Condition checks for infinitely many stable single-round orbits, the
discriminant, the admissible set of periods, the quadratic for the orbit
offset ``psi_k``, the four bifurcation predictors and the k-fold expansion
of the saddle map.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ComplexRoot, DegenerateDirection, PreconditionViolated
from .map_core import (
    ModelParams,
    NormalFormCoeffs,
    d1_gradient,
    extract_normal_form,
    n_tang,
    resonance_gradient,
)


class ScalingCase(str, enum.Enum):
    CASE1_MU1 = "case1_mu1"
    CASE2_MU2 = "case2_mu2"
    CASE3_MU3 = "case3_mu3"
    CASE4_MU4 = "case4_mu4"
    GENERAL_TANGENT = "general_tangent"
    GENERAL_TRANSVERSE = "general_transverse"


RATE_LABELS = {
    ScalingCase.CASE1_MU1: "alpha^(2k)",
    ScalingCase.GENERAL_TRANSVERSE: "alpha^(2k)",
    ScalingCase.CASE2_MU2: "alpha^k/k",
    ScalingCase.GENERAL_TANGENT: "alpha^k/k",
    ScalingCase.CASE3_MU3: "alpha^k",
    ScalingCase.CASE4_MU4: "1/k",
}


def case_rate(case: ScalingCase, k: int, alpha: float) -> float:
    """The k-dependent factor by which bifurcation values shrink."""
    case = ScalingCase(case)
    if case in (ScalingCase.CASE1_MU1, ScalingCase.GENERAL_TRANSVERSE):
        return alpha ** (2 * k)
    if case in (ScalingCase.CASE2_MU2, ScalingCase.GENERAL_TANGENT):
        return alpha**k / k
    if case is ScalingCase.CASE3_MU3:
        return alpha**k
    return 1.0 / k


def correction_rate(case: ScalingCase, k: int, alpha: float) -> float:
    """Order of the first correction to a scaled bifurcation value."""
    if ScalingCase(case) is ScalingCase.CASE4_MU4:
        return 1.0 / k
    return k * alpha**k


@dataclass(frozen=True)
class DiscriminantInputs:
    c1: float
    c2: float
    d1: float
    d3: float
    d4: float
    d5: float
    chi: int = 1

    @classmethod
    def from_coeffs(cls, coeffs: NormalFormCoeffs) -> "DiscriminantInputs":
        return cls(coeffs.c1, coeffs.c2, coeffs.d1, coeffs.d3, coeffs.d4, coeffs.d5, coeffs.chi)


def discriminant(inputs: DiscriminantInputs) -> float:
    """``(1 - c2 - chi d4)^2 - 4 d5 (d3 + chi c1)``, the discriminant at mu = 0."""
    chi = inputs.chi
    return (1.0 - inputs.c2 - chi * inputs.d4) ** 2 - 4.0 * inputs.d5 * (inputs.d3 + chi * inputs.c1)


def discriminant_d1(coeffs: NormalFormCoeffs) -> float:
    """Same discriminant but weighted by the actual ``d1`` instead of its sign."""
    c = coeffs
    return (1.0 - c.c2 - c.d1 * c.d4) ** 2 - 4.0 * c.d5 * (c.d3 + c.c1 * c.d1)


@dataclass(frozen=True)
class KSet:
    """Periods ``k >= kmin`` with ``(lambda sigma)^k`` of the same sign as ``d1``."""

    kmin: int
    chi_eig: int
    d1_sign: int

    def __post_init__(self):
        if self.chi_eig not in (-1, 1) or self.d1_sign not in (-1, 1):
            raise ValueError("chi_eig and d1_sign must be +1 or -1")

    def __contains__(self, k) -> bool:
        if int(k) != k or k < self.kmin:
            return False
        if self.chi_eig == 1:
            return self.d1_sign == 1
        return (-1) ** int(k) == self.d1_sign

    @property
    def empty(self) -> bool:
        return self.chi_eig == 1 and self.d1_sign == -1

    def members(self, kmax: int) -> list[int]:
        return [k for k in range(self.kmin, kmax + 1) if k in self]


def k_set(kmin: int, chi_eig: int, d1_sign: int) -> KSet:
    return KSet(int(kmin), int(chi_eig), int(d1_sign))


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    value: float
    residual: float


@dataclass(frozen=True)
class ConditionReport:
    results: tuple[ConditionResult, ...]
    delta: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, name: str) -> ConditionResult:
        for r in self.results:
            if r.name == name:
                return r
        raise KeyError(name)


def check_conditions(coeffs: NormalFormCoeffs, tol: float = 1e-12) -> ConditionReport:
    """Evaluate the hypotheses for infinitely many stable single-round orbits.

    Equalities pass when their residual is at most ``tol``.  The inequality
    checks report the slack as ``residual`` (positive means satisfied).
    """
    c = coeffs
    delta = discriminant_d1(c)
    lam_sig = c.lam * c.sigma
    out = []

    def equality(name, value, target):
        res = abs(value - target)
        out.append(ConditionResult(name, res <= tol, value, res))

    equality("d2 = 0", c.d2, 0.0)
    equality("|lambda*sigma| = 1", abs(lam_sig), 1.0)
    equality("|d1| = 1", abs(c.d1), 1.0)
    if lam_sig > 0:
        # the resonance-term condition only applies in the orientation-preserving case
        equality("a1 + b1 = 0", c.a1 + c.b1, 0.0)
    out.append(ConditionResult("d5 != 0", c.d5 != 0.0, c.d5, abs(c.d5)))
    out.append(ConditionResult("Delta > 0", delta > 0.0, delta, delta))
    if delta >= 0.0:
        upper = 1.0 - math.sqrt(delta) / 2.0
        slack = min(c.c2 + 1.0, upper - c.c2)
    else:
        slack = -math.inf
    out.append(ConditionResult("-1 < c2 < 1 - sqrt(Delta)/2", slack > 0.0, c.c2, slack))
    return ConditionReport(tuple(out), delta)


@dataclass(frozen=True)
class CoefficientGradients:
    """Linear dependence of the normal-form data on ``mu``.

    ``p, q, r, s, t`` are the gradients of ``c0, d1, d2, lambda, sigma`` and
    ``res`` the gradient of ``a1 + b1``.
    """

    p: np.ndarray
    q: np.ndarray
    r: np.ndarray
    s: np.ndarray
    t: np.ndarray
    res: np.ndarray
    tang: np.ndarray


def toy_gradients(params: ModelParams | None = None) -> CoefficientGradients:
    """Closed-form gradients for the bundled family."""
    params = params or ModelParams()
    zero = np.zeros(4)
    return CoefficientGradients(
        p=zero,
        q=d1_gradient(params),
        r=zero,
        s=np.array([0.0, 1.0, 0.0, 0.0]),
        t=zero,
        res=resonance_gradient(params),
        tang=n_tang(params),
    )


def scale_mu(mu, k: int, alpha: float) -> np.ndarray:
    """Map mu to the k-scaled coordinates: mu1 by alpha^(2k), the rest by alpha^k."""
    mu = np.asarray(mu, dtype=float)
    out = mu / alpha**k
    out[0] = mu[0] / alpha ** (2 * k)
    return out


def unscale_mu(mu_tilde, k: int, alpha: float) -> np.ndarray:
    mt = np.asarray(mu_tilde, dtype=float)
    out = mt * alpha**k
    out[0] = mt[0] * alpha ** (2 * k)
    return out


def pq_terms(coeffs: NormalFormCoeffs, mu_tilde, k: int, grads: CoefficientGradients | None = None):
    """Coefficients ``(P, Q)`` of ``chi d5 psi^2 - P psi + Q = 0``.

    ``coeffs`` must be the data at mu = 0.
    """
    g = grads or toy_gradients()
    mt = np.asarray(mu_tilde, dtype=float)
    chi = coeffs.chi
    a = coeffs.alpha
    tail = slice(1, None)
    P = 1.0 - coeffs.c2 - chi * coeffs.d4 - chi * float(np.dot(g.r[tail], mt[tail]))
    Q = (
        chi * mt[0]
        + coeffs.c1
        + chi * coeffs.d3
        + float(np.dot(g.p[tail] + chi * g.q[tail], mt[tail]))
        + k * float(np.dot(g.s[tail] / a + a * coeffs.chi_eig * g.t[tail], mt[tail]))
    )
    return P, Q


def psi_k(coeffs: NormalFormCoeffs, mu_tilde, k: int, grads: CoefficientGradients | None = None) -> float:
    """Leading-order offset of the stable orbit, ``y = 1 + psi_k alpha^k``."""
    P, Q = pq_terms(coeffs, mu_tilde, k, grads)
    cd = coeffs.chi * coeffs.d5
    disc = P * P - 4.0 * cd * Q
    if disc < 0.0:
        raise ComplexRoot(f"P^2 - 4 chi d5 Q = {disc:.6g} < 0")
    return (P - math.sqrt(disc)) / (2.0 * cd)


def leading_trace_det(coeffs: NormalFormCoeffs, mu_tilde, k: int, grads: CoefficientGradients | None = None):
    """Leading-order trace and determinant of the return-map Jacobian."""
    P, Q = pq_terms(coeffs, mu_tilde, k, grads)
    disc = P * P - 4.0 * coeffs.chi * coeffs.d5 * Q
    if disc < 0.0:
        raise ComplexRoot(f"P^2 - 4 chi d5 Q = {disc:.6g} < 0")
    return 1.0 - coeffs.c2 - math.sqrt(disc), -coeffs.c2


def seed_point(k: int, params: ModelParams) -> tuple[float, float]:
    """Asymptotic guess for the orbit point near ``(alpha^k, 1)``.

    Beyond the scaled quadratic this also feeds the unscaled resonance-term
    drift ``k (a1 + b1)`` into ``Q`` so that perturbations of ``a1`` are
    seeded sensibly.  Past the fold the double root is used.
    """
    c0 = extract_normal_form(params.with_mu((0.0, 0.0, 0.0, 0.0)))
    g = toy_gradients(params)
    a = params.alpha
    mu = np.asarray(params.mu)
    mt = scale_mu(mu, k, a)
    P, Q = pq_terms(c0, mt, k, g)
    Q += c0.chi * k * float(np.dot(g.res, mu))
    cd = c0.chi * c0.d5
    disc = P * P - 4.0 * cd * Q
    psi = (P - math.sqrt(max(disc, 0.0))) / (2.0 * cd)
    phi = c0.chi * k * (c0.a1 + mu[3]) + c0.c1 + c0.c2 * psi + k * float(np.dot(g.s[1:], mt[1:])) / a
    ak = a**k
    return ak * (1.0 + phi * ak), 1.0 + psi * ak


@dataclass(frozen=True)
class AsymptoticPrediction:
    case: ScalingCase
    sn_limit: float
    pd_limit: float
    rate: str
    alpha: float = field(default=0.8, repr=False)

    def epsilon(self, kind: str, k: int) -> float:
        """Leading-order unscaled bifurcation value for period ``k + m``."""
        lim = self.sn_limit if kind.upper() == "SN" else self.pd_limit
        return lim * case_rate(self.case, k, self.alpha)


def predict(case, k: int, coeffs: NormalFormCoeffs, v, grads: CoefficientGradients | None = None) -> AsymptoticPrediction:
    """Leading-order limits of the scaled saddle-node and period-doubling values.

    ``coeffs`` are the data at mu = 0 and ``v`` the direction of the ray
    ``mu = eps v``.  Scaled values are ``eps`` divided by :func:`case_rate`.
    """
    case = ScalingCase(case)
    g = grads or toy_gradients()
    v = np.asarray(v, dtype=float)
    d0 = discriminant(DiscriminantInputs.from_coeffs(coeffs))
    pd_num = d0 - 4.0 * (1.0 - coeffs.c2) ** 2
    chi, chi_eig, d5 = coeffs.chi, coeffs.chi_eig, coeffs.d5
    if case in (ScalingCase.CASE1_MU1, ScalingCase.GENERAL_TRANSVERSE):
        denom = 4.0 * d5 * float(np.dot(g.tang, v))
    elif case in (ScalingCase.CASE2_MU2, ScalingCase.GENERAL_TANGENT):
        neig = g.s / coeffs.alpha * chi_eig + coeffs.alpha * g.t
        denom = 4.0 * d5 * chi * chi_eig * float(np.dot(neig, v))
    elif case is ScalingCase.CASE3_MU3:
        denom = 4.0 * d5 * chi * float(np.dot(g.p + chi * g.q, v))
    else:
        denom = 4.0 * d5 * chi * float(np.dot(g.res, v))
    if denom == 0.0 or d5 == 0.0:
        raise DegenerateDirection(f"predictor denominator vanishes for {case.value} along v={v.tolist()}")
    return AsymptoticPrediction(case, d0 / denom, pd_num / denom, RATE_LABELS[case], coeffs.alpha)


def _u0_power(x: float, y: float, k: int, params: ModelParams) -> tuple[float, float]:
    a = params.alpha
    lam = a + params.mu[1]
    a1 = params.a10 + params.mu[3]
    sig = 1.0 / a
    for _ in range(k):
        xy = x * y
        x, y = lam * x * (1.0 + a1 * xy), sig * y * (1.0 - params.a10 * xy)
    return x, y


def t0k_expansion(p, k: int, params: ModelParams, smallness: float = 0.1) -> np.ndarray:
    """``(lambda^k x (1 + k a1 x y), sigma^k y (1 + k b1 x y))``."""
    x, y = float(p[0]), float(p[1])
    _check_lemma_region(x, y, k, params.alpha, smallness)
    nf = extract_normal_form(params)
    xy = x * y
    return np.array(
        [nf.lam**k * x * (1.0 + k * nf.a1 * xy), nf.sigma**k * y * (1.0 + k * nf.b1 * xy)]
    )


def lemma71_error(p, k: int, params: ModelParams, smallness: float = 0.1) -> tuple[float, float]:
    """Scaled error of :func:`t0k_expansion` against k exact saddle-map steps.

    The x error is divided by ``alpha^k`` and the y error by 1, matching the
    sizes of the two output components.
    """
    exp = t0k_expansion(p, k, params, smallness)
    ex = _u0_power(float(p[0]), float(p[1]), k, params)
    ak = params.alpha**k
    return abs(ex[0] - exp[0]) / ak, abs(ex[1] - exp[1])


def _check_lemma_region(x, y, k, alpha, smallness):
    if k < 1:
        raise PreconditionViolated("k must be positive")
    if abs(x - 1.0) > smallness or abs(y / alpha**k - 1.0) > smallness:
        raise PreconditionViolated(
            f"need |x-1| <= {smallness} and |y/alpha^k - 1| <= {smallness}, got x={x}, y={y}, k={k}"
        )
