"""Numerical checks of the leading-order theory, as pass/fail records."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .asymptotics import (
    check_conditions,
    leading_trace_det,
    lemma71_error,
    psi_k,
    scale_mu,
)
from .errors import InsufficientData, SolverError
from .map_core import ModelParams, extract_normal_form
from .orbits import find_periodic_orbit
from .scan import DirectionRay, prediction_for, scaled_sequence

# relative tolerance on the extrapolated limits, per coordinate direction
FIT_TOLERANCE = {1: 0.02, 2: 0.03, 3: 0.03, 4: 0.05}


@dataclass(frozen=True)
class Check:
    check: str
    status: str  # "pass" or "fail"
    value: float | None
    bound: float | str | None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def as_dict(self) -> dict:
        d = asdict(self)
        if isinstance(d["value"], float) and not math.isfinite(d["value"]):
            d["value"] = None
        return d


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def condition_checks(params: ModelParams, tol: float = 1e-12) -> list[Check]:
    rep = check_conditions(extract_normal_form(params), tol)
    out = []
    for r in rep.results:
        if "=" in r.name and "!=" not in r.name:
            out.append(Check(f"condition: {r.name}", _status(r.passed), float(r.value), tol,
                             f"residual {r.residual:.3g}"))
        else:
            out.append(Check(f"condition: {r.name}", _status(r.passed), float(r.value), "strict inequality",
                             f"slack {r.residual:.6g}"))
    out.append(Check("discriminant Delta0", _status(rep.delta > 0.0), float(rep.delta), "> 0"))
    return out


def _orbits(ks, params):
    got = {}
    for k in ks:
        try:
            got[k] = find_periodic_orbit(k, params)
        except SolverError:
            pass
    return got


def trace_det_checks(params: ModelParams, ks=range(5, 26), safety: float = 1.2) -> list[Check]:
    """``|tau_k - tau*|`` and ``|delta_k - delta*|`` against ``C k alpha^k``, C fixed at the first k."""
    ks = list(ks)
    a = params.alpha
    c0 = extract_normal_form(params.with_mu((0.0, 0.0, 0.0, 0.0)))
    orbs = _orbits(ks, params)
    missing = [k for k in ks if k not in orbs]
    out = []
    for name, idx in (("trace", 0), ("determinant", 1)):
        errs = {}
        for k, orb in orbs.items():
            lim = leading_trace_det(c0, scale_mu(params.mu, k, a), k)[idx]
            val = orb.trace if idx == 0 else orb.det
            errs[k] = abs(val - lim) / (k * a**k)
        if ks[0] not in errs:
            out.append(Check(f"{name} asymptotics", "fail", None, None, f"no orbit at k={ks[0]}"))
            continue
        bound = safety * errs[ks[0]]
        worst = max(errs.values())
        ok = worst <= bound and not missing
        detail = f"k={ks[0]}..{ks[-1]}" + (f"; missing k={missing}" if missing else "")
        out.append(Check(f"{name} asymptotics", _status(ok), worst, bound, detail))
    return out


def ansatz_checks(params: ModelParams, ks=range(5, 26), safety: float = 1.2) -> list[Check]:
    """Orbit height ``y_k = 1 + psi_k alpha^k`` up to ``C k alpha^(2k)``."""
    ks = list(ks)
    a = params.alpha
    c0 = extract_normal_form(params.with_mu((0.0, 0.0, 0.0, 0.0)))
    orbs = _orbits(ks, params)
    errs = {}
    for k, orb in orbs.items():
        psi = psi_k(c0, scale_mu(params.mu, k, a), k)
        errs[k] = float(abs(orb.start[1] - 1.0 - psi * a**k) / (k * a ** (2 * k)))
    if ks[0] not in errs:
        return [Check("orbit ansatz y_k", "fail", None, None, f"no orbit at k={ks[0]}")]
    bound = safety * errs[ks[0]]
    worst = max(errs.values())
    missing = [k for k in ks if k not in orbs]
    return [Check("orbit ansatz y_k", _status(worst <= bound and not missing), worst, bound,
                  f"k={ks[0]}..{ks[-1]}")]


def lemma_sample_points(n: int = 10, smallness: float = 0.1, seed: int = 7):
    """Fixed offsets ``(u, w)`` giving points ``(1 + u, alpha^k (1 + w))``."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-smallness, smallness, size=(n, 2)) * 0.999


def lemma_ratio_table(params: ModelParams, ks=range(8, 25), n_points: int = 10, smallness: float = 0.1):
    """Rows ``(k, point index, x ratio, y ratio)``: expansion errors over ``k^2 alpha^(2k)``."""
    a = params.alpha
    offs = lemma_sample_points(n_points, smallness)
    rows = []
    for k in ks:
        ak = a**k
        for i, (u, w) in enumerate(offs):
            ex, ey = lemma71_error((1.0 + u, ak * (1.0 + w)), k, params, smallness)
            scale = k * k * ak * ak
            rows.append((k, i, ex / scale, ey / scale))
    return rows


def lemma_checks(params: ModelParams, ks=range(8, 25), n_points: int = 10, factor: float = 1.1) -> list[Check]:
    """Each component's sample-maximum error ratio stays within ``factor`` times its value at the first k."""
    ks = list(ks)
    rows = lemma_ratio_table(params, ks, n_points)
    out = []
    for comp, col in (("x", 2), ("y", 3)):
        peak = {k: max(r[col] for r in rows if r[0] == k) for k in ks}
        worst = float(max(peak[k] / peak[ks[0]] for k in ks))
        first = {r[1]: r[col] for r in rows if r[0] == ks[0]}
        per_point = float(max(r[col] / first[r[1]] for r in rows))
        out.append(Check(f"expansion error ({comp}) / k^2 alpha^(2k)", _status(worst <= factor), worst, factor,
                         f"k={ks[0]}..{ks[-1]}, max over {n_points} points, relative to k={ks[0]}; "
                         f"pointwise worst {per_point:.4f}"))
    return out


def fit_checks(params: ModelParams, directions=(1, 2, 3, 4), k_min: int = 8, k_max: int = 22,
               jobs: int = 1, tolerance=None, **kw):
    """Extrapolated scaled limits against the predicted ones, plus sign checks.

    Returns ``(checks, sweeps)`` where ``sweeps[direction] = (sn_fit, pd_fit)``
    or the error text.
    """
    tolerance = tolerance or FIT_TOLERANCE
    out, sweeps = [], {}
    for d in directions:
        ray = DirectionRay.axis(d, params)
        pred = prediction_for(k_max, ray, params)
        tol = tolerance.get(d, 0.05)
        try:
            fits = scaled_sequence((k_min, k_max), ray, params, jobs=jobs, **kw)
        except InsufficientData as exc:
            out.append(Check(f"direction {d} fit", "fail", None, tol, f"insufficient points: {exc}"))
            sweeps[d] = str(exc)
            continue
        sweeps[d] = fits
        for fit, lim in zip(fits, (pred.sn_limit, pred.pd_limit)):
            rel = fit.extrapolated_limit / lim - 1.0
            detail = (f"limit {fit.extrapolated_limit:.6g} vs predicted {lim:.6g}; "
                      f"{len(fit.sequence)} points, k={int(fit.ks.min())}..{int(fit.ks.max())}")
            out.append(Check(f"direction {d} {fit.kind} limit", _status(abs(rel) <= tol), rel, tol, detail))
        sn, pd = fits
        signs = ([b.epsilon > 0 for b in sn.points + sn.strip_points]
                 + [b.epsilon < 0 for b in pd.points + pd.strip_points])
        out.append(Check(f"direction {d} signs", _status(all(signs)), float(sum(signs)), float(len(signs)),
                         "eps_SN > 0 and eps_PD < 0 for every located value"))
    return out, sweeps
