"""Phase-portrait data: invariant manifolds of the origin, the homoclinic orbit
and the coexisting stable orbits."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import EscapedDomain, PreconditionViolated, SolverError
from .map_core import ModelParams
from .orbits import PeriodicOrbit, Stability, find_periodic_orbit

logger = logging.getLogger(__name__)

DEFAULT_BOX = (-0.1, 1.3, -0.1, 1.3)  # xmin, xmax, ymin, ymax
MAX_STEP = 0.01
MAX_TURN_DEG = 20.0


class Branch(str, enum.Enum):
    UNSTABLE_PLUS = "unstable_plus"
    UNSTABLE_MINUS = "unstable_minus"
    STABLE_LOCAL = "stable_local"


@dataclass(frozen=True)
class ManifoldArc:
    branch: Branch
    points: np.ndarray
    iterations: int
    # per-level images of the fundamental domain, all on the same parameter grid
    levels: tuple = field(default=(), repr=False)
    seeds: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.points)


def _in_box(pts, box):
    x, y = pts[:, 0], pts[:, 1]
    return (x >= box[0]) & (x <= box[1]) & (y >= box[2]) & (y <= box[3])


def _images(t, sign, n, params):
    x = np.zeros_like(t)
    y = sign * t
    out = [np.column_stack([x, y])]
    for _ in range(n):
        x, y = _kernels.map_many(x, y, params.packed)
        out.append(np.column_stack([x, y]))
    return out


def _turning(pts):
    d = np.diff(pts, axis=0)
    u, w = d[:-1], d[1:]
    cross = u[:, 0] * w[:, 1] - u[:, 1] * w[:, 0]
    dot = np.einsum("ij,ij->i", u, w)
    return np.abs(np.arctan2(cross, dot))


def unstable_manifold(
    params: ModelParams,
    n_samples: int = 50,
    n_iterations: int = 6,
    *,
    branch: Branch = Branch.UNSTABLE_PLUS,
    box=DEFAULT_BOX,
    max_step: float = MAX_STEP,
    max_turn_deg: float = MAX_TURN_DEG,
    on_escape: str = "raise",
    max_rounds: int = 80,
) -> ManifoldArc:
    """Grow one branch of the unstable manifold of the origin.

    The fundamental domain ``[1/sigma^2, 1/sigma]`` on the y-axis is sampled
    and iterated forward.  Every level uses the same set of seed parameters,
    so ``f`` maps the samples of level j exactly onto those of level j+1 and
    the arc is forward-invariant by construction.  Seeds are bisected until
    every level has spacing at most ``max_step`` and turning angles at most
    ``max_turn_deg``.  ``on_escape="raise"`` raises :class:`EscapedDomain`
    when a level leaves ``box``; ``"stop"`` keeps the levels inside it.
    """
    branch = Branch(branch)
    if branch is Branch.STABLE_LOCAL:
        raise ValueError("use stable_local_segment for the stable branch")
    if on_escape not in ("raise", "stop"):
        raise ValueError("on_escape must be 'raise' or 'stop'")
    if n_samples < 2 or n_iterations < 0:
        raise ValueError("need n_samples >= 2 and n_iterations >= 0")
    sigma = 1.0 / params.alpha
    sign = 1.0 if branch is Branch.UNSTABLE_PLUS else -1.0
    t = np.linspace(1.0 / sigma**2, 1.0 / sigma, n_samples)
    t[-1] = 1.0 / sigma  # keep the endpoint exact so the arc hits (0, 1)
    max_turn = math.radians(max_turn_deg)

    levels = _images(t, sign, n_iterations, params)
    n_keep = len(levels)
    for j, pts in enumerate(levels):
        if not np.all(_in_box(pts, box)):
            if on_escape == "raise":
                raise EscapedDomain(f"manifold level {j} leaves the box {box}")
            n_keep = j
            break
    if n_keep == 0:
        return ManifoldArc(branch, np.empty((0, 2)), 0, (), t)

    for _ in range(max_rounds):
        levels = _images(t, sign, n_keep - 1, params)
        mark = np.zeros(len(t) - 1, dtype=bool)
        for pts in levels:
            if not np.all(_in_box(pts, box)):
                # a refined sample can poke out where the coarse ones did not
                if on_escape == "raise":
                    raise EscapedDomain(f"manifold leaves the box {box}")
            seg = np.hypot(*np.diff(pts, axis=0).T)
            mark |= seg > max_step
            bad = _turning(pts) > max_turn
            mark[:-1] |= bad
            mark[1:] |= bad
        mark &= np.diff(t) > 1e-13
        if not mark.any():
            break
        t = np.sort(np.concatenate([t, 0.5 * (t[:-1][mark] + t[1:][mark])]))
    else:
        logger.warning("manifold refinement stopped after %d rounds", max_rounds)

    # consecutive levels share an endpoint: f^j(0, 1/sigma) = f^(j+1)(0, 1/sigma^2)
    parts = [levels[0]] + [lv[1:] for lv in levels[1:]]
    return ManifoldArc(branch, np.vstack(parts), n_keep - 1, tuple(levels), t)


def stable_local_segment(box=DEFAULT_BOX, max_step: float = MAX_STEP) -> ManifoldArc:
    """The x-axis across the box; U0 keeps it invariant, so it lies in the stable set."""
    n = int(math.ceil((box[1] - box[0]) / max_step)) + 1
    x = np.linspace(box[0], box[1], n)
    return ManifoldArc(Branch.STABLE_LOCAL, np.column_stack([x, np.zeros(n)]), 0)


def homoclinic_orbit(k_tail: int, params: ModelParams) -> list[np.ndarray]:
    """(0, 1), its image (1, 0), then ``k_tail`` forward and ``k_tail`` backward points.

    The forward tail is the x-axis orbit of (1, 0) under U0; the backward
    tail is the preimage sequence of (0, 1) along the y-axis.
    """
    if params.mu[0] != 0.0:
        raise PreconditionViolated("the homoclinic orbit needs mu1 = 0 (tangency present)")
    if k_tail < 0:
        raise ValueError("k_tail must be non-negative")
    start = np.array([0.0, 1.0])
    x, y = _kernels.map_many(start[:1].copy(), start[1:].copy(), params.packed)
    pts = [start, np.array([x[0], y[0]])]
    lam = params.alpha + params.mu[1]
    fwd = pts[1].copy()
    for _ in range(k_tail):
        fwd = np.array([lam * fwd[0], 0.0])
        pts.append(fwd)
    yb = 1.0
    for _ in range(k_tail):
        # U0 on the y-axis is y -> y / alpha
        yb = yb * params.alpha
        pts.append(np.array([0.0, yb]))
    return pts


@dataclass
class PortraitDataset:
    arcs: list
    orbits: list
    fixed_points: list
    homoclinic_points: list
    missing: list = field(default_factory=list)  # (k, reason) for periods without a stable orbit


def build_portrait(params: ModelParams, k_max: int = 15, *, k_min: int = 1, n_iterations: int = 6,
                   k_tail: int = 12, strict: bool = True, box=DEFAULT_BOX) -> PortraitDataset:
    """Collect everything a phase portrait needs.

    Orbits k = k_min..k_max are solved independently.  With ``strict`` any
    failure (no orbit, or an orbit that is not stable) is raised; otherwise
    the period is recorded in ``missing`` and skipped.
    """
    arcs = [unstable_manifold(params, n_iterations=n_iterations, box=box), stable_local_segment(box)]
    orbits: list[PeriodicOrbit] = []
    missing = []
    for k in range(k_min, k_max + 1):
        try:
            orb = find_periodic_orbit(k, params)
            if orb.stability is not Stability.STABLE:
                raise SolverError(f"k={k}: orbit is {orb.stability.value}")
        except SolverError as exc:
            if strict:
                raise
            missing.append((k, f"{type(exc).__name__}: {exc}"))
            continue
        orbits.append(orb)
    fixed = [np.array([0.0, 0.0]), find_periodic_orbit(0, params, certificate="relaxed").start.copy()]
    return PortraitDataset(arcs, orbits, fixed, homoclinic_orbit(k_tail, params), missing)


def portrait_rows(ds: PortraitDataset):
    """Flatten a dataset into ``(entity, index, x, y)`` records in a fixed order."""
    rows = []
    for arc in ds.arcs:
        for i, (x, y) in enumerate(arc.points):
            rows.append((arc.branch.value, i, float(x), float(y)))
    for orb in ds.orbits:
        for i, (x, y) in enumerate(orb.points):
            rows.append((f"orbit_k{orb.k}", i, float(x), float(y)))
    for i, (x, y) in enumerate(ds.fixed_points):
        rows.append(("fixed_point", i, float(x), float(y)))
    for i, (x, y) in enumerate(ds.homoclinic_points):
        rows.append(("homoclinic", i, float(x), float(y)))
    return rows
