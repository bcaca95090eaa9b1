"""Periodic orbits and bifurcation scaling laws near a globally resonant homoclinic tangency."""

__version__ = "0.1.0"

from ._kernels import backend
from .asymptotics import (
    AsymptoticPrediction,
    ScalingCase,
    check_conditions,
    discriminant,
    k_set,
    predict,
    psi_k,
)
from .errors import (
    ComplexRoot,
    DegenerateDirection,
    EscapedDomain,
    InsufficientData,
    NoBifurcationInRange,
    NoConvergence,
    NotSingleRound,
    PreconditionViolated,
)
from .map_core import ModelParams, NormalFormCoeffs, extract_normal_form, f_apply, f_jacobian
from .orbits import PeriodicOrbit, Stability, StabilityIndicators, classify_stability, find_periodic_orbit
from .portrait import build_portrait, homoclinic_orbit, unstable_manifold
from .scan import (
    BifurcationPoint,
    DirectionRay,
    ScalingFit,
    locate_bifurcations,
    scaled_sequence,
    stability_window,
)
