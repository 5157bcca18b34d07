"""Gauge projections onto closed convex cones and the geometry of their kernels."""
from .cone import (
    Cone,
    Halfspace,
    Orthant,
    Polyhedral,
    PowerCone,
    Simplicial,
    Wedge,
    cone_from_record,
)
from .gauge import (
    CustomGauge,
    Ellipsoidal,
    Euclidean,
    Gauge,
    LinearImage,
    MeridianArc,
    WeightedP,
    gauge_from_record,
)
from .projector import (
    Membership,
    ProjectionOutcome,
    SolverOptions,
    gauge_distance,
    kernel_membership,
    project,
    project_halfspace,
    residual_retraction,
)

__all__ = [
    "Cone", "Halfspace", "Orthant", "Polyhedral", "PowerCone", "Simplicial", "Wedge",
    "cone_from_record", "CustomGauge", "Ellipsoidal", "Euclidean", "Gauge", "LinearImage",
    "MeridianArc", "WeightedP", "gauge_from_record", "Membership", "ProjectionOutcome",
    "SolverOptions", "gauge_distance", "kernel_membership", "project", "project_halfspace",
    "residual_retraction",
]
