"""Transient slab transport by the method of characteristics, and neural-network
estimation of absorption coefficients from boundary scalar-flux readings."""

from .model import (
    AngularQuadrature,
    MaterialField,
    SlabGeometry,
    TransportProblem,
    build_gauss_legendre,
    scalar_flux_at_nodes,
    sigma_t_on_cell,
)
from .solver import DetectorReadout, MocSolver, SpaceTimeSolution, segment_update, solve

__all__ = [
    "AngularQuadrature",
    "DetectorReadout",
    "MaterialField",
    "MocSolver",
    "SlabGeometry",
    "SpaceTimeSolution",
    "TransportProblem",
    "build_gauss_legendre",
    "scalar_flux_at_nodes",
    "segment_update",
    "sigma_t_on_cell",
    "solve",
]
