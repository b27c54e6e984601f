from .boundary import BoundaryCondition, BoundaryKind, TractionFunction
from .mesh import build_mesh, Mesh
from .solution import EQUILIBRIUM_TOLERANCE, Solution
from .system import (
    apply_dirichlet,
    apply_traction,
    assemble,
    edge_quadrature,
    export_matrix_market,
    GlobalSystem,
    ReducedSystem,
    RESIDUAL_TOLERANCE,
    ROUNDOFF_FACTOR,
    solve,
)

__all__ = [
    "EQUILIBRIUM_TOLERANCE",
    "BoundaryKind",
    "BoundaryCondition",
    "TractionFunction",
    "Mesh",
    "build_mesh",
    "Solution",
    "GlobalSystem",
    "ReducedSystem",
    "RESIDUAL_TOLERANCE",
    "ROUNDOFF_FACTOR",
    "assemble",
    "apply_traction",
    "apply_dirichlet",
    "solve",
    "edge_quadrature",
    "export_matrix_market",
]
