from .knots import basis_functions, BasisValues, bspline_basis, find_span, find_spans, KnotVector
from .patch import (
    available_patches,
    Edge,
    evaluate_basis,
    load_patch,
    nurbs_basis_2d,
    NurbsPatch,
    PatchBasis,
    surface_point,
    surface_points,
)
from .refinement import elevate_degree, insert_knot, insert_knots, k_refine, refine_uniform

__all__ = [
    "KnotVector",
    "BasisValues",
    "find_span",
    "find_spans",
    "basis_functions",
    "bspline_basis",
    "Edge",
    "NurbsPatch",
    "PatchBasis",
    "evaluate_basis",
    "nurbs_basis_2d",
    "surface_point",
    "surface_points",
    "load_patch",
    "available_patches",
    "insert_knot",
    "insert_knots",
    "elevate_degree",
    "refine_uniform",
    "k_refine",
]
