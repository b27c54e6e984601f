from .geometry import (
    b_matrix,
    element_for,
    ElementGeometry,
    evaluate_elements,
    GeometryBatch,
    Jacobians,
    jacobians,
    strain_displacement_B,
    to_parametric,
    transformation_T,
)
from .matrices import (
    centroid_jacobians,
    compute_element_systems,
    element_matrices_conventional,
    element_matrices_hybrid,
    ElementOptions,
    ElementSystem,
    Formulation,
    physical_stress_basis,
    T_EVAL_MODES,
)
from .quadrature import gauss_legendre, QuadratureRule, tensor_rule
from .stress_basis import stress_basis_for_degree, StressBasis, SUPPORTED_DEGREES

__all__ = [
    "QuadratureRule",
    "gauss_legendre",
    "tensor_rule",
    "StressBasis",
    "stress_basis_for_degree",
    "SUPPORTED_DEGREES",
    "ElementGeometry",
    "GeometryBatch",
    "Jacobians",
    "element_for",
    "evaluate_elements",
    "to_parametric",
    "jacobians",
    "transformation_T",
    "b_matrix",
    "strain_displacement_B",
    "Formulation",
    "ElementOptions",
    "ElementSystem",
    "T_EVAL_MODES",
    "compute_element_systems",
    "centroid_jacobians",
    "physical_stress_basis",
    "element_matrices_hybrid",
    "element_matrices_conventional",
]
