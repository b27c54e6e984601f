import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE
from hyiga.errors import ConfigurationError, FormulationError
from hyiga.material import Material
from hyiga.nurbs import NurbsPatch

from .geometry import b_matrix, ElementGeometry, evaluate_elements, GeometryBatch, transformation_T
from .quadrature import QuadratureRule, tensor_rule
from .stress_basis import stress_basis_for_degree, StressBasis

logger = logging.getLogger(__name__)

__all__ = [
    "Formulation",
    "ElementOptions",
    "ElementSystem",
    "T_EVAL_MODES",
    "compute_element_systems",
    "element_matrices_hybrid",
    "element_matrices_conventional",
    "physical_stress_basis",
    "centroid_jacobians",
]

T_EVAL_MODES = ("per_point", "centroid")

BodyForce = Callable[[Tensor], Tensor]


class Formulation(str, Enum):
    """Conventional single-field IGA or the condensed two-field hybrid stress formulation."""

    CONVENTIONAL = "iga"
    HYBRID = "hybrid"

    @classmethod
    def parse(cls, value: Union["Formulation", str]) -> "Formulation":
        if isinstance(value, Formulation):
            return value
        name = str(value).strip().lower()
        if name in ("iga", "conventional", "displacement"):
            return cls.CONVENTIONAL
        if name in ("hybrid", "higa", "h-iga"):
            return cls.HYBRID
        raise ConfigurationError("unknown formulation {!r}; use 'iga' or 'hybrid'".format(value))


@dataclass(frozen=True)
class ElementOptions:
    """Numerical switches of the element kernels.

    Args:
        t_eval: where the Jacobian of the stress transformation is taken: at every quadrature
            point (``"per_point"``) or once at the element centre (``"centroid"``).
        quadrature: Gauss points per direction; ``None`` means ``p + 1`` (resp. ``q + 1``).
        body_force: optional ``b(x)`` mapping ``[N, 2]`` physical points to ``[N, 2]`` forces.
    """

    t_eval: str = "per_point"
    quadrature: Optional[int] = None
    body_force: Optional[BodyForce] = None

    def __post_init__(self) -> None:
        if self.t_eval not in T_EVAL_MODES:
            raise ConfigurationError("t_eval must be one of {}, got {!r}".format(T_EVAL_MODES, self.t_eval))
        if self.quadrature is not None and self.quadrature < 1:
            raise ConfigurationError("quadrature must be >= 1, got {}".format(self.quadrature))

    def rule_for(self, patch: NurbsPatch, default: Optional[QuadratureRule] = None) -> QuadratureRule:
        if self.quadrature is not None:
            return tensor_rule(self.quadrature, self.quadrature)
        if default is not None:
            return default
        return tensor_rule(patch.degree_u + 1, patch.degree_v + 1)


@dataclass(frozen=True, eq=False)
class ElementSystem:
    """Element matrices, stacked over a leading element dimension when batched.

    ``stiffness`` is ``K_e``, ``load`` is ``f_e``. For the hybrid formulation ``G``, ``H`` and
    the lower Cholesky factor of ``H`` are kept for stress recovery.
    """

    stiffness: Tensor
    load: Tensor
    G: Optional[Tensor] = None
    H: Optional[Tensor] = None
    H_factor: Optional[Tensor] = None

    @property
    def is_hybrid(self) -> bool:
        return self.G is not None

    def select(self, index: int) -> "ElementSystem":
        def pick(t: Optional[Tensor]) -> Optional[Tensor]:
            return None if t is None else t[index]

        return ElementSystem(pick(self.stiffness), pick(self.load), pick(self.G), pick(self.H), pick(self.H_factor))

    def stress_parameters(self, u_e: Tensor) -> Tensor:
        """Recovers ``β̂ = H⁻¹ G ũ_e`` from element displacements ``[..., n_dof]``."""
        if not self.is_hybrid:
            raise ConfigurationError("stress parameters only exist for the hybrid formulation")
        rhs = self.G @ u_e.unsqueeze(-1)
        return torch.cholesky_solve(rhs, self.H_factor).squeeze(-1)


def physical_stress_basis(
    geometry: GeometryBatch, centroid_J: Optional[Tensor], basis: StressBasis, master: Tensor
) -> Tensor:
    """``T P`` at the points of ``geometry``, ``[E, G, 3, n_beta]``.

    ``centroid_J`` (``[E, 2, 2]``) replaces the per-point Jacobians when given.
    """
    P = basis.evaluate(master)
    if centroid_J is None:
        T = transformation_T(geometry.J)
    else:
        T = transformation_T(centroid_J)[:, None]
    return T @ P


def centroid_jacobians(patch: NurbsPatch, elements: Sequence[ElementGeometry]) -> Tensor:
    centre = torch.zeros(1, 2, dtype=DTYPE)
    return evaluate_elements(patch, elements, centre).J[:, 0]


def _load_vectors(geometry: GeometryBatch, weighted_det: Tensor, body_force: Optional[BodyForce]) -> Tensor:
    n_el, _, n_loc = geometry.R.shape
    if body_force is None:
        return torch.zeros(n_el, 2 * n_loc, dtype=geometry.R.dtype)
    forces = body_force(geometry.x.reshape(-1, 2)).reshape(geometry.x.shape)
    load = torch.einsum("eg,egk,egd->ekd", weighted_det, geometry.R, forces)
    return load.reshape(n_el, 2 * n_loc)


def compute_element_systems(
    patch: NurbsPatch,
    elements: Sequence[ElementGeometry],
    material: Material,
    formulation: Union[Formulation, str],
    stress_basis: Optional[StressBasis] = None,
    options: Optional[ElementOptions] = None,
) -> ElementSystem:
    """Element matrices of all ``elements`` at once, stacked along the first dimension.

    Conventional: ``K_e = Σ w detJ BᵀCB``. Hybrid: ``G = Σ w detJ (TP)ᵀB``,
    ``H = Σ w detJ (TP)ᵀS(TP)`` and ``K_e = Gᵀ H⁻¹ G`` through a Cholesky factor of ``H``.

    Raises:
        FormulationError: ``H`` is not positive definite, naming the element.
    """
    formulation = Formulation.parse(formulation)
    options = options or ElementOptions()
    rule = options.rule_for(patch, elements[0].quadrature if elements else None)
    geometry = evaluate_elements(patch, elements, rule.points)
    weighted_det = rule.weights[None, :] * geometry.det_J
    B = b_matrix(geometry.dR_dx)
    load = _load_vectors(geometry, weighted_det, options.body_force)

    if formulation is Formulation.CONVENTIONAL:
        C = material.stiffness_matrix()
        K = torch.einsum("eg,egai,ab,egbj->eij", weighted_det, B, C, B)
        return ElementSystem((K + K.mT) / 2, load)

    if stress_basis is None:
        if patch.degree_u != patch.degree_v:
            raise ConfigurationError(
                "the hybrid formulation needs equal degrees, got p={} and q={}".format(
                    patch.degree_u, patch.degree_v
                )
            )
        stress_basis = stress_basis_for_degree(patch.degree_u)
    centroid_J = centroid_jacobians(patch, elements) if options.t_eval == "centroid" else None
    TP = physical_stress_basis(geometry, centroid_J, stress_basis, rule.points)
    S = material.compliance_matrix()
    G = torch.einsum("eg,egai,egaj->eij", weighted_det, TP, B)
    H = torch.einsum("eg,egai,ab,egbj->eij", weighted_det, TP, S, TP)
    H = (H + H.mT) / 2

    L, info = torch.linalg.cholesky_ex(H)
    if bool((info != 0).any()):
        e = int(torch.nonzero(info)[0])
        raise FormulationError(
            "flexibility matrix H of element {} is not positive definite".format(elements[e].index),
            elements[e].index,
        )
    Y = torch.linalg.solve_triangular(L, G, upper=False)
    K = Y.mT @ Y
    return ElementSystem((K + K.mT) / 2, load, G, H, L)


def element_matrices_hybrid(
    patch: NurbsPatch,
    element: ElementGeometry,
    material: Material,
    stress_basis: Optional[StressBasis] = None,
    options: Optional[ElementOptions] = None,
) -> ElementSystem:
    """Condensed hybrid stiffness ``K_e = Gᵀ H⁻¹ G`` of a single element."""
    return compute_element_systems(patch, [element], material, Formulation.HYBRID, stress_basis, options).select(0)


def element_matrices_conventional(
    patch: NurbsPatch, element: ElementGeometry, material: Material, options: Optional[ElementOptions] = None
) -> ElementSystem:
    """Displacement-based stiffness ``K_e = Σ w detJ BᵀCB`` and load of a single element."""
    return compute_element_systems(patch, [element], material, Formulation.CONVENTIONAL, options=options).select(0)
