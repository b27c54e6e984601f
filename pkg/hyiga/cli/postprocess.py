import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import as_tensor, DTYPE
from hyiga.assembly import Mesh, Solution
from hyiga.element import (
    b_matrix,
    centroid_jacobians,
    evaluate_elements,
    Formulation,
    stress_basis_for_degree,
    StressBasis,
    transformation_T,
)
from hyiga.errors import ConfigurationError
from hyiga.material import Material
from hyiga.nurbs import find_spans

logger = logging.getLogger(__name__)

__all__ = ["StressSampler", "recover_stress", "FieldExport", "sample_field"]


@dataclass(frozen=True, eq=False)
class StressSampler:
    """Physical stress ``(σxx, σyy, σxy)`` of a solved mesh, evaluated element by element.

    Hybrid solutions use the recovered stress parameters, ``σ = T P β̂``; conventional ones
    the constitutive stress ``σ = C B ũ_e``.
    """

    solution: Solution
    mesh: Mesh
    material: Material
    stress_basis: Optional[StressBasis] = None
    beta: Optional[Tensor] = None

    def element_stress(self, elements: Tensor, master: Tensor) -> Tensor:
        """Stress at master points ``[N, 2]`` of the elements ``[N]`` (one point each), ``[N, 3]``.

        Raises:
            DomainError: a master point lies outside ``[-1, 1]²``.
        """
        elements = torch.as_tensor(elements, dtype=torch.long).reshape(-1)
        master = as_tensor(master).reshape(-1, 2)
        selected = [self.mesh.elements[int(e)] for e in elements]
        geometry = evaluate_elements(self.mesh.patch, selected, master[:, None, :])
        if self.beta is None:
            B = b_matrix(geometry.dR_dx[:, 0])  # [N, 3, n_dof]
            u_e = self.solution.element_displacements()[elements]
            return (self.material.stiffness_matrix() @ (B @ u_e.unsqueeze(-1))).squeeze(-1)
        if self.solution.options.t_eval == "centroid":
            J = centroid_jacobians(self.mesh.patch, selected)
        else:
            J = geometry.J[:, 0]
        TP = transformation_T(J) @ self.stress_basis.evaluate(master)
        return (TP @ self.beta[elements].unsqueeze(-1)).squeeze(-1)

    def locate(self, xi: Tensor, eta: Tensor) -> Tuple[Tensor, Tensor]:
        """Element indices and master coordinates of parametric points."""
        xi, eta = as_tensor(xi).reshape(-1), as_tensor(eta).reshape(-1)
        patch = self.mesh.patch
        spans_u, spans_v = find_spans(patch.basis_u, xi), find_spans(patch.basis_v, eta)
        knots_u, knots_v = patch.basis_u.to_tensor(), patch.basis_v.to_tensor()
        a, b = knots_u[spans_u], knots_u[spans_u + 1]
        c, d = knots_v[spans_v], knots_v[spans_v + 1]
        master = torch.stack([2 * (xi - a) / (b - a) - 1, 2 * (eta - c) / (d - c) - 1], dim=1)
        return self.mesh.element_lookup(spans_u, spans_v), master.clamp(-1.0, 1.0)

    def __call__(self, xi: Tensor, eta: Tensor) -> Tensor:
        """Stress at parametric points, ``[N, 3]``.

        Raises:
            DomainError: a point lies outside the knot range of the patch.
        """
        elements, master = self.locate(xi, eta)
        return self.element_stress(elements, master)


def recover_stress(
    solution: Solution,
    mesh: Optional[Mesh] = None,
    material: Optional[Material] = None,
    stress_basis: Optional[StressBasis] = None,
) -> StressSampler:
    """Builds the stress sampler of ``solution``, recovering ``β̂ = H⁻¹ G ũ_e`` once for all elements.

    Example
        >>> sampler = recover_stress(solution)
        >>> sampler(torch.tensor([0.5]), torch.tensor([0.5]))  # [1, 3]
    """
    mesh = mesh or solution.mesh
    material = material or solution.material
    if solution.formulation is not Formulation.HYBRID:
        return StressSampler(solution, mesh, material)
    if stress_basis is None:
        stress_basis = stress_basis_for_degree(mesh.patch.degree_u)
    beta = solution.stress_parameters()
    if beta.shape[-1] != stress_basis.n_beta:
        raise ConfigurationError(
            "solution has {} stress parameters per element, basis has {}".format(beta.shape[-1], stress_basis.n_beta)
        )
    return StressSampler(solution, mesh, material, stress_basis, beta)


@dataclass(frozen=True, eq=False)
class FieldExport:
    """Sampled solution ready for VTK output.

    Every element contributes an ``s x s`` grid of points (shared element edges are
    duplicated) and ``(s - 1)²`` quadrilateral cells. ``magnification`` only scales the
    ``warp`` vectors of the rendered file; ``displacement`` and ``deformed_control_points``
    hold the computed values.
    """

    title: str
    points: Tensor  # [N, 2]
    parametric: Tensor  # [N, 2]
    displacement: Tensor  # [N, 2]
    stress: Tensor  # [N, 3]
    cells: Tensor  # [M, 4]
    control_points: Tensor  # [n_cp, 2]
    control_displacements: Tensor  # [n_cp, 2]
    control_shape: Tuple[int, int]
    magnification: float = 1.0

    @property
    def deformed_control_points(self) -> Tensor:
        return self.control_points + self.control_displacements

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    @property
    def num_cells(self) -> int:
        return self.cells.shape[0]


def _grid_cells(num_elements: int, samples: int) -> Tensor:
    i = torch.arange(samples - 1)
    j = torch.arange(samples - 1)
    jj, ii = torch.meshgrid(j, i, indexing="ij")
    first = (jj * samples + ii).reshape(-1)
    local = torch.stack([first, first + 1, first + samples + 1, first + samples], dim=1)
    offsets = torch.arange(num_elements)[:, None, None] * samples * samples
    return (local[None] + offsets).reshape(-1, 4)


def sample_field(solution: Solution, samples: int = 3, magnification: float = 1.0, title: str = "") -> FieldExport:
    """Samples displacement and recovered stress on an ``s x s`` grid inside every element.

    Raises:
        ConfigurationError: ``samples < 2`` or a non-finite magnification.
    """
    if samples < 2:
        raise ConfigurationError("at least 2 samples per element direction are needed, got {}".format(samples))
    if not torch.isfinite(torch.tensor(float(magnification))):
        raise ConfigurationError("magnification must be finite, got {}".format(magnification))
    mesh = solution.mesh
    line = torch.linspace(-1.0, 1.0, samples, dtype=DTYPE)
    eta, xi = torch.meshgrid(line, line, indexing="ij")
    master = torch.stack([xi.reshape(-1), eta.reshape(-1)], dim=1)  # ξ fastest

    geometry = evaluate_elements(mesh.patch, mesh.elements, master)
    u_elements = solution.control_displacements()[mesh.connectivity]
    displacement = torch.einsum("egk,ekd->egd", geometry.R, u_elements).reshape(-1, 2)

    n_el, n_pts = geometry.x.shape[:2]
    element_index = torch.arange(n_el).repeat_interleave(n_pts)
    stress = recover_stress(solution).element_stress(element_index, master.repeat(n_el, 1))
    logger.debug("Sampled {} points in {} elements".format(n_el * n_pts, n_el))
    return FieldExport(
        title=title or "hyiga {} solution".format(solution.formulation.value),
        points=geometry.x.reshape(-1, 2),
        parametric=geometry.parametric.reshape(-1, 2),
        displacement=displacement,
        stress=stress,
        cells=_grid_cells(n_el, samples),
        control_points=mesh.patch.control_points,
        control_displacements=solution.control_displacements(),
        control_shape=mesh.patch.shape,
        magnification=float(magnification),
    )
