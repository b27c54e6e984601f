import math
from dataclasses import dataclass, replace

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import as_tensor
from hyiga.element import ElementOptions, ElementSystem, Formulation
from hyiga.errors import ConfigurationError
from hyiga.material import Material
from hyiga.nurbs import evaluate_basis

from .mesh import Mesh

__all__ = ["Solution", "EQUILIBRIUM_TOLERANCE"]

EQUILIBRIUM_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class Solution:
    """Result of :func:`~hyiga.assembly.solve`.

    ``displacement`` holds the control point displacements ``ũ`` (interleaved, all dofs),
    ``reactions`` the forces ``K ũ - f`` at the ``constrained`` dofs. ``residual`` is the relative
    residual of the reduced system and ``residual_tolerance`` the bound it met; ``roundoff`` is the
    absolute force error float64 allows on this system.
    """

    mesh: Mesh
    material: Material
    formulation: Formulation
    options: ElementOptions
    displacement: Tensor
    load: Tensor
    constrained: Tensor
    reactions: Tensor
    residual: float
    residual_tolerance: float
    roundoff: float
    active_dofs: int
    element_systems: ElementSystem

    def control_displacements(self) -> Tensor:
        """``[n_cp, 2]`` displacement of every control point."""
        return self.displacement.reshape(-1, 2)

    def deformed_control_points(self) -> Tensor:
        """New control net ``P + ũ``; describes the deformed geometry exactly."""
        return self.mesh.patch.control_points + self.control_displacements()

    def element_displacements(self) -> Tensor:
        """``[E, 2 n_loc]`` element dof values."""
        return self.displacement[self.mesh.element_dofs]

    def stress_parameters(self) -> Tensor:
        """Recovered ``β̂`` of every element, ``[E, n_beta]``."""
        if self.formulation is not Formulation.HYBRID:
            raise ConfigurationError("stress parameters only exist for the hybrid formulation")
        return self.element_systems.stress_parameters(self.element_displacements())

    def displacement_at(self, xi: Tensor, eta: Tensor) -> Tensor:
        """``u_h(ξ, η) = Σ R_I ũ_I`` for 1-D tensors of parametric coordinates, ``[N, 2]``."""
        basis = evaluate_basis(self.mesh.patch, as_tensor(xi), as_tensor(eta))
        return torch.einsum("nk,nkd->nd", basis.values, self.control_displacements()[basis.indices])

    def scaled(self, factor: float) -> "Solution":
        """Copy whose displacement field is multiplied by ``factor``."""
        return replace(self, displacement=self.displacement * factor)

    def total_reaction(self) -> Tensor:
        """Sum of reactions per component ``(R_x, R_y)``."""
        totals = torch.zeros(2, dtype=self.reactions.dtype)
        totals.index_add_(0, self.constrained % 2, self.reactions)
        return totals

    def total_load(self) -> Tensor:
        return self.load.reshape(-1, 2).sum(dim=0)

    def equilibrium_imbalance(self) -> float:
        """``|ΣR + Σf| / |Σf|``, zero for an unloaded system."""
        load = self.total_load()
        scale = float(torch.linalg.norm(load))
        imbalance = float(torch.linalg.norm(self.total_reaction() + load))
        return imbalance / scale if scale > 0 else imbalance

    def equilibrium_tolerance(self) -> float:
        """``EQUILIBRIUM_TOLERANCE``, widened to the summed round-off on ill-conditioned systems."""
        scale = float(torch.linalg.norm(self.total_load()))
        if scale == 0:
            return EQUILIBRIUM_TOLERANCE
        return max(EQUILIBRIUM_TOLERANCE, math.sqrt(self.displacement.numel()) * self.roundoff / scale)
