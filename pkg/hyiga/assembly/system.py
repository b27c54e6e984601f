import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Tuple, Union

import numpy as np
import scipy.io
import scipy.sparse
import scipy.sparse.linalg
import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE
from hyiga.element import compute_element_systems, ElementOptions, ElementSystem, Formulation, gauss_legendre
from hyiga.errors import InputError, ResidualError, SingularSystemError
from hyiga.material import Material
from hyiga.nurbs import Edge, evaluate_basis, NurbsPatch

from .boundary import BoundaryCondition, BoundaryKind
from .mesh import Mesh
from .solution import Solution

logger = logging.getLogger(__name__)

__all__ = [
    "GlobalSystem",
    "ReducedSystem",
    "assemble",
    "apply_traction",
    "apply_dirichlet",
    "solve",
    "edge_quadrature",
    "export_matrix_market",
    "RESIDUAL_TOLERANCE",
    "ROUNDOFF_FACTOR",
]

RESIDUAL_TOLERANCE = 1e-10
# backward error allowance in units of eps * sqrt(n)
ROUNDOFF_FACTOR = 256.0


@dataclass(eq=False)
class GlobalSystem:
    """Global stiffness ``K`` (CSR), load ``f`` and the element systems it was built from."""

    mesh: Mesh
    material: Material
    formulation: Formulation
    options: ElementOptions
    stiffness: scipy.sparse.csr_matrix
    load: Tensor
    element_systems: ElementSystem
    constrained: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def n_dof(self) -> int:
        return self.mesh.n_dof

    def dense_stiffness(self) -> Tensor:
        return torch.from_numpy(self.stiffness.toarray())


@dataclass(eq=False)
class ReducedSystem:
    """Free-dof block of a :class:`GlobalSystem` after eliminating homogeneous constraints."""

    system: GlobalSystem
    free: Tensor
    constrained: Tensor
    stiffness: scipy.sparse.csr_matrix
    load: Tensor

    @property
    def active_dofs(self) -> int:
        return int(self.free.numel())


def assemble(
    mesh: Mesh,
    material: Material,
    formulation: Union[Formulation, str],
    options: Optional[ElementOptions] = None,
) -> GlobalSystem:
    """Scatter-adds the element stiffnesses (and body-force loads) into a sparse global system.

    Element contributions are merged through a COO -> CSR conversion, which sums duplicate
    entries in a fixed order.
    """
    formulation = Formulation.parse(formulation)
    options = options or ElementOptions()
    systems = compute_element_systems(mesh.patch, mesh.elements, material, formulation, options=options)

    dofs = mesh.element_dofs
    n_el, n_loc_dof = dofs.shape
    rows = dofs[:, :, None].expand(n_el, n_loc_dof, n_loc_dof).reshape(-1).numpy()
    cols = dofs[:, None, :].expand(n_el, n_loc_dof, n_loc_dof).reshape(-1).numpy()
    values = systems.stiffness.reshape(-1).numpy()
    K = scipy.sparse.coo_matrix((values, (rows, cols)), shape=(mesh.n_dof, mesh.n_dof)).tocsr()

    f = torch.zeros(mesh.n_dof, dtype=DTYPE)
    f.index_add_(0, dofs.reshape(-1), systems.load.reshape(-1))
    logger.debug(
        "Assembled {} system: {} elements, {} dofs, {} nonzeros".format(
            formulation.value, n_el, mesh.n_dof, K.nnz
        )
    )
    return GlobalSystem(mesh, material, formulation, options, K, f, systems)


def edge_quadrature(patch: NurbsPatch, edge: Union[Edge, str], points_per_span: Optional[int] = None):
    """Gauss points along ``edge``: parametric points ``[N, 2]`` and parametric weights ``[N]``.

    Every nonzero knot span of the edge gets ``points_per_span`` points (degree + 2 by default).
    """
    edge = Edge(edge)
    kv = patch.basis(edge.running_direction)
    lo, hi = patch.basis(edge.fixed_direction).domain
    fixed = hi if edge.at_max else lo
    if points_per_span is None:
        points_per_span = kv.degree + 2
    g, w = gauss_legendre(points_per_span)
    coords, weights = [], []
    for span in kv.nonzero_spans:
        a, b = kv.span_bounds(span)
        coords.append(a + (b - a) * (g + 1.0) / 2.0)
        weights.append(w * (b - a) / 2.0)
    running = torch.cat(coords)
    fixed_coords = torch.full_like(running, fixed)
    if edge.running_direction == 0:
        parametric = torch.stack([running, fixed_coords], dim=1)
    else:
        parametric = torch.stack([fixed_coords, running], dim=1)
    return parametric, torch.cat(weights)


def _add_point_load(system: GlobalSystem, bc: BoundaryCondition) -> Tensor:
    index = bc.control_point
    if not 0 <= index < system.mesh.num_control_points:
        raise InputError("point load on control point {} outside the net".format(index))
    system.load[2 * index : 2 * index + 2] += bc.force
    return system.load


def apply_traction(system: GlobalSystem, bc: BoundaryCondition, mesh: Optional[Mesh] = None) -> Tensor:
    """Adds the consistent nodal forces ``∫ Rᵀ t dΓ`` of a traction (or point load) to ``system.load``.

    Raises:
        InputError: the traction evaluates to non-finite values, or ``bc`` is a constraint.
    """
    mesh = mesh or system.mesh
    if bc.kind is BoundaryKind.POINT_LOAD:
        return _add_point_load(system, bc)
    if bc.kind is not BoundaryKind.TRACTION:
        raise InputError("apply_traction expects a traction or point load, got {}".format(bc.kind.value))

    patch = mesh.patch
    parametric, weights = edge_quadrature(patch, bc.edge)
    basis = evaluate_basis(patch, parametric[:, 0], parametric[:, 1])
    X = patch.control_points[basis.indices]
    x = torch.einsum("nk,nkd->nd", basis.values, X)
    tangent = torch.einsum("nk,nkd->nd", basis.gradients[:, bc.edge.running_direction], X)
    ds = torch.linalg.norm(tangent, dim=1) * weights

    traction = torch.as_tensor(bc.traction_fn(x), dtype=DTYPE).reshape(-1, 2)
    if not bool(torch.isfinite(traction).all()):
        raise InputError("traction on edge {} is not finite".format(bc.edge.value))
    forces = basis.values[:, :, None] * (traction * ds[:, None])[:, None, :]  # [N, n_loc, 2]
    dofs = torch.stack([2 * basis.indices, 2 * basis.indices + 1], dim=-1)
    system.load.index_add_(0, dofs.reshape(-1), forces.reshape(-1))
    return system.load


def _constrained_dofs(patch: NurbsPatch, bcs: Iterable[BoundaryCondition]) -> Tuple[int, ...]:
    constrained = set()
    for bc in bcs:
        if bc.kind is not BoundaryKind.FIXED:
            continue
        for index in patch.edge_indices(bc.edge):
            constrained.update(2 * index + c for c in bc.components)
    return tuple(sorted(constrained))


def apply_dirichlet(
    system: GlobalSystem, bcs: Union[BoundaryCondition, Iterable[BoundaryCondition]]
) -> ReducedSystem:
    """Eliminates the dofs fixed by ``bcs`` (homogeneous), keeping ``K_ff`` symmetric.

    Raises:
        InputError: every dof is constrained.
    """
    if isinstance(bcs, BoundaryCondition):
        bcs = [bcs]
    constrained = _constrained_dofs(system.mesh.patch, bcs)
    if len(constrained) >= system.n_dof:
        raise InputError("all {} dofs are constrained".format(system.n_dof))
    mask = np.ones(system.n_dof, dtype=bool)
    mask[list(constrained)] = False
    free = np.nonzero(mask)[0]
    system.constrained = constrained
    reduced = system.stiffness[free][:, free].tocsr()
    return ReducedSystem(
        system,
        torch.from_numpy(free),
        torch.tensor(constrained, dtype=torch.long),
        reduced,
        system.load[torch.from_numpy(free)],
    )


def _relative_residual(K: Tensor, u: Tensor, f: Tensor, scale: float) -> Tuple[Tensor, float]:
    r = f - K @ u
    norm = float(torch.linalg.norm(r))
    return r, norm / scale if scale > 0 else norm


def solve(reduced: ReducedSystem) -> Solution:
    """Dense Cholesky solve of ``K_ff u_f = f_f``; reactions are ``K u - f`` at constrained dofs.

    The relative residual must meet ``max(RESIDUAL_TOLERANCE, ROUNDOFF_FACTOR * eps * sqrt(n) *
    (|K| |u| + |f|) / |f|)`` (Frobenius norm of ``K``). The second term is the floor float64 reaches
    on stiff, slender meshes. One step of iterative refinement is kept when it lowers the residual.

    Raises:
        SingularSystemError: the factorization breaks down, naming the global dof of the
            first failing pivot.
        ResidualError: the residual misses its bound.
    """
    K = torch.from_numpy(reduced.stiffness.toarray())
    f = reduced.load
    L, info = torch.linalg.cholesky_ex(K)
    if int(info) > 0:
        dof = int(reduced.free[int(info) - 1])
        raise SingularSystemError(
            "reduced stiffness is not positive definite: pivot {} (global dof {}) failed".format(int(info), dof), dof
        )
    scale = float(torch.linalg.norm(f))
    u_free = torch.cholesky_solve(f[:, None], L)[:, 0]
    r, residual = _relative_residual(K, u_free, f, scale)
    refined = u_free + torch.cholesky_solve(r[:, None], L)[:, 0]
    _, refined_residual = _relative_residual(K, refined, f, scale)
    if refined_residual < residual:
        u_free, residual = refined, refined_residual

    system = reduced.system
    stiffness_norm = float(scipy.sparse.linalg.norm(system.stiffness))
    eps = torch.finfo(DTYPE).eps
    force_scale = stiffness_norm * float(torch.linalg.norm(u_free)) + scale
    roundoff = ROUNDOFF_FACTOR * eps * math.sqrt(K.shape[0]) * force_scale
    tolerance = max(RESIDUAL_TOLERANCE, roundoff / scale) if scale > 0 else RESIDUAL_TOLERANCE
    if residual > tolerance:
        raise ResidualError(
            "relative residual {:.3e} exceeds its bound {:.3e}".format(residual, tolerance), residual, tolerance
        )
    if tolerance > RESIDUAL_TOLERANCE:
        logger.debug("Relative residual {:.3e} held to the round-off bound {:.3e}".format(residual, tolerance))

    u = torch.zeros(system.n_dof, dtype=DTYPE)
    u[reduced.free] = u_free
    internal = torch.from_numpy(system.stiffness @ u.numpy())
    reactions = (internal - system.load)[reduced.constrained]
    logger.debug("Solved {} active dofs, residual {:.3e}".format(reduced.active_dofs, residual))
    return Solution(
        mesh=system.mesh,
        material=system.material,
        formulation=system.formulation,
        options=system.options,
        displacement=u,
        load=system.load.clone(),
        constrained=reduced.constrained,
        reactions=reactions,
        residual=residual,
        residual_tolerance=tolerance,
        roundoff=roundoff,
        active_dofs=reduced.active_dofs,
        element_systems=system.element_systems,
    )


def export_matrix_market(
    system: Union[GlobalSystem, ReducedSystem], path: Optional[Union[str, Path]] = None
) -> bytes:
    """Matrix Market (coordinate, symmetric) rendering of the stiffness; written to ``path`` if given."""
    buffer = io.BytesIO()
    comment = "hyiga {} stiffness".format("reduced" if isinstance(system, ReducedSystem) else "global")
    scipy.io.mmwrite(buffer, system.stiffness.tocoo(), comment=comment, symmetry="symmetric")
    content = buffer.getvalue()
    if path is not None:
        try:
            Path(path).write_bytes(content)
        except OSError as err:
            raise OSError("Failed to write {}: {}".format(path, err)) from err
    return content
