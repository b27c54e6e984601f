import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE, as_tensor
from hyiga.errors import DomainError, ElementError, MeshError
from hyiga.nurbs import evaluate_basis, NurbsPatch

from .quadrature import QuadratureRule

logger = logging.getLogger(__name__)

__all__ = [
    "ElementGeometry",
    "GeometryBatch",
    "Jacobians",
    "evaluate_elements",
    "element_for",
    "to_parametric",
    "jacobians",
    "transformation_T",
    "b_matrix",
    "strain_displacement_B",
]

# relative threshold below which J1 is treated as singular
_SINGULAR_TOLERANCE = 1e-14


@dataclass(frozen=True, eq=False)
class ElementGeometry:
    """One knot-span element of a patch.

    Args:
        index: position of the element in its mesh (ξ-spans fastest).
        span_u, span_v: knot span indices of the element.
        bounds_u, bounds_v: parametric extent ``[ξ₁, ξ₂]`` and ``[η₁, η₂]``.
        control_points: global indices of the ``(p+1)(q+1)`` active control points.
        quadrature: master-square rule used for the element integrals.
    """

    index: int
    span_u: int
    span_v: int
    bounds_u: Tuple[float, float]
    bounds_v: Tuple[float, float]
    control_points: Tensor
    quadrature: QuadratureRule

    def __post_init__(self) -> None:
        if not (self.bounds_u[1] > self.bounds_u[0] and self.bounds_v[1] > self.bounds_v[0]):
            raise MeshError("element {} has an empty parametric span".format(self.index), self.index)

    @property
    def dofs(self) -> Tensor:
        """Interleaved ``(u_x, u_y)`` global dof indices of the element."""
        return torch.stack([2 * self.control_points, 2 * self.control_points + 1], dim=1).reshape(-1)


class GeometryBatch(NamedTuple):
    """Geometric quantities of ``E`` elements at ``G`` master points each.

    ``J1[e, g, i, j] = ∂x_j/∂ξ_i`` (parametric to physical), ``J = J2 J1`` (master to physical).
    """

    parametric: Tensor  # [E, G, 2]
    x: Tensor  # [E, G, 2]
    R: Tensor  # [E, G, n_loc]
    dR_dx: Tensor  # [E, G, 2, n_loc]
    J1: Tensor  # [E, G, 2, 2]
    J2: Tensor  # [E, 2, 2]
    J: Tensor  # [E, G, 2, 2]
    det_J: Tensor  # [E, G]


class Jacobians(NamedTuple):
    J1: Tensor
    J2: Tensor
    J: Tensor
    det_J: Tensor


def _bounds(elements: Sequence[ElementGeometry]) -> Tuple[Tensor, Tensor]:
    bounds_u = torch.tensor([e.bounds_u for e in elements], dtype=DTYPE)
    bounds_v = torch.tensor([e.bounds_v for e in elements], dtype=DTYPE)
    return bounds_u, bounds_v


def to_parametric(elements: Sequence[ElementGeometry], master: Tensor) -> Tensor:
    """Maps master points ``[G, 2]`` (or ``[E, G, 2]``) into each element, ``[E, G, 2]``."""
    master = as_tensor(master)
    if master.dim() == 2:
        master = master.expand(len(elements), -1, -1)
    if bool(((master < -1.0 - 1e-12) | (master > 1.0 + 1e-12)).any()):
        raise DomainError("master coordinates must lie in [-1, 1]^2")
    bounds_u, bounds_v = _bounds(elements)
    xi = bounds_u[:, :1] + (bounds_u[:, 1:] - bounds_u[:, :1]) * (master[..., 0] + 1.0) / 2.0
    eta = bounds_v[:, :1] + (bounds_v[:, 1:] - bounds_v[:, :1]) * (master[..., 1] + 1.0) / 2.0
    return torch.stack([xi, eta], dim=-1)


def evaluate_elements(patch: NurbsPatch, elements: Sequence[ElementGeometry], master: Tensor) -> GeometryBatch:
    """Evaluates the mapping of every element at the master points ``master``.

    ``master`` is ``[G, 2]`` (same points for every element) or ``[E, G, 2]``.

    Raises:
        MeshError: ``det J <= 0`` somewhere, naming the first offending element.
        ElementError: ``J1`` is singular.
    """
    n_el = len(elements)
    parametric = to_parametric(elements, master)
    n_pts = parametric.shape[1]
    spans_u = torch.tensor([e.span_u for e in elements]).repeat_interleave(n_pts)
    spans_v = torch.tensor([e.span_v for e in elements]).repeat_interleave(n_pts)
    basis = evaluate_basis(
        patch, parametric[..., 0].reshape(-1), parametric[..., 1].reshape(-1), spans_u=spans_u, spans_v=spans_v
    )
    n_loc = basis.values.shape[-1]
    R = basis.values.reshape(n_el, n_pts, n_loc)
    dR = basis.gradients.reshape(n_el, n_pts, 2, n_loc)
    X = patch.control_points[basis.indices.reshape(n_el, n_pts, n_loc)]  # [E, G, n_loc, 2]

    x = torch.einsum("egk,egkd->egd", R, X)
    J1 = torch.einsum("egik,egkd->egid", dR, X)
    bounds_u, bounds_v = _bounds(elements)
    half_widths = torch.stack([bounds_u[:, 1] - bounds_u[:, 0], bounds_v[:, 1] - bounds_v[:, 0]], dim=1) / 2
    J2 = torch.diag_embed(half_widths)
    J = J2[:, None] @ J1
    det_J = torch.linalg.det(J)

    bad = (det_J <= 0).any(dim=1)
    if bool(bad.any()):
        e = int(torch.nonzero(bad)[0])
        raise MeshError(
            "non-positive Jacobian determinant {:.6g} in element {} (inverted or degenerate element)".format(
                float(det_J[e].min()), elements[e].index
            ),
            elements[e].index,
        )
    det_J1 = torch.linalg.det(J1)
    scale = J1.abs().amax(dim=(-2, -1)) ** 2
    singular = (det_J1.abs() <= _SINGULAR_TOLERANCE * scale).any(dim=1)
    if bool(singular.any()):
        e = int(torch.nonzero(singular)[0])
        raise ElementError("singular parametric Jacobian in element {}".format(elements[e].index), elements[e].index)

    dR_dx = torch.linalg.solve(J1, dR)
    return GeometryBatch(parametric, x, R, dR_dx, J1, J2, J, det_J)


def jacobians(patch: NurbsPatch, element: ElementGeometry, point: Tensor) -> Jacobians:
    """``J1``, ``J2``, ``J = J2 J1`` and ``det J`` of ``element`` at one master point.

    Example
        >>> # unit square, one bilinear element
        >>> jacobians(patch, element, torch.zeros(2)).J
        tensor([[0.5000, 0.0000],
                [0.0000, 0.5000]], dtype=torch.float64)
    """
    batch = evaluate_elements(patch, [element], as_tensor(point).reshape(1, 2))
    return Jacobians(batch.J1[0, 0], batch.J2[0], batch.J[0, 0], batch.det_J[0, 0])


def transformation_T(J: Tensor) -> Tensor:
    r"""Voigt matrix ``T`` pushing master stress components to physical ones.

    With ``J[i][j] = ∂x_j/∂ξ̃_i`` the stress tensor maps as :math:`\sigma = J^T \tilde\tau J`.
    Works on any batch of ``[..., 2, 2]`` matrices.
    """
    J = as_tensor(J)
    j11, j12 = J[..., 0, 0], J[..., 0, 1]
    j21, j22 = J[..., 1, 0], J[..., 1, 1]
    rows = [
        torch.stack([j11 * j11, j21 * j21, 2 * j11 * j21], dim=-1),
        torch.stack([j12 * j12, j22 * j22, 2 * j12 * j22], dim=-1),
        torch.stack([j11 * j12, j21 * j22, j11 * j22 + j12 * j21], dim=-1),
    ]
    return torch.stack(rows, dim=-2)


def b_matrix(dR_dx: Tensor) -> Tensor:
    """Strain-displacement matrices from physical gradients ``[..., 2, n_loc]`` -> ``[..., 3, 2 n_loc]``.

    Rows give ``(ε_xx, ε_yy, γ_xy)`` for interleaved ``(u_x, u_y)`` dofs.
    """
    dx, dy = dR_dx[..., 0, :], dR_dx[..., 1, :]
    zeros = torch.zeros_like(dx)
    rows = [
        torch.stack([dx, zeros], dim=-1),
        torch.stack([zeros, dy], dim=-1),
        torch.stack([dy, dx], dim=-1),
    ]
    return torch.stack([r.flatten(start_dim=-2) for r in rows], dim=-2)


def strain_displacement_B(patch: NurbsPatch, element: ElementGeometry, point: Tensor) -> Tensor:
    """``3 x n_dof`` matrix ``B`` of ``element`` at one master point."""
    batch = evaluate_elements(patch, [element], as_tensor(point).reshape(1, 2))
    return b_matrix(batch.dR_dx[0, 0])


def element_for(
    patch: NurbsPatch,
    index: int,
    span_u: int,
    span_v: int,
    quadrature: QuadratureRule,
    control_points: Optional[Tensor] = None,
) -> ElementGeometry:
    """Builds the :class:`ElementGeometry` of the knot span ``(span_u, span_v)``."""
    p, q = patch.degree_u, patch.degree_v
    if control_points is None:
        n_u = patch.basis_u.num_basis
        rows = torch.arange(span_v - q, span_v + 1)
        cols = torch.arange(span_u - p, span_u + 1)
        control_points = (rows[:, None] * n_u + cols[None, :]).reshape(-1)
    return ElementGeometry(
        index,
        span_u,
        span_v,
        patch.basis_u.span_bounds(span_u),
        patch.basis_v.span_bounds(span_v),
        control_points,
        quadrature,
    )
