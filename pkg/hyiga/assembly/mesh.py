import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
from torch import Tensor

from hyiga.element import element_for, ElementGeometry, QuadratureRule, tensor_rule
from hyiga.nurbs import find_span, NurbsPatch

logger = logging.getLogger(__name__)

__all__ = ["Mesh", "build_mesh"]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Elements of a patch: one per pair of nonzero knot spans, ξ-spans fastest.

    ``connectivity[e]`` lists the global control points of element ``e``.
    """

    patch: NurbsPatch
    elements: Tuple[ElementGeometry, ...]
    connectivity: Tensor
    spans_u: Tuple[int, ...]
    spans_v: Tuple[int, ...]

    @property
    def num_elements(self) -> int:
        return len(self.elements)

    @property
    def shape(self) -> Tuple[int, int]:
        """Number of elements along ξ and η."""
        return len(self.spans_u), len(self.spans_v)

    @property
    def num_control_points(self) -> int:
        return self.patch.num_control_points

    @property
    def n_dof(self) -> int:
        return 2 * self.patch.num_control_points

    @property
    def element_dofs(self) -> Tensor:
        """``[E, 2 n_loc]`` interleaved dof indices."""
        c = self.connectivity
        return torch.stack([2 * c, 2 * c + 1], dim=-1).reshape(c.shape[0], -1)

    @property
    def quadrature(self) -> QuadratureRule:
        return self.elements[0].quadrature

    def element_at(self, xi: float, eta: float) -> ElementGeometry:
        """Element containing the parametric point (right-endpoint convention on shared edges)."""
        a = self.spans_u.index(find_span(self.patch.basis_u, xi))
        b = self.spans_v.index(find_span(self.patch.basis_v, eta))
        return self.elements[b * len(self.spans_u) + a]

    def element_lookup(self, spans_u: Tensor, spans_v: Tensor) -> Tensor:
        """Element indices for tensors of knot spans."""
        position_u = torch.full((self.patch.basis_u.num_basis + 1,), -1, dtype=torch.long)
        position_u[list(self.spans_u)] = torch.arange(len(self.spans_u))
        position_v = torch.full((self.patch.basis_v.num_basis + 1,), -1, dtype=torch.long)
        position_v[list(self.spans_v)] = torch.arange(len(self.spans_v))
        return position_v[spans_v] * len(self.spans_u) + position_u[spans_u]


def build_mesh(patch: NurbsPatch, quadrature: Optional[QuadratureRule] = None) -> Mesh:
    """Tensor-product element list and connectivity of ``patch``.

    Args:
        patch: the analysis patch.
        quadrature: element rule; ``(p + 1) x (q + 1)`` Gauss points by default.

    Example
        >>> mesh = build_mesh(insert_knot(load_patch("straight_beam_100"), "xi", 0.5))
        >>> mesh.connectivity
        tensor([[0, 1, 3, 4],
                [1, 2, 4, 5]])
    """
    if quadrature is None:
        quadrature = tensor_rule(patch.degree_u + 1, patch.degree_v + 1)
    spans_u = patch.basis_u.nonzero_spans
    spans_v = patch.basis_v.nonzero_spans
    elements = []
    for span_v in spans_v:
        for span_u in spans_u:
            elements.append(element_for(patch, len(elements), span_u, span_v, quadrature))
    connectivity = torch.stack([e.control_points for e in elements])
    logger.debug(
        "Built mesh of {}x{} elements over {} control points".format(
            len(spans_u), len(spans_v), patch.num_control_points
        )
    )
    return Mesh(patch, tuple(elements), connectivity, spans_u, spans_v)
