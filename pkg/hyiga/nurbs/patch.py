import json
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE, as_tensor
from hyiga.errors import InputError

from .knots import basis_functions, find_spans, KnotVector

logger = logging.getLogger(__name__)

__all__ = [
    "Edge",
    "NurbsPatch",
    "PatchBasis",
    "evaluate_basis",
    "nurbs_basis_2d",
    "surface_point",
    "surface_points",
    "load_patch",
    "available_patches",
]

_ASSETS = Path(__file__).parent / "assets"


class Edge(str, Enum):
    """The four edges of the parametric square of a patch."""

    XI_MIN = "xi_min"
    XI_MAX = "xi_max"
    ETA_MIN = "eta_min"
    ETA_MAX = "eta_max"

    @property
    def running_direction(self) -> int:
        """Parametric direction (0 = ξ, 1 = η) along which the edge runs."""
        return 1 if self in (Edge.XI_MIN, Edge.XI_MAX) else 0

    @property
    def fixed_direction(self) -> int:
        return 1 - self.running_direction

    @property
    def at_max(self) -> bool:
        return self in (Edge.XI_MAX, Edge.ETA_MAX)


@dataclass(frozen=True, eq=False)
class NurbsPatch:
    r"""Tensor-product NURBS surface.

    Control points are numbered with the ξ index fastest: the point ``(i, j)`` of the
    ``n_u x n_v`` net has global index ``I = j * n_u + i``.

    Args:
        basis_u: knot vector in ξ.
        basis_v: knot vector in η.
        control_points: ``[n_u * n_v, 2]`` physical coordinates.
        weights: ``[n_u * n_v]`` strictly positive weights.
    """

    basis_u: KnotVector
    basis_v: KnotVector
    control_points: Tensor
    weights: Tensor

    def __post_init__(self) -> None:
        control_points = as_tensor(self.control_points).clone()
        weights = as_tensor(self.weights).clone().reshape(-1)
        expected = self.basis_u.num_basis * self.basis_v.num_basis
        if control_points.dim() != 2 or control_points.shape != (expected, 2):
            raise InputError(
                "expected {} control points of dimension 2 for a {}x{} net, got shape {}".format(
                    expected, self.basis_u.num_basis, self.basis_v.num_basis, tuple(control_points.shape)
                )
            )
        if weights.numel() != expected:
            raise InputError("expected {} weights, got {}".format(expected, weights.numel()))
        if not bool(torch.isfinite(control_points).all()) or not bool(torch.isfinite(weights).all()):
            raise InputError("control points and weights must be finite")
        if not bool((weights > 0).all()):
            raise InputError("all weights must be strictly positive")
        object.__setattr__(self, "control_points", control_points)
        object.__setattr__(self, "weights", weights)

    @property
    def degree_u(self) -> int:
        return self.basis_u.degree

    @property
    def degree_v(self) -> int:
        return self.basis_v.degree

    @property
    def shape(self) -> Tuple[int, int]:
        """Size ``(n_u, n_v)`` of the control net."""
        return self.basis_u.num_basis, self.basis_v.num_basis

    @property
    def num_control_points(self) -> int:
        return self.control_points.shape[0]

    def basis(self, direction: int) -> KnotVector:
        return (self.basis_u, self.basis_v)[direction]

    def index(self, i: int, j: int) -> int:
        return j * self.basis_u.num_basis + i

    def edge_indices(self, edge: Union[Edge, str]) -> List[int]:
        """Global indices of the control points governing ``edge``, in running order."""
        edge = Edge(edge)
        transverse = self.basis(edge.fixed_direction)
        if not transverse.is_open:
            raise InputError("edge control points are only defined for open knot vectors")
        n_u, n_v = self.shape
        if edge is Edge.XI_MIN:
            return [self.index(0, j) for j in range(n_v)]
        if edge is Edge.XI_MAX:
            return [self.index(n_u - 1, j) for j in range(n_v)]
        if edge is Edge.ETA_MIN:
            return [self.index(i, 0) for i in range(n_u)]
        return [self.index(i, n_v - 1) for i in range(n_u)]

    def homogeneous_grid(self) -> Tensor:
        """``[n_v, n_u, 3]`` net of weighted coordinates ``(w x, w y, w)``."""
        n_u, n_v = self.shape
        weighted = torch.cat([self.control_points * self.weights[:, None], self.weights[:, None]], dim=1)
        return weighted.reshape(n_v, n_u, 3)

    @classmethod
    def from_homogeneous_grid(cls, basis_u: KnotVector, basis_v: KnotVector, grid: Tensor) -> "NurbsPatch":
        flat = grid.reshape(-1, 3)
        weights = flat[:, 2]
        return cls(basis_u, basis_v, flat[:, :2] / weights[:, None], weights)

    def transformed(self, matrix: Optional[Tensor] = None, offset: Optional[Sequence[float]] = None) -> "NurbsPatch":
        """Applies the affine map ``x -> matrix @ x + offset`` to the control net.

        Affine maps commute with the rational basis, so the result describes the mapped
        surface exactly.
        """
        points = self.control_points
        if matrix is not None:
            points = points @ as_tensor(matrix).T
        if offset is not None:
            points = points + as_tensor(offset)
        return NurbsPatch(self.basis_u, self.basis_v, points, self.weights)

    def rotated(self, angle: float) -> "NurbsPatch":
        c, s = math.cos(angle), math.sin(angle)
        return self.transformed(torch.tensor([[c, -s], [s, c]], dtype=DTYPE))

    def translated(self, offset: Sequence[float]) -> "NurbsPatch":
        return self.transformed(offset=offset)

    def with_control_points(self, control_points: Tensor) -> "NurbsPatch":
        return NurbsPatch(self.basis_u, self.basis_v, control_points, self.weights)

    def to_json(self) -> Dict[str, Any]:
        return {
            "degree_u": self.degree_u,
            "degree_v": self.degree_v,
            "knots_u": list(self.basis_u.knots),
            "knots_v": list(self.basis_v.knots),
            "cps": self.control_points.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "NurbsPatch":
        try:
            basis_u = KnotVector(int(data["degree_u"]), tuple(data["knots_u"]))
            basis_v = KnotVector(int(data["degree_v"]), tuple(data["knots_v"]))
            return cls(basis_u, basis_v, data["cps"], data["weights"])
        except KeyError as err:
            raise InputError("patch description is missing the field {}".format(err)) from err
        except (TypeError, ValueError) as err:
            if isinstance(err, InputError):
                raise
            raise InputError("malformed patch description: {}".format(err)) from err

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    def save(self, path: Union[str, Path]) -> None:
        Path(path).write_text(self.dumps(), encoding="utf8")

    @classmethod
    def load(cls, path: Union[str, Path]) -> "NurbsPatch":
        with open(path, "r", encoding="utf8") as fileobj:
            try:
                data = json.load(fileobj)
            except json.JSONDecodeError as err:
                raise InputError("{} is not valid JSON: {}".format(path, err)) from err
        return cls.from_json(data)


def available_patches() -> List[str]:
    """Names of the bundled geometry fixtures."""
    return sorted(p.stem for p in _ASSETS.glob("*.json"))


@lru_cache(maxsize=None)
def _load_fixture(name: str) -> NurbsPatch:
    path = _ASSETS / "{}.json".format(name)
    if not path.exists():
        raise InputError("unknown patch fixture {!r}; available: {}".format(name, ", ".join(available_patches())))
    return NurbsPatch.load(path)


def load_patch(name: str) -> NurbsPatch:
    """Loads a bundled fixture, e.g. ``"cook"`` or ``"straight_beam_100"``.

    Patches are immutable, so the cached instance is shared.
    """
    return _load_fixture(name)


class PatchBasis(NamedTuple):
    """Rational basis of a patch at ``N`` points.

    ``values`` is ``[N, n_loc]``, ``gradients`` is ``[N, 2, n_loc]`` (∂/∂ξ, ∂/∂η) and
    ``indices`` maps local to global control points, ``[N, n_loc]``. A single point drops the
    leading ``N``.
    """

    values: Tensor
    gradients: Tensor
    indices: Tensor


def evaluate_basis(
    patch: NurbsPatch,
    xi: Tensor,
    eta: Tensor,
    spans_u: Optional[Tensor] = None,
    spans_v: Optional[Tensor] = None,
) -> PatchBasis:
    """Batched NURBS basis ``R_I = N_i M_j w_I / W`` with quotient-rule gradients.

    Local function ``k = jj * (p + 1) + ii`` corresponds to ``N_{span_u - p + ii} M_{span_v - q + jj}``.
    """
    xi = as_tensor(xi).reshape(-1)
    eta = as_tensor(eta).reshape(-1)
    if spans_u is None:
        spans_u = find_spans(patch.basis_u, xi)
    if spans_v is None:
        spans_v = find_spans(patch.basis_v, eta)
    nu, dnu = basis_functions(patch.basis_u, xi, spans_u)
    nv, dnv = basis_functions(patch.basis_v, eta, spans_v)
    p, q = patch.degree_u, patch.degree_v
    n_u = patch.basis_u.num_basis

    rows = spans_v[:, None] - q + torch.arange(q + 1)[None, :]
    cols = spans_u[:, None] - p + torch.arange(p + 1)[None, :]
    indices = (rows[:, :, None] * n_u + cols[:, None, :]).reshape(xi.shape[0], -1)

    tensor_values = (nv[:, :, None] * nu[:, None, :]).reshape(xi.shape[0], -1)
    d_xi = (nv[:, :, None] * dnu[:, None, :]).reshape(xi.shape[0], -1)
    d_eta = (dnv[:, :, None] * nu[:, None, :]).reshape(xi.shape[0], -1)

    w = patch.weights[indices]
    weighted = tensor_values * w
    total = weighted.sum(dim=-1, keepdim=True)
    assert bool((total > 0).all()), "NURBS weight function must be positive"
    values = weighted / total
    grad_xi = (d_xi * w - values * (d_xi * w).sum(dim=-1, keepdim=True)) / total
    grad_eta = (d_eta * w - values * (d_eta * w).sum(dim=-1, keepdim=True)) / total
    return PatchBasis(values, torch.stack([grad_xi, grad_eta], dim=1), indices)


def nurbs_basis_2d(patch: NurbsPatch, xi: float, eta: float) -> PatchBasis:
    """The ``(p+1)(q+1)`` active rational basis functions at one parametric point.

    Returns values ``[n_loc]``, parametric gradients ``[2, n_loc]`` and global indices.
    """
    basis = evaluate_basis(patch, torch.tensor([float(xi)], dtype=DTYPE), torch.tensor([float(eta)], dtype=DTYPE))
    return PatchBasis(basis.values[0], basis.gradients[0], basis.indices[0])


def surface_points(patch: NurbsPatch, xi: Tensor, eta: Tensor) -> Tensor:
    """Physical points ``S(ξ, η)`` for 1-D tensors of parametric coordinates, ``[N, 2]``."""
    basis = evaluate_basis(patch, xi, eta)
    return torch.einsum("nk,nkd->nd", basis.values, patch.control_points[basis.indices])


def surface_point(patch: NurbsPatch, xi: float, eta: float) -> Tensor:
    """Physical point ``S(ξ, η) = Σ R_I P_I``.

    Example
        >>> surface_point(load_patch("straight_beam_100"), 1.0, 1.0)
        tensor([100.,   1.], dtype=torch.float64)
    """
    return surface_points(patch, torch.tensor([float(xi)], dtype=DTYPE), torch.tensor([float(eta)], dtype=DTYPE))[0]
