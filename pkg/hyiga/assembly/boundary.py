from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

from torch import Tensor

from hyiga._internal.tensor_utils import as_tensor
from hyiga.errors import InputError
from hyiga.nurbs import Edge

__all__ = ["BoundaryKind", "BoundaryCondition", "TractionFunction"]

TractionFunction = Callable[[Tensor], Tensor]


class BoundaryKind(str, Enum):
    FIXED = "fixed"
    TRACTION = "traction"
    POINT_LOAD = "point_load"


def _constant_traction(value: Sequence[float]) -> TractionFunction:
    constant = as_tensor(value).reshape(2)

    def traction(points: Tensor) -> Tensor:
        return constant.expand(points.shape[0], 2)

    return traction


@dataclass(frozen=True, eq=False)
class BoundaryCondition:
    """Homogeneous edge constraint, edge traction or control point load.

    Use the :meth:`fixed`, :meth:`traction` and :meth:`point_load` constructors.

    Example
        >>> clamp = BoundaryCondition.fixed("xi_min")
        >>> symmetry = BoundaryCondition.fixed("eta_min", components=(1,))
        >>> shear = BoundaryCondition.traction("xi_max", (0.0, 6.25))
    """

    kind: BoundaryKind
    edge: Optional[Edge] = None
    components: Tuple[int, ...] = (0, 1)
    traction_fn: Optional[TractionFunction] = None
    control_point: Optional[int] = None
    force: Optional[Tensor] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", BoundaryKind(self.kind))
        if self.edge is not None:
            object.__setattr__(self, "edge", Edge(self.edge))
        if self.kind is not BoundaryKind.POINT_LOAD and self.edge is None:
            raise InputError("{} boundary conditions need an edge".format(self.kind.value))
        if not self.components or any(c not in (0, 1) for c in self.components):
            raise InputError("components must be a non-empty subset of (0, 1), got {}".format(self.components))
        if self.kind is BoundaryKind.TRACTION and self.traction_fn is None:
            raise InputError("traction boundary conditions need a traction function")
        if self.kind is BoundaryKind.POINT_LOAD and (self.control_point is None or self.force is None):
            raise InputError("point loads need a control point index and a force")

    @classmethod
    def fixed(cls, edge: Union[Edge, str], components: Sequence[int] = (0, 1)) -> "BoundaryCondition":
        """Zero displacement of ``components`` (0 = x, 1 = y) at every control point of ``edge``."""
        return cls(BoundaryKind.FIXED, Edge(edge), tuple(components))

    @classmethod
    def traction(
        cls, edge: Union[Edge, str], traction: Union[TractionFunction, Sequence[float]]
    ) -> "BoundaryCondition":
        """Traction ``t(x)`` on ``edge``; a pair of numbers means a constant traction."""
        fn = traction if callable(traction) else _constant_traction(traction)
        return cls(BoundaryKind.TRACTION, Edge(edge), traction_fn=fn)

    @classmethod
    def point_load(cls, control_point: int, force: Sequence[float]) -> "BoundaryCondition":
        return cls(
            BoundaryKind.POINT_LOAD,
            control_point=int(control_point),
            force=as_tensor(force).reshape(2),
        )
