from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import as_tensor
from hyiga.errors import ConfigurationError

__all__ = ["StressBasis", "stress_basis_for_degree", "SUPPORTED_DEGREES"]

Monomials = Tuple[Tuple[int, int], ...]

# (a, b) stands for ξ̃^a η̃^b; rows are the τξξ, τηη and τξη components
_LAYOUTS = {
    1: (
        ((0, 0), (0, 1)),
        ((0, 0), (1, 0)),
        ((0, 0),),
    ),
    2: (
        ((0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)),
        ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (2, 1)),
        ((0, 0), (1, 0), (0, 1), (1, 1)),
    ),
    3: (
        ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2), (2, 3), (1, 3), (0, 3)),
        ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2), (3, 1), (3, 2), (3, 0)),
        ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (2, 1), (1, 2), (2, 2)),
    ),
}

SUPPORTED_DEGREES = tuple(sorted(_LAYOUTS))


@dataclass(frozen=True)
class StressBasis:
    r"""Stress interpolation :math:`P(\tilde\xi, \tilde\eta)` in master coordinates.

    Every β column belongs to exactly one stress row, so ``P`` is block diagonal with
    blocks of ``len(rows[r])`` monomials.
    """

    degree: Tuple[int, int]
    rows: Tuple[Monomials, Monomials, Monomials]

    @property
    def n_beta(self) -> int:
        return sum(len(row) for row in self.rows)

    def evaluate(self, points: Tensor) -> Tensor:
        """``P`` at master points ``[..., 2]``, shape ``[..., 3, n_beta]``."""
        points = as_tensor(points)
        xi, eta = points[..., 0], points[..., 1]
        matrix = torch.zeros(points.shape[:-1] + (3, self.n_beta), dtype=points.dtype)
        column = 0
        for r, monomials in enumerate(self.rows):
            for a, b in monomials:
                matrix[..., r, column] = xi**a * eta**b
                column += 1
        return matrix


@lru_cache(maxsize=None)
def stress_basis_for_degree(p: int) -> StressBasis:
    """Stress basis for equal-degree elements: 5, 16 or 33 parameters for ``p = 1, 2, 3``.

    Raises:
        ConfigurationError: no basis is defined for ``p``.
    """
    if p not in _LAYOUTS:
        raise ConfigurationError(
            "no stress basis for degree {}; supported degrees are {}".format(p, SUPPORTED_DEGREES)
        )
    return StressBasis((p, p), _LAYOUTS[p])
