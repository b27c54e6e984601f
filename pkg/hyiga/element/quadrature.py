from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE
from hyiga.errors import ConfigurationError

__all__ = ["QuadratureRule", "gauss_legendre", "tensor_rule"]


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Points in the master square ``[-1, 1]^2`` (``[G, 2]``) and their weights (``[G]``).

    Points are ordered with the ξ̃ index fastest.
    """

    points: Tensor
    weights: Tensor
    points_per_direction: Tuple[int, int]

    @property
    def num_points(self) -> int:
        return self.weights.shape[0]


@lru_cache(maxsize=None)
def _leggauss(n: int) -> Tuple[Tuple[float, ...], Tuple[float, ...]]:
    points, weights = np.polynomial.legendre.leggauss(n)
    return tuple(points.tolist()), tuple(weights.tolist())


def gauss_legendre(n: int) -> Tuple[Tensor, Tensor]:
    """``n``-point Gauss-Legendre nodes and weights on ``[-1, 1]``, exact to degree ``2n - 1``."""
    if n < 1:
        raise ConfigurationError("number of Gauss points must be >= 1, got {}".format(n))
    points, weights = _leggauss(n)
    return torch.tensor(points, dtype=DTYPE), torch.tensor(weights, dtype=DTYPE)


def tensor_rule(nu: int, nv: int) -> QuadratureRule:
    pu, wu = gauss_legendre(nu)
    pv, wv = gauss_legendre(nv)
    grid_v, grid_u = torch.meshgrid(pv, pu, indexing="ij")
    points = torch.stack([grid_u.reshape(-1), grid_v.reshape(-1)], dim=1)
    weights = (wv[:, None] * wu[None, :]).reshape(-1)
    return QuadratureRule(points, weights, (nu, nv))
