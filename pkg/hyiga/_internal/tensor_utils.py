from typing import Sequence, Union

import torch
from torch import Tensor

__all__ = ["DTYPE", "as_tensor"]

# every numerical quantity in hyiga lives in double precision
DTYPE = torch.float64


def as_tensor(value: Union[Tensor, Sequence, float]) -> Tensor:
    """Returns ``value`` as a float64 CPU tensor, copying only when needed."""
    if isinstance(value, Tensor):
        return value.to(dtype=DTYPE, device="cpu")
    return torch.as_tensor(value, dtype=DTYPE)
