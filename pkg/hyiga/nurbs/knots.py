import bisect
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE, as_tensor
from hyiga.errors import DomainError, InputError

logger = logging.getLogger(__name__)

__all__ = [
    "KnotVector",
    "BasisValues",
    "find_span",
    "find_spans",
    "basis_functions",
    "bspline_basis",
]

# knots closer than this are treated as the same breakpoint
KNOT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class KnotVector:
    r"""Univariate B-spline discretization: a degree and a non-decreasing knot sequence.

    Args:
        degree: polynomial degree :math:`p \ge 0`.
        knots: non-decreasing knot values, ``len(knots) = n + p + 1``.

    Example
        >>> kv = KnotVector(1, (0.0, 0.0, 0.5, 1.0, 1.0))
        >>> kv.num_basis, kv.nonzero_spans
        (3, (1, 2))
    """

    degree: int
    knots: Tuple[float, ...]

    def __post_init__(self) -> None:
        knots = tuple(float(k) for k in self.knots)
        object.__setattr__(self, "knots", knots)
        if not isinstance(self.degree, int) or self.degree < 0:
            raise InputError("degree must be a non-negative integer, got {!r}".format(self.degree))
        if len(knots) < 2 * (self.degree + 1):
            raise InputError(
                "a degree {} knot vector needs at least {} knots, got {}".format(
                    self.degree, 2 * (self.degree + 1), len(knots)
                )
            )
        if not all(math.isfinite(k) for k in knots):
            raise InputError("knots must be finite")
        if any(b < a for a, b in zip(knots, knots[1:])):
            raise InputError("knots must be non-decreasing, got {}".format(knots))
        lo, hi = self.domain
        if not hi > lo:
            raise InputError("knot vector {} has an empty parametric domain".format(knots))
        for value in self.breakpoints[1:-1]:
            if self.multiplicity(value) > self.degree:
                raise InputError(
                    "interior knot {} has multiplicity {} > degree {}".format(
                        value, self.multiplicity(value), self.degree
                    )
                )

    @property
    def num_basis(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def domain(self) -> Tuple[float, float]:
        return self.knots[self.degree], self.knots[self.num_basis]

    @property
    def is_open(self) -> bool:
        p = self.degree
        return len(set(self.knots[: p + 1])) == 1 and len(set(self.knots[-(p + 1) :])) == 1

    @property
    def nonzero_spans(self) -> Tuple[int, ...]:
        """Indices ``i`` with ``knots[i] < knots[i+1]`` inside the parametric domain."""
        return tuple(
            i for i in range(self.degree, self.num_basis) if self.knots[i + 1] - self.knots[i] > KNOT_TOLERANCE
        )

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """Distinct knot values inside the parametric domain, in increasing order."""
        lo, hi = self.domain
        values = []
        for k in self.knots:
            if lo <= k <= hi and (not values or k - values[-1] > KNOT_TOLERANCE):
                values.append(k)
        return tuple(values)

    def multiplicity(self, value: float) -> int:
        return sum(1 for k in self.knots if abs(k - value) <= KNOT_TOLERANCE)

    def span_bounds(self, span: int) -> Tuple[float, float]:
        return self.knots[span], self.knots[span + 1]

    def to_tensor(self) -> Tensor:
        return torch.tensor(self.knots, dtype=DTYPE)


class BasisValues(NamedTuple):
    """The ``p + 1`` nonzero basis functions of a knot vector at one point."""

    span: int
    values: Tensor
    derivatives: Tensor


def _last_span(kv: KnotVector) -> int:
    return kv.nonzero_spans[-1]


def find_span(kv: KnotVector, xi: float) -> int:
    """Index ``i`` with ``knots[i] <= xi < knots[i+1]``.

    At the right end of the domain the last nonzero span is returned.

    Raises:
        DomainError: ``xi`` lies outside the knot range.
    """
    xi = float(xi)
    lo, hi = kv.domain
    if not (math.isfinite(xi) and lo - KNOT_TOLERANCE <= xi <= hi + KNOT_TOLERANCE):
        raise DomainError("parametric coordinate {} outside the knot range [{}, {}]".format(xi, lo, hi))
    if xi >= hi:
        return _last_span(kv)
    if xi <= lo:
        return kv.nonzero_spans[0]
    return bisect.bisect_right(kv.knots, xi) - 1


def find_spans(kv: KnotVector, xi: Tensor) -> Tensor:
    """Vectorized :func:`find_span` over a 1-D tensor of coordinates."""
    xi = as_tensor(xi)
    lo, hi = kv.domain
    outside = ~torch.isfinite(xi) | (xi < lo - KNOT_TOLERANCE) | (xi > hi + KNOT_TOLERANCE)
    if bool(outside.any()):
        bad = xi[outside][0].item()
        raise DomainError("parametric coordinate {} outside the knot range [{}, {}]".format(bad, lo, hi))
    spans = torch.searchsorted(kv.to_tensor(), xi, right=True) - 1
    spans = spans.clamp(min=kv.nonzero_spans[0], max=_last_span(kv))
    return torch.where(xi >= hi, torch.full_like(spans, _last_span(kv)), spans)


def _safe_ratio(num: Tensor, den: Tensor) -> Tensor:
    # 0/0 and x/0 count as zero in the Cox-de Boor recursion
    nonzero = den != 0
    return torch.where(nonzero, num / torch.where(nonzero, den, torch.ones_like(den)), torch.zeros_like(num))


def _basis_table(knots: Tensor, degree: int, xi: Tensor, spans: Tensor) -> Tensor:
    values = [torch.ones_like(xi)]
    left = [None]
    right = [None]
    for j in range(1, degree + 1):
        left.append(xi - knots[spans + 1 - j])
        right.append(knots[spans + j] - xi)
        saved = torch.zeros_like(xi)
        updated = []
        for r in range(j):
            temp = _safe_ratio(values[r], right[r + 1] + left[j - r])
            updated.append(saved + right[r + 1] * temp)
            saved = left[j - r] * temp
        updated.append(saved)
        values = updated
    return torch.stack(values, dim=-1)


def basis_functions(kv: KnotVector, xi: Tensor, spans: Optional[Tensor] = None) -> Tuple[Tensor, Tensor]:
    """Nonzero basis functions and their first derivatives at many points.

    Args:
        kv: the knot vector.
        xi: 1-D tensor of parametric coordinates.
        spans: precomputed spans of ``xi``; located with :func:`find_spans` when omitted.

    Returns:
        ``(values, derivatives)``, each of shape ``[len(xi), p + 1]``; column ``r`` belongs
        to the global basis function ``span - p + r``.
    """
    xi = as_tensor(xi)
    if spans is None:
        spans = find_spans(kv, xi)
    p = kv.degree
    knots = kv.to_tensor()
    values = _basis_table(knots, p, xi, spans)
    if p == 0:
        return values, torch.zeros_like(values)

    lower = _basis_table(knots, p - 1, xi, spans)
    derivatives = []
    for r in range(p + 1):
        i = spans - p + r
        term = torch.zeros_like(xi)
        if r >= 1:
            term = term + _safe_ratio(lower[:, r - 1], knots[i + p] - knots[i])
        if r <= p - 1:
            term = term - _safe_ratio(lower[:, r], knots[i + p + 1] - knots[i + 1])
        derivatives.append(p * term)
    return values, torch.stack(derivatives, dim=-1)


def bspline_basis(kv: KnotVector, xi: float) -> BasisValues:
    """Cox-de Boor evaluation of the nonzero basis functions at a single point.

    Example
        >>> bspline_basis(KnotVector(2, (0, 0, 0, 1, 1, 1)), 0.5).values
        tensor([0.2500, 0.5000, 0.2500], dtype=torch.float64)
    """
    span = find_span(kv, xi)
    values, derivatives = basis_functions(kv, torch.tensor([float(xi)], dtype=DTYPE), torch.tensor([span]))
    return BasisValues(span, values[0], derivatives[0])

