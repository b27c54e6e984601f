"""Knot insertion, degree elevation and k-refinement of NURBS patches.

All routines act on homogeneous control points ``(w x, w y, w)`` one parametric
direction at a time and return new patches; the input is never modified.
"""
import logging
from math import comb
from typing import Iterable, List, Tuple, Union

import torch
from torch import Tensor

from hyiga._internal.tensor_utils import DTYPE
from hyiga.errors import ConfigurationError, DomainError, RefinementError

from .knots import find_span, KnotVector
from .patch import NurbsPatch

logger = logging.getLogger(__name__)

__all__ = ["insert_knot", "insert_knots", "elevate_degree", "refine_uniform", "k_refine"]

Direction = Union[int, str]

_DIRECTIONS = {0: 0, 1: 1, "u": 0, "v": 1, "xi": 0, "eta": 1}


def _parse_direction(direction: Direction) -> int:
    try:
        return _DIRECTIONS[direction]
    except (KeyError, TypeError):
        raise ConfigurationError("direction must be one of 0/'xi'/'u' or 1/'eta'/'v', got {!r}".format(direction))


def _coefficients(patch: NurbsPatch, direction: int) -> Tensor:
    """Homogeneous net as ``[n_direction, rest]``: one column per curve along ``direction``."""
    grid = patch.homogeneous_grid()
    n_u, n_v = patch.shape
    if direction == 0:
        return grid.permute(1, 0, 2).reshape(n_u, n_v * 3)
    return grid.reshape(n_v, n_u * 3)


def _rebuild(patch: NurbsPatch, direction: int, kv: KnotVector, coefficients: Tensor) -> NurbsPatch:
    n_u, n_v = patch.shape
    if direction == 0:
        grid = coefficients.reshape(kv.num_basis, n_v, 3).permute(1, 0, 2)
        return NurbsPatch.from_homogeneous_grid(kv, patch.basis_v, grid)
    grid = coefficients.reshape(kv.num_basis, n_u, 3)
    return NurbsPatch.from_homogeneous_grid(patch.basis_u, kv, grid)


def _insert_once(kv: KnotVector, coefficients: Tensor, value: float) -> Tuple[KnotVector, Tensor]:
    # Boehm's algorithm for a single knot
    p = kv.degree
    knots = kv.knots
    k = find_span(kv, value)
    rows = []
    for i in range(kv.num_basis + 1):
        if i <= k - p:
            rows.append(coefficients[i])
        elif i <= k:
            alpha = (value - knots[i]) / (knots[i + p] - knots[i])
            rows.append(alpha * coefficients[i] + (1.0 - alpha) * coefficients[i - 1])
        else:
            rows.append(coefficients[i - 1])
    new_kv = KnotVector(p, knots[: k + 1] + (value,) + knots[k + 1 :])
    return new_kv, torch.stack(rows)


def _check_insertable(kv: KnotVector, value: float) -> None:
    lo, hi = kv.domain
    if not lo < value < hi:
        raise DomainError("knot {} is not strictly inside the parametric range ({}, {})".format(value, lo, hi))
    if kv.multiplicity(value) + 1 > kv.degree:
        raise RefinementError(
            "inserting {} would raise its multiplicity to {} > degree {}".format(
                value, kv.multiplicity(value) + 1, kv.degree
            )
        )


def _insert_many(kv: KnotVector, coefficients: Tensor, values: Iterable[float]) -> Tuple[KnotVector, Tensor]:
    for value in values:
        _check_insertable(kv, value)
        kv, coefficients = _insert_once(kv, coefficients, value)
    return kv, coefficients


def _insertion_matrix(kv: KnotVector, values: Iterable[float]) -> Tuple[KnotVector, Tensor]:
    """Matrix ``A`` with ``A @ old = new`` for inserting ``values`` without range checks."""
    identity = torch.eye(kv.num_basis, dtype=DTYPE)
    for value in values:
        kv, identity = _insert_once(kv, identity, value)
    return kv, identity


def insert_knot(patch: NurbsPatch, direction: Direction, xi_new: float) -> NurbsPatch:
    """Inserts one knot, adding one basis function in ``direction``; the surface is unchanged.

    Raises:
        DomainError: ``xi_new`` is not strictly inside the knot range.
        RefinementError: the knot would exceed multiplicity ``p``.
    """
    return insert_knots(patch, direction, [xi_new])


def insert_knots(patch: NurbsPatch, direction: Direction, values: Iterable[float]) -> NurbsPatch:
    """Inserts ``values`` one after another (see :func:`insert_knot`)."""
    direction = _parse_direction(direction)
    kv, coefficients = _insert_many(patch.basis(direction), _coefficients(patch, direction), values)
    return _rebuild(patch, direction, kv, coefficients)


def _bezier_elevation_matrix(degree: int, times: int) -> Tensor:
    target = degree + times
    matrix = torch.zeros(target + 1, degree + 1, dtype=DTYPE)
    for i in range(target + 1):
        for j in range(max(0, i - times), min(degree, i) + 1):
            matrix[i, j] = comb(degree, j) * comb(times, i - j) / comb(target, i)
    return matrix


def _elevate(kv: KnotVector, coefficients: Tensor, times: int) -> Tuple[KnotVector, Tensor]:
    p = kv.degree
    if p < 1:
        raise RefinementError("degree elevation needs a degree >= 1 knot vector")
    if not kv.is_open:
        raise RefinementError("degree elevation is only supported for open knot vectors")
    interior = kv.breakpoints[1:-1]

    # decompose into Bezier segments sharing their end coefficients
    missing = [u for u in interior for _ in range(p - kv.multiplicity(u))]
    _, to_bezier = _insertion_matrix(kv, missing)
    bezier = to_bezier @ coefficients
    segments = len(interior) + 1

    elevation = _bezier_elevation_matrix(p, times)
    q = p + times
    elevated = torch.empty(q * segments + 1, coefficients.shape[1], dtype=DTYPE)
    for s in range(segments):
        elevated[s * q : s * q + q + 1] = elevation @ bezier[s * p : s * p + p + 1]

    lo, hi = kv.domain
    target_knots: List[float] = [lo] * (q + 1)
    for u in interior:
        target_knots += [u] * (kv.multiplicity(u) + times)
    target_knots += [hi] * (q + 1)
    target = KnotVector(q, tuple(target_knots))

    # the elevated Bezier net is the target spline with every interior knot raised to
    # multiplicity q; the (consistent, full column rank) insertion system recovers it
    _, from_target = _insertion_matrix(target, missing)
    solution = torch.linalg.lstsq(from_target, elevated).solution
    return target, solution


def elevate_degree(patch: NurbsPatch, direction: Direction, times: int = 1) -> NurbsPatch:
    """Raises the degree in ``direction`` by ``times`` without changing the surface.

    Each interior knot gains ``times`` in multiplicity, so existing continuity is preserved.

    Example
        >>> patch = elevate_degree(load_patch("straight_beam_100"), "xi")
        >>> patch.basis_u.knots
        (0.0, 0.0, 0.0, 1.0, 1.0, 1.0)
    """
    if times < 1:
        raise RefinementError("times must be >= 1, got {}".format(times))
    direction = _parse_direction(direction)
    kv, coefficients = _elevate(patch.basis(direction), _coefficients(patch, direction), times)
    return _rebuild(patch, direction, kv, coefficients)


def _uniform_values(kv: KnotVector, divisions: int) -> List[float]:
    values = []
    for span in kv.nonzero_spans:
        a, b = kv.span_bounds(span)
        values += [a + (b - a) * m / divisions for m in range(1, divisions)]
    return values


def refine_uniform(patch: NurbsPatch, direction: Direction, divisions: int) -> NurbsPatch:
    """Splits every nonzero span of ``direction`` into ``divisions`` equal parts.

    ``divisions = 2 ** level`` repeats the midpoint rule ``level`` times.
    """
    if divisions < 1:
        raise RefinementError("divisions must be >= 1, got {}".format(divisions))
    direction = _parse_direction(direction)
    values = _uniform_values(patch.basis(direction), divisions)
    if not values:
        return patch
    return insert_knots(patch, direction, values)


def k_refine(patch: NurbsPatch, degree: int, divisions_u: int = 1, divisions_v: int = 1) -> NurbsPatch:
    """Elevates both directions to ``degree`` and then inserts uniform knots.

    Elevating before inserting keeps every new interior knot at multiplicity one, i.e.
    ``C^{degree-1}`` continuity across the new element boundaries.
    """
    for direction in (0, 1):
        current = patch.basis(direction).degree
        if current > degree:
            raise ConfigurationError(
                "cannot k-refine a degree {} direction down to degree {}".format(current, degree)
            )
        if current < degree:
            patch = elevate_degree(patch, direction, degree - current)
    patch = refine_uniform(patch, 0, divisions_u)
    patch = refine_uniform(patch, 1, divisions_v)
    logger.debug(
        "k-refined patch to degree {} with a {}x{} control net".format(degree, patch.shape[0], patch.shape[1])
    )
    return patch
