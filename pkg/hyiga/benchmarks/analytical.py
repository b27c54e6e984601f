"""Closed-form reference solutions used by the benchmark cases."""
import math
from dataclasses import dataclass
from typing import Callable, Protocol

import torch
from torch import Tensor

from hyiga.assembly import Solution
from hyiga.material import Material, Regime

__all__ = [
    "ReferenceField",
    "AnalyticalField",
    "SolutionField",
    "plate_with_hole_field",
    "plate_outer_traction",
    "timoshenko_tip_deflection",
    "ring_tip_deflection",
]


class ReferenceField(Protocol):
    def displacement_at(self, parametric: Tensor, physical: Tensor) -> Tensor:
        """Reference displacement ``[N, 2]`` at points given in both coordinate systems."""
        ...


@dataclass(frozen=True, eq=False)
class AnalyticalField:
    """Exact displacement ``u(x)`` (``[N, 2] -> [N, 2]``) and stress ``σ(x)`` (``[N, 2] -> [N, 3]``)."""

    name: str
    displacement_fn: Callable[[Tensor], Tensor]
    stress_fn: Callable[[Tensor], Tensor]
    validity: str = ""

    def displacement(self, points: Tensor) -> Tensor:
        return self.displacement_fn(points)

    def stress(self, points: Tensor) -> Tensor:
        return self.stress_fn(points)

    def displacement_at(self, parametric: Tensor, physical: Tensor) -> Tensor:
        return self.displacement_fn(physical)


@dataclass(frozen=True, eq=False)
class SolutionField:
    """A discrete solution used as reference, evaluated at parametric points.

    Uniform refinement keeps the parameterization, so the same parametric point of a coarse
    and a fine mesh denotes the same material point.
    """

    solution: Solution

    def displacement_at(self, parametric: Tensor, physical: Tensor) -> Tensor:
        return self.solution.displacement_at(parametric[:, 0], parametric[:, 1])


def plate_with_hole_field(material: Material, radius: float = 1.0, traction: float = 1.0) -> AnalyticalField:
    r"""Infinite plate with a circular hole under uniaxial tension ``traction`` along x.

    Polar angle :math:`\phi = \operatorname{atan2}(y, x)`; the displacement uses
    ``μ = E / (2(1 + ν))`` and the Kolosov constant of the material regime.
    """
    R = radius
    mu = material.shear_modulus
    k = material.kolosov_constant if material.regime is not None else 3.0 - 4.0 * material.nu

    def polar(points: Tensor):
        x, y = points[..., 0], points[..., 1]
        return torch.sqrt(x * x + y * y), torch.atan2(y, x)

    def stress(points: Tensor) -> Tensor:
        r, phi = polar(points)
        a2 = R**2 / r**2
        a4 = 1.5 * R**4 / r**4
        c2, c4 = torch.cos(2 * phi), torch.cos(4 * phi)
        s2, s4 = torch.sin(2 * phi), torch.sin(4 * phi)
        sxx = 1.0 - a2 * (1.5 * c2 + c4) + a4 * c4
        syy = -a2 * (0.5 * c2 - c4) - a4 * c4
        sxy = -a2 * (0.5 * s2 + s4) + a4 * s4
        return traction * torch.stack([sxx, syy, sxy], dim=-1)

    def displacement(points: Tensor) -> Tensor:
        r, phi = polar(points)
        scale = traction * R / (8.0 * mu)
        ux = r / R * (k + 1) * torch.cos(phi) + 2 * R / r * ((1 + k) * torch.cos(phi) + torch.cos(3 * phi))
        ux = ux - 2 * R**3 / r**3 * torch.cos(3 * phi)
        uy = r / R * (k - 3) * torch.sin(phi) + 2 * R / r * ((1 - k) * torch.sin(phi) + torch.sin(3 * phi))
        uy = uy - 2 * R**3 / r**3 * torch.sin(3 * phi)
        return scale * torch.stack([ux, uy], dim=-1)

    return AnalyticalField("plate_with_hole", displacement, stress, validity="r >= {}".format(R))


def plate_outer_traction(field: AnalyticalField, half_width: float) -> Callable[[Tensor], Tensor]:
    """Traction ``σ n`` on the outer boundary of the quarter plate ``x = -L`` / ``y = L``.

    Each point takes the normal of the straight edge it is closest to.
    """

    def traction(points: Tensor) -> Tensor:
        sigma = field.stress(points)
        on_left = (points[:, 0] + half_width).abs() <= (points[:, 1] - half_width).abs()
        left = torch.stack([-sigma[:, 0], -sigma[:, 2]], dim=1)
        top = torch.stack([sigma[:, 2], sigma[:, 1]], dim=1)
        return torch.where(on_left[:, None], left, top)

    return traction


def timoshenko_tip_deflection(
    length: float, thickness: float, load: float, material: Material, shear_factor: float = 5.0 / 6.0
) -> float:
    """Tip deflection ``FL³/3EI + FL/κGA`` of a cantilever of unit width."""
    E = material.E
    if material.regime is Regime.PLANE_STRAIN:
        E = E / (1.0 - material.nu**2)
    inertia = thickness**3 / 12.0
    bending = load * length**3 / (3.0 * E * inertia)
    shear = load * length / (shear_factor * material.shear_modulus * thickness)
    return bending + shear


def ring_tip_deflection(radius: float, thickness: float, load: float, material: Material) -> float:
    """Radial tip deflection ``πFR³/4EI`` of a clamped quarter ring under a radial end load."""
    inertia = thickness**3 / 12.0
    return math.pi * load * radius**3 / (4.0 * material.E * inertia)
