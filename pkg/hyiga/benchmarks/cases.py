import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, Mapping, Optional, Tuple, Union

import torch

from hyiga._internal.tensor_utils import DTYPE
from hyiga.assembly import (
    apply_dirichlet,
    apply_traction,
    assemble,
    BoundaryCondition,
    BoundaryKind,
    build_mesh,
    Mesh,
    ReducedSystem,
    solve,
    Solution,
)
from hyiga.element import ElementOptions, Formulation
from hyiga.errors import ConfigurationError
from hyiga.material import Material, Regime
from hyiga.nurbs import k_refine, load_patch, NurbsPatch, surface_point

from .analytical import AnalyticalField, plate_outer_traction, plate_with_hole_field, ReferenceField, SolutionField

logger = logging.getLogger(__name__)

__all__ = [
    "TipQuantity",
    "BenchmarkCase",
    "case_straight_beam",
    "case_curved_beam",
    "case_cook",
    "case_plate_with_hole",
    "make_case",
    "CASE_NAMES",
    "STRAIGHT_BEAM_LOADS",
    "CURVED_BEAM_RADII",
    "COOK_REFERENCE_LEVEL",
]

# slenderness -> tip shear resultant giving a tip deflection of 20
STRAIGHT_BEAM_LOADS = {10: 4.97018, 100: 4.9997e-3, 1000: 4.9999e-6}
# slenderness -> (inner radius, outer radius)
CURVED_BEAM_RADII = {10: (9.5, 10.5), 100: (9.95, 10.05), 1000: (9.995, 10.005)}

BEAM_LENGTH = 100.0
STRAIGHT_BEAM_TIP = 20.0
CURVED_BEAM_TIP = 0.942
COOK_TIP = 7.7
COOK_LOAD = 100.0
COOK_EDGE_LENGTH = 16.0
COOK_REFERENCE_LEVEL = 5
PLATE_HALF_WIDTH = 4.0
PLATE_RADIUS = 1.0


@dataclass(frozen=True)
class TipQuantity:
    """Displacement component measured at a parametric point.

    ``kind = "component"`` reads ``u[component]``; ``kind = "radial"`` projects ``u`` on the
    undeformed position vector.
    """

    xi: float
    eta: float
    kind: str = "component"
    component: int = 1

    def evaluate(self, solution: Solution) -> float:
        xi = torch.tensor([self.xi], dtype=DTYPE)
        eta = torch.tensor([self.eta], dtype=DTYPE)
        u = solution.displacement_at(xi, eta)[0]
        if self.kind == "component":
            return float(u[self.component])
        position = surface_point(solution.mesh.patch, self.xi, self.eta)
        return float(u @ position / torch.linalg.norm(position))


def _doubling_along_length(level: int) -> Tuple[int, int]:
    return 2**level, 1


def _doubling_both(level: int) -> Tuple[int, int]:
    return 2**level, 2**level


@dataclass(frozen=True, eq=False)
class BenchmarkCase:
    """A benchmark problem: base geometry, material, loads and reference data.

    Analysis patches are obtained from ``base_patch`` by k-refinement: both directions are
    elevated to the requested degree and every base span is split into
    ``divisions(level)`` parts.
    """

    name: str
    base_patch: NurbsPatch
    material: Material
    boundary_conditions: Tuple[BoundaryCondition, ...]
    degrees: Tuple[int, ...]
    levels: Tuple[int, ...]
    divisions: Callable[[int], Tuple[int, int]]
    tip: Optional[TipQuantity] = None
    reference_tip: Optional[float] = None
    tip_variants: Mapping[str, TipQuantity] = field(default_factory=dict)
    analytical: Optional[AnalyticalField] = None
    reference_factory: Optional[Callable[["BenchmarkCase"], ReferenceField]] = None
    parameters: Mapping[str, float] = field(default_factory=dict)

    def check_degree(self, degree: int) -> None:
        if degree not in self.degrees:
            raise ConfigurationError(
                "case {} supports degrees {}, got {}".format(self.name, self.degrees, degree)
            )

    def patch(self, degree: int, level: int) -> NurbsPatch:
        self.check_degree(degree)
        if level < 0:
            raise ConfigurationError("refinement level must be >= 0, got {}".format(level))
        divisions_u, divisions_v = self.divisions(level)
        return k_refine(self.base_patch, degree, divisions_u, divisions_v)

    def mesh(self, degree: int, level: int) -> Mesh:
        return build_mesh(self.patch(degree, level))

    def reduced_system(
        self,
        formulation: Union[Formulation, str],
        degree: int,
        level: int,
        options: Optional[ElementOptions] = None,
    ) -> ReducedSystem:
        """Builds, loads and constrains the case at one ladder step."""
        mesh = self.mesh(degree, level)
        system = assemble(mesh, self.material, formulation, options)
        for bc in self.boundary_conditions:
            if bc.kind is not BoundaryKind.FIXED:
                apply_traction(system, bc)
        return apply_dirichlet(system, self.boundary_conditions)

    def solve(
        self,
        formulation: Union[Formulation, str],
        degree: int,
        level: int,
        options: Optional[ElementOptions] = None,
    ) -> Solution:
        return solve(self.reduced_system(formulation, degree, level, options))

    def tip_value(self, solution: Solution) -> Optional[float]:
        return None if self.tip is None else self.tip.evaluate(solution)

    def normalized_tip(self, solution: Solution) -> Optional[float]:
        if self.tip is None or self.reference_tip is None:
            return None
        return self.tip.evaluate(solution) / self.reference_tip

    def tip_metrics(self, solution: Solution) -> Dict[str, float]:
        """Normalized readings of every tip variant (e.g. inner/mid/outer surface)."""
        if self.reference_tip is None:
            return {}
        return {name: tip.evaluate(solution) / self.reference_tip for name, tip in self.tip_variants.items()}

    def reference_field(self) -> Optional[ReferenceField]:
        if self.analytical is not None:
            return self.analytical
        if self.reference_factory is not None:
            return self.reference_factory(self)
        return None

    def with_material(self, E: Optional[float] = None, nu: Optional[float] = None, regime=None) -> "BenchmarkCase":
        """Same case with material overrides (the plate's exact field follows the new material)."""
        material = self.material.replace(E=E, nu=nu, regime=regime)
        if self.name == "plate_with_hole":
            return case_plate_with_hole(material.nu, E=material.E, regime=material.regime)
        return replace(self, material=material)


def _check_choice(value: float, choices, what: str):
    for choice in choices:
        if abs(float(value) - choice) <= 1e-9 * max(1.0, abs(choice)):
            return choice
    raise ConfigurationError("{} must be one of {}, got {}".format(what, sorted(choices), value))


def case_straight_beam(slenderness: float = 100) -> BenchmarkCase:
    """Cantilever ``100 x t`` clamped at ``x = 0`` with a uniform shear traction on ``x = 100``.

    The load is chosen so that the tip deflection is 20 for every slenderness.
    """
    slenderness = _check_choice(slenderness, STRAIGHT_BEAM_LOADS, "slenderness")
    thickness = BEAM_LENGTH / slenderness
    load = STRAIGHT_BEAM_LOADS[slenderness]
    bcs = (
        BoundaryCondition.fixed("xi_min"),
        BoundaryCondition.traction("xi_max", (0.0, load / thickness)),
    )
    return BenchmarkCase(
        name="straight_beam",
        base_patch=load_patch("straight_beam_{}".format(slenderness)),
        material=Material(1000.0, 0.3, Regime.PLANE_STRESS),
        boundary_conditions=bcs,
        degrees=(1, 2, 3),
        levels=tuple(range(6)),
        divisions=_doubling_along_length,
        tip=TipQuantity(1.0, 1.0, "component", 1),
        reference_tip=STRAIGHT_BEAM_TIP,
        parameters={"slenderness": float(slenderness), "thickness": thickness, "load": load},
    )


def case_curved_beam(slenderness: float = 10) -> BenchmarkCase:
    """Quarter ring of mean radius 10 clamped on the y axis and pulled radially at its x-axis end.

    The tip load is ``0.1 t³``; the radial tip displacement is reported at mid thickness and,
    as extra metrics, on the inner and outer surface.
    """
    slenderness = _check_choice(slenderness, CURVED_BEAM_RADII, "slenderness")
    inner, outer = CURVED_BEAM_RADII[slenderness]
    thickness = outer - inner
    load = 0.1 * thickness**3
    bcs = (
        BoundaryCondition.fixed("xi_min"),
        BoundaryCondition.traction("xi_max", (load / thickness, 0.0)),
    )
    return BenchmarkCase(
        name="curved_beam",
        base_patch=load_patch("curved_beam_{}".format(slenderness)),
        material=Material(1000.0, 0.0, Regime.PLANE_STRESS),
        boundary_conditions=bcs,
        degrees=(2, 3),
        levels=tuple(range(6)),
        divisions=_doubling_along_length,
        tip=TipQuantity(1.0, 0.5, "radial"),
        reference_tip=CURVED_BEAM_TIP,
        tip_variants={
            "tip_inner": TipQuantity(1.0, 0.0, "radial"),
            "tip_mid": TipQuantity(1.0, 0.5, "radial"),
            "tip_outer": TipQuantity(1.0, 1.0, "radial"),
        },
        parameters={
            "slenderness": float(slenderness),
            "inner_radius": inner,
            "outer_radius": outer,
            "load": load,
        },
    )


@lru_cache(maxsize=4)
def _cook_reference(material: Material, level: int, degree: int, t_eval: str) -> SolutionField:
    logger.info("Computing Cook's membrane reference ({0}x{0} elements, degree {1})".format(2**level, degree))
    case = replace(case_cook(), material=material, reference_factory=None)
    solution = case.solve(Formulation.HYBRID, degree, level, ElementOptions(t_eval=t_eval))
    return SolutionField(solution)


def cook_reference_field(
    case: BenchmarkCase, level: int = COOK_REFERENCE_LEVEL, degree: int = 3, t_eval: str = "per_point"
) -> SolutionField:
    """Converged hybrid solution (``2**level`` elements per direction) of ``case``'s material."""
    return _cook_reference(case.material, level, degree, t_eval)


def case_cook(nu: Optional[float] = None) -> BenchmarkCase:
    """Cook's tapered membrane in plane strain, clamped on the left and sheared on the right edge."""
    material = Material(250.0, 0.4999 if nu is None else nu, Regime.PLANE_STRAIN)
    bcs = (
        BoundaryCondition.fixed("xi_min"),
        BoundaryCondition.traction("xi_max", (0.0, COOK_LOAD / COOK_EDGE_LENGTH)),
    )
    return BenchmarkCase(
        name="cook",
        base_patch=load_patch("cook"),
        material=material,
        boundary_conditions=bcs,
        degrees=(1, 2, 3),
        levels=tuple(range(5)),
        divisions=_doubling_both,
        tip=TipQuantity(1.0, 0.5, "component", 1),
        reference_tip=COOK_TIP,
        reference_factory=cook_reference_field,
        parameters={"load": COOK_LOAD},
    )


def case_plate_with_hole(nu: float = 0.3, E: float = 1000.0, regime=Regime.PLANE_STRAIN) -> BenchmarkCase:
    """Quarter of an infinite plate with a unit hole under unit tension, loaded by the exact traction.

    Symmetry conditions fix ``u_y`` on ``y = 0`` and ``u_x`` on ``x = 0``; errors are measured
    against the exact displacement field.
    """
    material = Material(E, nu, regime)
    exact = plate_with_hole_field(material, PLATE_RADIUS)
    bcs = (
        BoundaryCondition.fixed("xi_min", components=(1,)),
        BoundaryCondition.fixed("xi_max", components=(0,)),
        BoundaryCondition.traction("eta_max", plate_outer_traction(exact, PLATE_HALF_WIDTH)),
    )
    return BenchmarkCase(
        name="plate_with_hole",
        base_patch=load_patch("plate_hole_quadratic"),
        material=material,
        boundary_conditions=bcs,
        degrees=(2, 3),
        levels=tuple(range(5)),
        divisions=_doubling_both,
        analytical=exact,
        parameters={"nu": nu, "radius": PLATE_RADIUS, "half_width": PLATE_HALF_WIDTH},
    )


CASE_NAMES = ("beam", "curved_beam", "cook", "plate")

_ALIASES = {
    "beam": "beam",
    "straight_beam": "beam",
    "curved_beam": "curved_beam",
    "curved": "curved_beam",
    "cook": "cook",
    "plate": "plate",
    "plate_with_hole": "plate",
}


def make_case(problem: str, slenderness: Optional[float] = None, nu: Optional[float] = None) -> BenchmarkCase:
    """Case by CLI name; ``slenderness`` selects beam geometries, ``nu`` the plate (or overrides ν)."""
    key = _ALIASES.get(str(problem).strip().lower())
    if key is None:
        raise ConfigurationError("unknown problem {!r}; choose from {}".format(problem, ", ".join(CASE_NAMES)))
    if key == "beam":
        case = case_straight_beam(100 if slenderness is None else slenderness)
    elif key == "curved_beam":
        case = case_curved_beam(10 if slenderness is None else slenderness)
    elif key == "cook":
        return case_cook(nu)
    else:
        return case_plate_with_hole(0.3 if nu is None else nu)
    return case if nu is None else case.with_material(nu=nu)
