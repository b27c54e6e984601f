"""Acceptance suite run by ``hyiga verify``.

Every criterion is a callable returning a :class:`CriterionResult`; numerical failures inside a
criterion are reported as a failed result instead of propagating.
"""
import logging
import math
import time
from dataclasses import dataclass
from functools import wraps
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import torch

from hyiga._internal.tensor_utils import DTYPE
from hyiga.assembly import apply_traction, assemble, BoundaryCondition, build_mesh
from hyiga.element import compute_element_systems, ElementOptions, Formulation
from hyiga.errors import ConfigurationError, HyigaError
from hyiga.material import Material, Regime
from hyiga.nurbs import evaluate_basis, k_refine, KnotVector, load_patch, NurbsPatch, surface_points

from .cases import case_cook, case_curved_beam, case_plate_with_hole, case_straight_beam, make_case
from .oracles import q4_global_stiffness
from .study import run_study

logger = logging.getLogger(__name__)

__all__ = [
    "CriterionResult",
    "CRITERIA",
    "EQUILIBRIUM_CASES",
    "run_acceptance",
    "distorted_square_patch",
    "patch_test_residual",
]


@dataclass(frozen=True)
class CriterionResult:
    name: str
    passed: bool
    detail: str
    seconds: float

    def __str__(self) -> str:
        return "[{}] {} ({:.2f}s): {}".format("PASS" if self.passed else "FAIL", self.name, self.seconds, self.detail)


def _criterion(name: str):
    def decorator(fn: Callable[[], Tuple[bool, str]]) -> Callable[[], CriterionResult]:
        @wraps(fn)
        def wrapper() -> CriterionResult:
            start = time.perf_counter()
            try:
                passed, detail = fn()
            except HyigaError as err:
                passed, detail = False, "{}: {}".format(type(err).__name__, err)
            seconds = time.perf_counter() - start
            result = CriterionResult(name, bool(passed), detail, seconds)
            logger.info(str(result))
            return result

        wrapper.criterion_name = name
        return wrapper

    return decorator


def _relative_difference(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


@_criterion("q4_identity")
def check_q4_identity() -> Tuple[bool, str]:
    """Degree-1 unit-weight patches reproduce the bilinear Q4 stiffness (conventional and 5-β hybrid)."""
    material = case_cook().material
    patch = k_refine(load_patch("cook"), 1, 4, 4)
    mesh = build_mesh(patch)
    n_u, n_v = patch.shape
    nodes = patch.control_points.numpy()
    details, passed = [], True
    for formulation in (Formulation.CONVENTIONAL, Formulation.HYBRID):
        K = assemble(mesh, material, formulation).stiffness.toarray()
        oracle = q4_global_stiffness(nodes, (n_u, n_v), material, hybrid=formulation is Formulation.HYBRID)
        difference = _relative_difference(K, oracle)
        passed = passed and difference <= 1e-12
        details.append("{} max rel. diff {:.2e}".format(formulation.value, difference))
    return passed, "; ".join(details)


@_criterion("straight_beam")
def check_straight_beam() -> Tuple[bool, str]:
    """Hybrid d2 on 4x1 elements reaches 98% of the tip deflection; conventional d2 locks at L/t = 1000."""
    level, degree = 2, 2
    passed, details = True, []
    for slenderness in (10, 100, 1000):
        case = case_straight_beam(slenderness)
        tip = case.normalized_tip(case.solve(Formulation.HYBRID, degree, level))
        passed = passed and tip >= 0.98
        details.append("hybrid L/t={} tip {:.4f}".format(slenderness, tip))
    case = case_straight_beam(1000)
    locked = case.normalized_tip(case.solve(Formulation.CONVENTIONAL, degree, level))
    passed = passed and locked < 0.9
    details.append("iga L/t=1000 tip {:.4f}".format(locked))
    return passed, "; ".join(details)


@_criterion("curved_beam")
def check_curved_beam() -> Tuple[bool, str]:
    """Hybrid d2 on 8x1 elements within 2% of the radial tip reference."""
    case = case_curved_beam(10)
    solution = case.solve(Formulation.HYBRID, 2, 3)
    tip = case.normalized_tip(solution)
    return abs(tip - 1.0) <= 0.02, "hybrid d2 8x1 tip {:.4f} with {} active dofs".format(tip, solution.active_dofs)


@_criterion("cook_membrane")
def check_cook() -> Tuple[bool, str]:
    """At 16x16 elements: hybrid d2 within 5% of 7.7, conventional d1 below 60%."""
    case = case_cook()
    hybrid = case.normalized_tip(case.solve(Formulation.HYBRID, 2, 4))
    locked = case.normalized_tip(case.solve(Formulation.CONVENTIONAL, 1, 4))
    passed = abs(hybrid - 1.0) <= 0.05 and locked < 0.6
    return passed, "hybrid d2 tip {:.4f}; iga d1 tip {:.4f}".format(hybrid, locked)


def _log_slope(dofs: Sequence[int], errors: Sequence[float]) -> float:
    return float(np.polyfit(np.log(np.asarray(dofs, dtype=float)), np.log(np.asarray(errors)), 1)[0])


@_criterion("plate_compressible")
def check_plate_compressible() -> Tuple[bool, str]:
    """ν = 0.3, cubic: both formulations agree within 20%, converge monotonically at the optimal rate."""
    degree = 3
    case = case_plate_with_hole(0.3)
    table = run_study(case, ("iga", "hybrid"), (degree,))
    conventional = table.curve("iga", degree)
    hybrid = table.curve("hybrid", degree)
    passed, details = True, []
    for c, h in zip(conventional, hybrid):
        gap = abs(c.l2_error - h.l2_error) / max(c.l2_error, h.l2_error)
        passed = passed and gap <= 0.2
    expected = -(degree + 1) / 2.0
    for rows in (conventional, hybrid):
        errors = [row.l2_error for row in rows]
        monotone = all(b < a for a, b in zip(errors, errors[1:]))
        # asymptotic rate from the three finest steps
        slope = _log_slope([row.active_dof for row in rows[-3:]], errors[-3:])
        passed = passed and monotone and abs(slope - expected) <= 0.5
        details.append(
            "{} errors {} slope {:.2f} (expected {:.1f})".format(
                rows[0].formulation, ", ".join("{:.2e}".format(e) for e in errors), slope, expected
            )
        )
    return passed, "; ".join(details)


@_criterion("plate_incompressible")
def check_plate_incompressible() -> Tuple[bool, str]:
    """ν = 0.4999, d2: on the two coarsest meshes the hybrid error is at most half the conventional one."""
    case = case_plate_with_hole(0.4999)
    table = run_study(case, ("iga", "hybrid"), (2,), ladder=(0, 1))
    passed, details = True, []
    for c, h in zip(table.curve("iga", 2), table.curve("hybrid", 2)):
        passed = passed and h.l2_error <= 0.5 * c.l2_error
        details.append("level {}: iga {:.3e} hybrid {:.3e}".format(c.refinement, c.l2_error, h.l2_error))
    return passed, "; ".join(details)


def distorted_square_patch(centre: Tuple[float, float] = (0.6, 0.45)) -> NurbsPatch:
    """Unit square of 2x2 bilinear elements whose interior control point is moved to ``centre``."""
    kv = KnotVector(1, (0.0, 0.0, 0.5, 1.0, 1.0))
    points = [[0.5 * i, 0.5 * j] for j in range(3) for i in range(3)]
    points[4] = list(centre)
    return NurbsPatch(kv, kv, torch.tensor(points, dtype=DTYPE), torch.ones(9, dtype=DTYPE))


def patch_test_residual(
    patch: NurbsPatch, material: Material, formulation, options: Optional[ElementOptions] = None
) -> float:
    """``|K u - f| / |f|`` for a linear displacement field on a patch covering the unit square.

    ``f`` are the consistent loads of the matching constant-stress tractions on all four edges.
    """
    A = torch.tensor([[1e-3, 2e-3], [-1e-3, 3e-3]], dtype=DTYPE)
    strain = torch.stack([A[0, 0], A[1, 1], A[0, 1] + A[1, 0]])
    sigma = material.stiffness_matrix() @ strain
    stress = torch.stack([torch.stack([sigma[0], sigma[2]]), torch.stack([sigma[2], sigma[1]])])
    normals = {"xi_min": (-1.0, 0.0), "xi_max": (1.0, 0.0), "eta_min": (0.0, -1.0), "eta_max": (0.0, 1.0)}
    system = assemble(build_mesh(patch), material, formulation, options)
    for edge, normal in normals.items():
        traction = stress @ torch.tensor(normal, dtype=DTYPE)
        apply_traction(system, BoundaryCondition.traction(edge, traction))
    u = (patch.control_points @ A.T).reshape(-1)
    internal = torch.from_numpy(system.stiffness @ u.numpy())
    return float(torch.linalg.norm(internal - system.load) / torch.linalg.norm(system.load))


def _partition_of_unity(generator: torch.Generator) -> Tuple[bool, str]:
    worst = 0.0
    for name in ("curved_beam_10", "plate_hole_quadratic", "plate_hole_cubic", "cook"):
        patch = load_patch(name)
        xi, eta = torch.rand(2, 50, generator=generator, dtype=DTYPE)
        basis = evaluate_basis(patch, xi, eta)
        worst = max(worst, float((basis.values.sum(dim=1) - 1.0).abs().max()))
        worst = max(worst, float(basis.gradients.sum(dim=2).abs().max()))
    return worst <= 1e-12, "partition of unity {:.1e}".format(worst)


def _derivatives(generator: torch.Generator) -> Tuple[bool, str]:
    patch = k_refine(load_patch("plate_hole_quadratic"), 3, 2, 2)
    h = 1e-6
    xi, eta = 0.05 + 0.9 * torch.rand(2, 20, generator=generator, dtype=DTYPE)
    basis = evaluate_basis(patch, xi, eta)
    worst = 0.0
    for direction, (dx, dy) in enumerate(((h, 0.0), (0.0, h))):
        plus = evaluate_basis(patch, xi + dx, eta + dy)
        minus = evaluate_basis(patch, xi - dx, eta - dy)
        # stencils crossing a knot line use a different span
        if not (torch.equal(plus.indices, basis.indices) and torch.equal(minus.indices, basis.indices)):
            continue
        fd = (plus.values - minus.values) / (2 * h)
        worst = max(worst, float((fd - basis.gradients[:, direction]).abs().max()))
    return worst <= 1e-6, "finite-difference derivatives {:.1e}".format(worst)


def _refinement_invariance(generator: torch.Generator) -> Tuple[bool, str]:
    base = load_patch("plate_hole_quadratic")
    refined = k_refine(base, 3, 2, 3)
    xi, eta = torch.rand(2, 50, generator=generator, dtype=DTYPE)
    gap = float((surface_points(base, xi, eta) - surface_points(refined, xi, eta)).abs().max())
    return gap <= 1e-12 * 4.0, "refinement geometry change {:.1e}".format(gap)


def _element_ranks() -> Tuple[bool, str]:
    material = Material(250.0, 0.3, Regime.PLANE_STRESS)
    failures = []
    for name in ("cook", "curved_beam_10"):
        base = load_patch(name)
        for degree in range(max(base.degree_u, base.degree_v), 4):
            patch = k_refine(base, degree)
            mesh = build_mesh(patch)
            for formulation in Formulation:
                K = compute_element_systems(patch, mesh.elements, material, formulation).stiffness[0]
                rank = int(torch.linalg.matrix_rank(K, rtol=1e-10))
                if rank != K.shape[0] - 3:
                    failures.append(
                        "{} {} d{} rank {} of {}".format(name, formulation.value, degree, rank, K.shape[0])
                    )
    return not failures, "element ranks n_dof - 3" if not failures else "; ".join(failures)


def _patch_test() -> Tuple[bool, str]:
    material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
    base = distorted_square_patch()
    worst = 0.0
    for degree in (1, 2, 3):
        patch = k_refine(base, degree)
        for formulation in Formulation:
            options = ElementOptions(t_eval="centroid")
            worst = max(worst, patch_test_residual(patch, material, formulation, options))
    return worst <= 1e-10, "patch test residual {:.1e}".format(worst)


def _flexibility_spd() -> Tuple[bool, str]:
    case = case_cook()
    smallest = math.inf
    for degree in (1, 2, 3):
        mesh = case.mesh(degree, 1)
        systems = compute_element_systems(mesh.patch, mesh.elements, case.material, Formulation.HYBRID)
        smallest = min(smallest, float(torch.linalg.eigvalsh(systems.H).min()))
    return smallest > 0, "smallest eigenvalue of H {:.2e}".format(smallest)


# every benchmark, at each slenderness the ladders use
EQUILIBRIUM_CASES = (
    ("beam", 10),
    ("beam", 100),
    ("beam", 1000),
    ("curved_beam", 10),
    ("curved_beam", 100),
    ("curved_beam", 1000),
    ("cook", None),
    ("plate", None),
)


def _equilibrium() -> Tuple[bool, str]:
    failures, worst = [], 0.0
    for problem, slenderness in EQUILIBRIUM_CASES:
        case = make_case(problem, slenderness=slenderness)
        for formulation in Formulation:
            solution = case.solve(formulation, 2, 1)
            imbalance = solution.equilibrium_imbalance()
            worst = max(worst, imbalance)
            if imbalance > solution.equilibrium_tolerance():
                failures.append(
                    "{} {}: imbalance {:.1e} over {:.1e}".format(
                        case.name, formulation.value, imbalance, solution.equilibrium_tolerance()
                    )
                )
    if failures:
        return False, "; ".join(failures)
    return True, "reaction imbalance {:.1e} within round-off bounds".format(worst)


def _exact_plate_field(generator: torch.Generator) -> Tuple[bool, str]:
    material = Material(1000.0, 0.3, Regime.PLANE_STRAIN)
    field = case_plate_with_hole(0.3).analytical
    radius = 1.2 + 2.5 * torch.rand(40, generator=generator, dtype=DTYPE)
    angle = math.pi / 2 + math.pi / 2 * torch.rand(40, generator=generator, dtype=DTYPE)
    points = torch.stack([radius * torch.cos(angle), radius * torch.sin(angle)], dim=1)
    h = 1e-5
    grads = []
    for offset in (torch.tensor([h, 0.0], dtype=DTYPE), torch.tensor([0.0, h], dtype=DTYPE)):
        grads.append((field.displacement(points + offset) - field.displacement(points - offset)) / (2 * h))
    strain = torch.stack([grads[0][:, 0], grads[1][:, 1], grads[1][:, 0] + grads[0][:, 1]], dim=1)
    from_displacement = strain @ material.stiffness_matrix().T
    consistency = float((from_displacement - field.stress(points)).abs().max())

    hole_angle = torch.linspace(math.pi / 2, math.pi, 20, dtype=DTYPE)
    hole = torch.stack([torch.cos(hole_angle), torch.sin(hole_angle)], dim=1)
    sigma = field.stress(hole)
    traction = torch.stack(
        [sigma[:, 0] * hole[:, 0] + sigma[:, 2] * hole[:, 1], sigma[:, 2] * hole[:, 0] + sigma[:, 1] * hole[:, 1]],
        dim=1,
    )
    free = float(traction.abs().max())
    worst = max(consistency, free)
    return worst <= 1e-6, "exact plate field consistency {:.1e}, hole traction {:.1e}".format(consistency, free)


def _deterministic() -> Tuple[bool, str]:
    case = case_straight_beam(10)
    first = run_study(case, ("iga", "hybrid"), (2,), ladder=(0, 1), threads=2).to_csv()
    second = run_study(case, ("iga", "hybrid"), (2,), ladder=(0, 1), threads=1).to_csv()
    return first == second, "repeated study CSVs {}".format("identical" if first == second else "differ")


@_criterion("properties")
def check_properties() -> Tuple[bool, str]:
    """Basis, refinement, element, patch-test, equilibrium and determinism properties."""
    generator = torch.Generator().manual_seed(0)
    checks = [
        _partition_of_unity(generator),
        _derivatives(generator),
        _refinement_invariance(generator),
        _element_ranks(),
        _patch_test(),
        _flexibility_spd(),
        _equilibrium(),
        _exact_plate_field(generator),
        _deterministic(),
    ]
    return all(ok for ok, _ in checks), "; ".join(detail for _, detail in checks)


CRITERIA: Dict[str, Callable[[], CriterionResult]] = {
    fn.criterion_name: fn
    for fn in (
        check_q4_identity,
        check_straight_beam,
        check_curved_beam,
        check_cook,
        check_plate_compressible,
        check_plate_incompressible,
        check_properties,
    )
}


def run_acceptance(selected: Optional[Iterable[str]] = None) -> List[CriterionResult]:
    """Runs the named criteria (all by default) in order."""
    names = list(CRITERIA) if selected is None else list(selected)
    unknown = [name for name in names if name not in CRITERIA]
    if unknown:
        raise ConfigurationError("unknown criteria {}; choose from {}".format(unknown, list(CRITERIA)))
    return [CRITERIA[name]() for name in names]
