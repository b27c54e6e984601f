from dataclasses import replace
from unittest.mock import patch

import numpy as np
import scipy.io
import torch
from hyiga._internal.tensor_utils import DTYPE
from hyiga.assembly import (
    apply_dirichlet,
    apply_traction,
    assemble,
    BoundaryCondition,
    build_mesh,
    edge_quadrature,
    EQUILIBRIUM_TOLERANCE,
    export_matrix_market,
    RESIDUAL_TOLERANCE,
    solve,
)
from hyiga.benchmarks import make_case
from hyiga.benchmarks.acceptance import EQUILIBRIUM_CASES
from hyiga.element import compute_element_systems
from hyiga.errors import DomainError, InputError, ResidualError, SingularSystemError
from hyiga.material import Material, Regime
from hyiga.nurbs import insert_knot, k_refine, KnotVector, load_patch, NurbsPatch
from parameterized import parameterized

from .common.hyiga_test_case import HyigaTestCase
from .common.parameterized_utils import nested_params


def _unit_square(degree: int = 1, divisions: int = 1) -> NurbsPatch:
    kv = KnotVector(1, (0, 0, 1, 1))
    points = torch.tensor([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], dtype=DTYPE)
    return k_refine(NurbsPatch(kv, kv, points, torch.ones(4, dtype=DTYPE)), degree, divisions, divisions)


class TestMesh(HyigaTestCase):
    def test_single_element(self) -> None:
        mesh = build_mesh(load_patch("straight_beam_100"))
        self.assertEqual(mesh.num_elements, 1)
        self.assertEqual(mesh.num_control_points, 4)
        self.assertEqual(mesh.connectivity.tolist(), [[0, 1, 2, 3]])

    def test_two_elements_share_control_points(self) -> None:
        mesh = build_mesh(insert_knot(load_patch("straight_beam_100"), "xi", 0.5))
        self.assertEqual(mesh.connectivity.tolist(), [[0, 1, 3, 4], [1, 2, 4, 5]])
        self.assertEqual(mesh.element_dofs[1].tolist(), [2, 3, 4, 5, 8, 9, 10, 11])

    def test_quadratic_grid(self) -> None:
        mesh = build_mesh(k_refine(load_patch("straight_beam_10"), 2, 10, 5))
        self.assertEqual(mesh.num_elements, 50)
        self.assertEqual(mesh.shape, (10, 5))
        self.assertEqual(mesh.patch.shape, (12, 7))
        self.assertEqual(mesh.n_dof, 2 * 12 * 7)
        # every control point belongs to some element
        self.assertEqual(torch.unique(mesh.connectivity).numel(), 84)

    def test_element_lookup(self) -> None:
        mesh = build_mesh(k_refine(load_patch("cook"), 2, 4, 2))
        element = mesh.element_at(0.6, 0.7)
        self.assertEqual(element.index, 1 * 4 + 2)
        self.assertEqual(mesh.element_at(1.0, 1.0).index, mesh.num_elements - 1)
        with self.assertRaises(DomainError):
            mesh.element_at(1.1, 0.5)


class TestAssemble(HyigaTestCase):
    material = Material(1000.0, 0.3, Regime.PLANE_STRESS)

    @parameterized.expand([("iga",), ("hybrid",)])
    def test_single_element_equals_element_matrix(self, formulation) -> None:
        patch = _unit_square(2)
        mesh = build_mesh(patch)
        system = assemble(mesh, self.material, formulation)
        element = compute_element_systems(patch, mesh.elements, self.material, formulation).stiffness[0]
        self.assertTensorClose(system.dense_stiffness(), element, atol=0.0)

    @nested_params([1, 2, 3], ["iga", "hybrid"])
    def test_rigid_modes_and_symmetry(self, degree, formulation) -> None:
        mesh = build_mesh(k_refine(load_patch("cook"), degree, 2, 2))
        K = assemble(mesh, self.material, formulation).dense_stiffness()
        self.assertLessEqual(float((K - K.T).abs().max()), 1e-12 * float(K.abs().max()))
        eigenvalues = torch.linalg.eigvalsh((K + K.T) / 2)
        scale = float(eigenvalues.max())
        self.assertEqual(int((eigenvalues.abs() < 1e-10 * scale).sum()), 3)

    def test_assembly_is_deterministic(self) -> None:
        mesh = build_mesh(k_refine(load_patch("plate_hole_quadratic"), 2, 2, 2))
        first = assemble(mesh, self.material, "hybrid").stiffness.toarray()
        second = assemble(mesh, self.material, "hybrid").stiffness.toarray()
        self.assertTrue(np.array_equal(first, second))


class TestLoads(HyigaTestCase):
    material = Material(1.0, 0.0, Regime.PLANE_STRESS)

    def test_constant_traction_on_bilinear_edge(self) -> None:
        system = assemble(build_mesh(_unit_square()), self.material, "iga")
        apply_traction(system, BoundaryCondition.traction("xi_max", (1.0, 0.0)))
        self.assertTensorClose(system.load, [0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.5, 0.0])

    def test_polynomial_traction_resultant(self) -> None:
        system = assemble(build_mesh(_unit_square(2, 3)), self.material, "iga")

        def traction(points):
            y = points[:, 1]
            return torch.stack([points[:, 0] * y * y, 1.0 + y**3], dim=1)

        apply_traction(system, BoundaryCondition.traction("xi_max", traction))
        self.assertTensorClose(system.load.reshape(-1, 2).sum(dim=0), [1.0 / 3.0, 1.25], atol=1e-13)

    def test_curved_edge_length(self) -> None:
        # the hole of the quarter plate is a quarter of the unit circle
        patch = k_refine(load_patch("plate_hole_quadratic"), 3, 2, 2)
        system = assemble(build_mesh(patch), self.material, "iga")
        apply_traction(system, BoundaryCondition.traction("eta_min", (1.0, 0.0)))
        self.assertAlmostEqual(float(system.load.reshape(-1, 2).sum(dim=0)[0]), np.pi / 2, places=6)

    def test_edge_quadrature_points(self) -> None:
        patch = k_refine(load_patch("cook"), 2, 4, 1)
        parametric, weights = edge_quadrature(patch, "eta_max")
        self.assertEqual(parametric.shape, (16, 2))
        self.assertTensorClose(parametric[:, 1], torch.ones(16))
        self.assertAlmostEqual(float(weights.sum()), 1.0, places=14)

    def test_point_load(self) -> None:
        system = assemble(build_mesh(_unit_square()), self.material, "iga")
        apply_traction(system, BoundaryCondition.point_load(3, (0.0, -2.0)))
        self.assertEqual(float(system.load[7]), -2.0)
        with self.assertRaises(InputError):
            apply_traction(system, BoundaryCondition.point_load(4, (0.0, 1.0)))

    def test_non_finite_traction(self) -> None:
        system = assemble(build_mesh(_unit_square()), self.material, "iga")
        with self.assertRaises(InputError):
            apply_traction(system, BoundaryCondition.traction("eta_max", lambda x: x / 0.0))

    def test_constraint_is_not_a_load(self) -> None:
        system = assemble(build_mesh(_unit_square()), self.material, "iga")
        with self.assertRaises(InputError):
            apply_traction(system, BoundaryCondition.fixed("xi_min"))


class TestSolve(HyigaTestCase):
    def test_active_dofs_of_clamped_beam(self) -> None:
        patch = k_refine(load_patch("straight_beam_10"), 2, 2, 1)
        system = assemble(build_mesh(patch), Material(1000.0, 0.3, "plane_stress"), "hybrid")
        reduced = apply_dirichlet(system, BoundaryCondition.fixed("xi_min"))
        self.assertEqual(reduced.active_dofs, 18)
        self.assertEqual(reduced.constrained.tolist(), [0, 1, 8, 9, 16, 17])

    def test_symmetry_constraints_fix_one_component(self) -> None:
        patch = k_refine(load_patch("plate_hole_quadratic"), 2)
        system = assemble(build_mesh(patch), Material(1000.0, 0.3, "plane_strain"), "iga")
        bcs = [BoundaryCondition.fixed("xi_min", components=(1,)), BoundaryCondition.fixed("xi_max", components=(0,))]
        reduced = apply_dirichlet(system, bcs)
        self.assertEqual(reduced.constrained.tolist(), [1, 6, 9, 14, 17, 22])
        K = reduced.stiffness.toarray()
        self.assertTrue(np.allclose(K, K.T, rtol=0.0, atol=1e-12 * np.abs(K).max()))

    def test_everything_constrained(self) -> None:
        system = assemble(build_mesh(_unit_square()), Material(1.0, 0.0, "plane_stress"), "iga")
        with self.assertRaises(InputError):
            apply_dirichlet(system, [BoundaryCondition.fixed("xi_min"), BoundaryCondition.fixed("xi_max")])

    @parameterized.expand([("iga",), ("hybrid",)])
    def test_axial_bar(self, formulation) -> None:
        # ν = 0: a clamped bar under an end load stays in a uniaxial state
        patch = k_refine(load_patch("straight_beam_100"), 1, 4, 1)
        material = Material(1000.0, 0.0, Regime.PLANE_STRESS)
        system = assemble(build_mesh(patch), material, formulation)
        apply_traction(system, BoundaryCondition.traction("xi_max", (1.0, 0.0)))
        solution = solve(apply_dirichlet(system, BoundaryCondition.fixed("xi_min")))
        tip = solution.displacement_at(torch.tensor([1.0, 1.0]), torch.tensor([0.0, 1.0]))
        # F L / (E A) with F = 1, L = 100, A = 1
        self.assertTensorClose(tip, [[0.1, 0.0], [0.1, 0.0]], atol=1e-8)
        self.assertLessEqual(solution.residual, 1e-10)
        self.assertEqual(solution.active_dofs, 16)

    @parameterized.expand([("iga",), ("hybrid",)])
    def test_equilibrium(self, formulation) -> None:
        patch = k_refine(load_patch("cook"), 2, 2, 2)
        system = assemble(build_mesh(patch), Material(250.0, 0.3, "plane_strain"), formulation)
        apply_traction(system, BoundaryCondition.traction("xi_max", (0.0, 6.25)))
        solution = solve(apply_dirichlet(system, BoundaryCondition.fixed("xi_min")))
        self.assertTensorClose(solution.total_load(), [0.0, 100.0], atol=1e-10)
        self.assertTensorClose(solution.total_reaction(), -solution.total_load(), atol=1e-8)
        self.assertTensorClose(
            solution.deformed_control_points(), patch.control_points + solution.displacement.reshape(-1, 2), atol=0.0
        )

    def test_random_system_round_trip(self) -> None:
        patch = k_refine(load_patch("cook"), 3, 2, 2)
        system = assemble(build_mesh(patch), Material(250.0, 0.3, "plane_strain"), "hybrid")
        system.load = torch.randn(system.n_dof, dtype=DTYPE)
        reduced = apply_dirichlet(system, BoundaryCondition.fixed("xi_min"))
        solution = solve(reduced)
        K = torch.from_numpy(reduced.stiffness.toarray())
        recovered = K @ solution.displacement[reduced.free]
        self.assertLess(float(torch.linalg.norm(recovered - reduced.load) / torch.linalg.norm(reduced.load)), 1e-10)

    def test_indefinite_system(self) -> None:
        system = assemble(build_mesh(_unit_square()), Material(1.0, 0.0, "plane_stress"), "iga")
        reduced = apply_dirichlet(system, BoundaryCondition.fixed("xi_min"))
        indefinite = replace(reduced, stiffness=-reduced.stiffness)
        with self.assertRaises(SingularSystemError) as context:
            solve(indefinite)
        self.assertEqual(context.exception.dof, int(reduced.free[0]))

    def test_matrix_market(self) -> None:
        patch = k_refine(load_patch("cook"), 2, 2, 2)
        system = assemble(build_mesh(patch), Material(250.0, 0.3, "plane_strain"), "hybrid")
        reduced = apply_dirichlet(system, BoundaryCondition.fixed("xi_min"))
        path = "{}/K.mtx".format(self.test_dir)
        content = export_matrix_market(reduced, path)
        self.assertTrue(content.startswith(b"%%MatrixMarket matrix coordinate real symmetric"))
        loaded = scipy.io.mmread(path).toarray()
        expected = reduced.stiffness.toarray()
        self.assertTrue(np.allclose(loaded, expected, rtol=1e-15, atol=0.0))

    @parameterized.expand([("iga",), ("hybrid",)])
    def test_slender_beam_residual_bound(self, formulation) -> None:
        # L/t = 1000: float64 cannot reach RESIDUAL_TOLERANCE, the round-off bound applies
        reduced = make_case("beam", slenderness=1000).reduced_system(formulation, 2, 2)
        solution = solve(reduced)
        self.assertGreater(solution.residual_tolerance, RESIDUAL_TOLERANCE)
        self.assertLessEqual(solution.residual, solution.residual_tolerance)
        expected = solution.roundoff / float(torch.linalg.norm(reduced.load))
        self.assertAlmostEqual(solution.residual_tolerance / expected, 1.0, places=12)

    def test_residual_bound_is_enforced(self) -> None:
        reduced = make_case("cook").reduced_system("hybrid", 2, 1)
        with patch("hyiga.assembly.system.torch.cholesky_solve", side_effect=lambda b, L: torch.zeros_like(b)):
            with self.assertRaises(ResidualError) as context:
                solve(reduced)
        self.assertAlmostEqual(context.exception.residual, 1.0, places=12)
        self.assertLess(context.exception.tolerance, 1e-6)

    @nested_params(EQUILIBRIUM_CASES, ["iga", "hybrid"])
    def test_equilibrium_every_benchmark(self, problem_case, formulation) -> None:
        problem, slenderness = problem_case
        solution = make_case(problem, slenderness=slenderness).solve(formulation, 2, 1)
        self.assertLessEqual(solution.residual, solution.residual_tolerance)
        self.assertLessEqual(solution.equilibrium_imbalance(), solution.equilibrium_tolerance())
        if problem in ("cook", "plate"):
            self.assertLessEqual(solution.equilibrium_imbalance(), EQUILIBRIUM_TOLERANCE)
