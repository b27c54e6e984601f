import math

import pytest
import torch
from hyiga._internal.tensor_utils import DTYPE
from hyiga.benchmarks import (
    acceptance,
    case_cook,
    case_curved_beam,
    case_plate_with_hole,
    case_straight_beam,
    CRITERIA,
    CSV_HEADER,
    make_case,
    relative_L2_error,
    ring_tip_deflection,
    run_acceptance,
    run_study,
    SolutionField,
    timoshenko_tip_deflection,
)
from hyiga.errors import ConfigurationError, InputError
from hyiga.material import Material, Regime
from parameterized import parameterized

from .common.hyiga_test_case import HyigaTestCase


class TestCases(HyigaTestCase):
    @parameterized.expand([(10, 10.0, 4.97018), (100, 1.0, 4.9997e-3), (1000, 0.1, 4.9999e-6)])
    def test_straight_beam_parameters(self, slenderness, thickness, load) -> None:
        case = case_straight_beam(slenderness)
        self.assertAlmostEqual(case.parameters["thickness"], thickness, places=12)
        self.assertEqual(case.parameters["load"], load)
        self.assertEqual(case.reference_tip, 20.0)
        self.assertEqual(case.base_patch.control_points[-1].tolist(), [100.0, thickness])

    def test_curved_beam_parameters(self) -> None:
        case = case_curved_beam(100)
        self.assertEqual((case.parameters["inner_radius"], case.parameters["outer_radius"]), (9.95, 10.05))
        self.assertAlmostEqual(case.parameters["load"], 0.1 * 0.1**3, places=15)
        self.assertEqual(case.material.nu, 0.0)
        with self.assertRaises(ConfigurationError):
            case.check_degree(1)

    def test_cook_material(self) -> None:
        case = case_cook()
        self.assertEqual((case.material.E, case.material.nu), (250.0, 0.4999))
        self.assertIs(case.material.regime, Regime.PLANE_STRAIN)
        self.assertEqual(case.parameters["load"], 100.0)

    @parameterized.expand(
        [
            ("beam", "straight_beam"),
            ("straight_beam", "straight_beam"),
            ("curved", "curved_beam"),
            ("Cook", "cook"),
            ("plate", "plate_with_hole"),
        ]
    )
    def test_make_case_names(self, problem, name) -> None:
        self.assertEqual(make_case(problem).name, name)

    def test_make_case_overrides(self) -> None:
        self.assertEqual(make_case("beam", slenderness=10).parameters["thickness"], 10.0)
        self.assertEqual(make_case("beam", nu=0.25).material.nu, 0.25)
        plate = make_case("plate", nu=0.4999)
        self.assertEqual(plate.material.nu, 0.4999)
        self.assertEqual(plate.parameters["nu"], 0.4999)

    def test_make_case_invalid(self) -> None:
        with self.assertRaises(ConfigurationError):
            make_case("bridge")
        with self.assertRaises(ConfigurationError):
            make_case("beam", slenderness=50)
        with self.assertRaises(ConfigurationError):
            case_cook().patch(2, -1)

    def test_ladder_divisions(self) -> None:
        self.assertEqual(case_straight_beam(10).mesh(2, 3).shape, (8, 1))
        self.assertEqual(case_cook().mesh(1, 2).shape, (4, 4))
        # the plate base patch already has two spans along the hole
        self.assertEqual(case_plate_with_hole().mesh(2, 1).shape, (4, 2))


class TestAnalytical(HyigaTestCase):
    def setUp(self) -> None:
        super().setUp()
        self.field = case_plate_with_hole(0.3).analytical

    def test_stress_concentration(self) -> None:
        points = torch.tensor([[0.0, 1.0], [-1.0, 0.0]], dtype=DTYPE)
        self.assertTensorClose(self.field.stress(points), [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0]], atol=1e-12)

    def test_far_field(self) -> None:
        points = torch.tensor([[-1e4, 0.0], [-1e4, 1e4], [0.0, 1e4]], dtype=DTYPE)
        self.assertTensorClose(self.field.stress(points), torch.tensor([[1.0, 0.0, 0.0]]).repeat(3, 1), atol=1e-7)

    def test_stress_is_in_equilibrium(self) -> None:
        points = torch.tensor([[-1.5, 0.5], [-2.0, 2.0], [-0.3, 3.0]], dtype=DTYPE)
        h = 1e-5
        dx = torch.tensor([h, 0.0], dtype=DTYPE)
        dy = torch.tensor([0.0, h], dtype=DTYPE)
        d_dx = (self.field.stress(points + dx) - self.field.stress(points - dx)) / (2 * h)
        d_dy = (self.field.stress(points + dy) - self.field.stress(points - dy)) / (2 * h)
        self.assertTensorClose(d_dx[:, 0] + d_dy[:, 2], torch.zeros(3), atol=1e-8)
        self.assertTensorClose(d_dx[:, 2] + d_dy[:, 1], torch.zeros(3), atol=1e-8)

    def test_symmetry_of_displacement(self) -> None:
        # u_y vanishes on y = 0 and u_x on x = 0
        points = torch.tensor([[-2.0, 0.0], [0.0, 2.5]], dtype=DTYPE)
        u = self.field.displacement(points)
        self.assertAlmostEqual(float(u[0, 1]), 0.0, places=14)
        self.assertAlmostEqual(float(u[1, 0]), 0.0, places=14)

    def test_timoshenko_beam(self) -> None:
        material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
        deflection = timoshenko_tip_deflection(100.0, 10.0, 4.97018, material)
        self.assertLess(abs(deflection - 20.0) / 20.0, 0.01)
        # bending dominates a slender beam
        slender = timoshenko_tip_deflection(100.0, 0.1, 4.9999e-6, material)
        self.assertAlmostEqual(slender, 20.0, delta=0.01)

    def test_ring(self) -> None:
        deflection = ring_tip_deflection(10.0, 1.0, 0.1, Material(1000.0, 0.0))
        self.assertAlmostEqual(deflection, math.pi * 0.3, places=12)
        self.assertAlmostEqual(deflection, 0.942, delta=0.001)


class TestStudy(HyigaTestCase):
    def test_relative_error_identities(self) -> None:
        solution = case_plate_with_hole(0.3).solve("iga", 2, 0)
        reference = SolutionField(solution)
        self.assertAlmostEqual(relative_L2_error(solution, reference), 0.0, places=10)
        self.assertAlmostEqual(relative_L2_error(solution.scaled(0.0), reference), 1.0, places=12)
        self.assertAlmostEqual(relative_L2_error(solution.scaled(1.01), reference), 0.01, places=9)
        with self.assertRaises(InputError):
            relative_L2_error(solution, SolutionField(solution.scaled(0.0)))

    def test_plate_error_decreases(self) -> None:
        case = case_plate_with_hole(0.3)
        table = run_study(case, ("iga",), (2,), ladder=(0, 1, 2))
        errors = [row.l2_error for row in table.rows]
        self.assertGreater(errors[0], 0.0)
        self.assertTrue(all(b < a for a, b in zip(errors, errors[1:])), errors)
        self.assertIsNone(table.rows[0].normalized_tip)

    def test_table_layout(self) -> None:
        case = case_straight_beam(10)
        table = run_study(case, ("iga", "hybrid"), (1,), ladder=(0, 1), keep_solutions=True)
        self.assertEqual(len(table), 4)
        self.assertEqual(
            [(row.formulation, row.refinement) for row in table.rows],
            [("iga", 0), ("iga", 1), ("hybrid", 0), ("hybrid", 1)],
        )
        # clamping removes one column of two control points
        self.assertEqual([row.active_dof for row in table.curve("hybrid", 1)], [4, 8])
        lines = table.to_csv().splitlines()
        self.assertEqual(lines[0], ",".join(CSV_HEADER))
        self.assertEqual(len(lines), 5)
        self.assertTrue(lines[1].startswith("straight_beam,iga,1,0,4,"))
        self.assertTrue(lines[1].endswith(","))  # no reference field, empty l2_error
        self.assertEqual(set(table.solutions), {("iga", 1, 0), ("iga", 1, 1), ("hybrid", 1, 0), ("hybrid", 1, 1)})
        self.assertEqual(len(table.summary()["straight_beam"]), 4)

    def test_concurrent_runs_are_identical(self) -> None:
        case = case_straight_beam(10)
        sequential = run_study(case, ("iga", "hybrid"), (1, 2), ladder=(0, 1), threads=1).to_csv()
        concurrent = run_study(case, ("iga", "hybrid"), (1, 2), ladder=(0, 1), threads=3).to_csv()
        self.assertEqual(sequential, concurrent)

    def test_unsupported_degree(self) -> None:
        with self.assertRaises(ConfigurationError):
            run_study(case_plate_with_hole(), ("iga",), (1,))


class TestLocking(HyigaTestCase):
    def test_bilinear_beam_locks(self) -> None:
        case = case_straight_beam(1000)
        self.assertLess(case.normalized_tip(case.solve("iga", 1, 0)), 0.1)

    def test_hybrid_is_more_flexible(self) -> None:
        case = case_straight_beam(100)
        conventional = case.solve("iga", 2, 1)
        hybrid = case.solve("hybrid", 2, 1)
        compliance_iga = float(conventional.displacement @ conventional.load)
        compliance_hybrid = float(hybrid.displacement @ hybrid.load)
        self.assertGreater(compliance_hybrid, compliance_iga)

    def test_thick_beam_tip(self) -> None:
        case = case_straight_beam(10)
        tip = case.normalized_tip(case.solve("hybrid", 2, 2))
        self.assertGreaterEqual(tip, 0.98)
        self.assertLessEqual(tip, 1.02)

    def test_curved_beam_tip_variants(self) -> None:
        case = case_curved_beam(10)
        solution = case.solve("hybrid", 2, 1)
        metrics = case.tip_metrics(solution)
        self.assertEqual(set(metrics), {"tip_inner", "tip_mid", "tip_outer"})
        self.assertEqual(metrics["tip_mid"], case.normalized_tip(solution))


class TestPropertyChecks(HyigaTestCase):
    def test_element_ranks(self) -> None:
        passed, detail = acceptance._element_ranks()
        self.assertTrue(passed, detail)

    def test_equilibrium_covers_every_problem(self) -> None:
        problems = {problem for problem, _ in acceptance.EQUILIBRIUM_CASES}
        self.assertEqual(problems, {"beam", "curved_beam", "cook", "plate"})
        slender = {slenderness for problem, slenderness in acceptance.EQUILIBRIUM_CASES if problem != "cook"}
        self.assertTrue({10, 100, 1000} <= slender)
        passed, detail = acceptance._equilibrium()
        self.assertTrue(passed, detail)


@pytest.mark.slow_test
class TestAcceptance(HyigaTestCase):
    def test_unknown_criterion(self) -> None:
        with self.assertRaises(ConfigurationError):
            run_acceptance(["no_such_criterion"])

    @parameterized.expand([(name,) for name in CRITERIA])
    def test_criterion(self, name) -> None:
        (result,) = run_acceptance([name])
        self.assertEqual(result.name, name)
        self.assertTrue(result.passed, str(result))
