import math

import torch
from hyiga._internal.tensor_utils import DTYPE
from hyiga.assembly import assemble, build_mesh
from hyiga.benchmarks import distorted_square_patch, patch_test_residual, q4_global_stiffness
from hyiga.element import (
    compute_element_systems,
    element_matrices_conventional,
    element_matrices_hybrid,
    ElementOptions,
    Formulation,
    gauss_legendre,
    jacobians,
    strain_displacement_B,
    stress_basis_for_degree,
    tensor_rule,
    transformation_T,
)
from hyiga.errors import ConfigurationError, MeshError
from hyiga.material import Material, Regime
from hyiga.nurbs import k_refine, KnotVector, load_patch, NurbsPatch, surface_point

from .common.hyiga_test_case import HyigaTestCase
from .common.parameterized_utils import nested_params


def _unit_square(degree: int = 1) -> NurbsPatch:
    kv = KnotVector(1, (0, 0, 1, 1))
    points = torch.tensor([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], dtype=DTYPE)
    return k_refine(NurbsPatch(kv, kv, points, torch.ones(4, dtype=DTYPE)), degree)


def _single_element(patch: NurbsPatch):
    return build_mesh(patch).elements[0]


class TestQuadrature(HyigaTestCase):
    @nested_params([1, 2, 3, 4])
    def test_gauss_legendre_exactness(self, n) -> None:
        points, weights = gauss_legendre(n)
        self.assertEqual(points.dtype, DTYPE)
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            self.assertAlmostEqual(float((weights * points**k).sum()), exact, places=13)

    def test_gauss_legendre_invalid(self) -> None:
        with self.assertRaises(ConfigurationError):
            gauss_legendre(0)

    def test_tensor_rule_ordering(self) -> None:
        rule = tensor_rule(2, 3)
        pu, _ = gauss_legendre(2)
        pv, _ = gauss_legendre(3)
        self.assertEqual(rule.num_points, 6)
        self.assertEqual(rule.points_per_direction, (2, 3))
        self.assertTensorClose(rule.points[1], [float(pu[1]), float(pv[0])])
        self.assertTensorClose(rule.points[2], [float(pu[0]), float(pv[1])])
        self.assertAlmostEqual(float(rule.weights.sum()), 4.0, places=13)


class TestStressBasis(HyigaTestCase):
    def test_sizes(self) -> None:
        self.assertEqual([stress_basis_for_degree(p).n_beta for p in (1, 2, 3)], [5, 16, 33])

    def test_bilinear_layout(self) -> None:
        P = stress_basis_for_degree(1).evaluate(torch.tensor([0.3, 0.7], dtype=DTYPE))
        expected = [[1.0, 0.7, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.3, 0.0], [0.0, 0.0, 0.0, 0.0, 1.0]]
        self.assertTensorClose(P, expected)

    def test_row_sparsity(self) -> None:
        points = torch.rand(7, 2, dtype=DTYPE) * 2 - 1
        for degree, counts in ((2, [6, 6, 4]), (3, [12, 12, 9])):
            basis = stress_basis_for_degree(degree)
            P = basis.evaluate(points)
            self.assertEqual(P.shape, (7, 3, basis.n_beta))
            used = (P != 0).any(dim=0)  # [3, n_beta]
            self.assertEqual(used.sum(dim=1).tolist(), counts)
            # no β column is shared between stress components
            self.assertEqual(used.sum(dim=0).tolist(), [1] * basis.n_beta)

    def test_cubic_shear_row(self) -> None:
        shear = stress_basis_for_degree(3).rows[2]
        self.assertIn((2, 2), shear)
        self.assertTrue(all(a + b <= 4 and max(a, b) <= 2 for a, b in shear))

    def test_unsupported_degree(self) -> None:
        with self.assertRaises(ConfigurationError):
            stress_basis_for_degree(4)


class TestMapping(HyigaTestCase):
    def test_unit_square_jacobian(self) -> None:
        patch = _unit_square()
        result = jacobians(patch, _single_element(patch), torch.tensor([0.2, -0.4], dtype=DTYPE))
        self.assertTensorClose(result.J, [[0.5, 0.0], [0.0, 0.5]])
        self.assertAlmostEqual(float(result.det_J), 0.25, places=14)

    def test_beam_jacobian(self) -> None:
        patch = load_patch("straight_beam_100")
        result = jacobians(patch, _single_element(patch), torch.zeros(2, dtype=DTYPE))
        self.assertTensorClose(result.J1, [[100.0, 0.0], [0.0, 1.0]])
        self.assertTensorClose(result.J, [[50.0, 0.0], [0.0, 0.5]])

    def test_curved_jacobian_matches_finite_differences(self) -> None:
        patch = load_patch("curved_beam_10")
        element = _single_element(patch)
        point = torch.tensor([0.3, -0.2], dtype=DTYPE)
        result = jacobians(patch, element, point)
        self.assertGreater(float(result.det_J), 0.0)
        xi, eta = (point[0].item() + 1) / 2, (point[1].item() + 1) / 2
        h = 1e-6
        d_xi = (surface_point(patch, xi + h, eta) - surface_point(patch, xi - h, eta)) / (2 * h)
        d_eta = (surface_point(patch, xi, eta + h) - surface_point(patch, xi, eta - h)) / (2 * h)
        self.assertTensorClose(result.J1, torch.stack([d_xi, d_eta]), atol=1e-6)

    def test_inverted_element(self) -> None:
        kv = KnotVector(1, (0, 0, 1, 1))
        mirrored = NurbsPatch(kv, kv, [[1.0, 0.0], [0.0, 0.0], [1.0, 1.0], [0.0, 1.0]], torch.ones(4))
        mesh = build_mesh(mirrored)
        with self.assertRaises(MeshError) as context:
            compute_element_systems(mirrored, mesh.elements, Material(1.0, 0.0, "plane_stress"), "iga")
        self.assertEqual(context.exception.element, 0)

    def test_transformation_of_simple_maps(self) -> None:
        self.assertTensorClose(transformation_T(torch.eye(2, dtype=DTYPE)), torch.eye(3))
        T = transformation_T(torch.tensor([[2.0, 0.0], [0.0, 3.0]], dtype=DTYPE))
        self.assertTensorClose(T, torch.diag(torch.tensor([4.0, 9.0, 6.0])))

    def test_transformation_is_tensor_push(self) -> None:
        J = torch.randn(5, 2, 2, dtype=DTYPE)
        tau = torch.randn(5, 3, dtype=DTYPE)
        tensor = torch.stack([torch.stack([tau[:, 0], tau[:, 2]], -1), torch.stack([tau[:, 2], tau[:, 1]], -1)], -2)
        pushed = J.mT @ tensor @ J
        expected = torch.stack([pushed[:, 0, 0], pushed[:, 1, 1], pushed[:, 0, 1]], dim=-1)
        actual = (transformation_T(J) @ tau.unsqueeze(-1)).squeeze(-1)
        self.assertTensorClose(actual, expected, atol=1e-12)

    def test_strain_displacement(self) -> None:
        patch = k_refine(distorted_square_patch(), 2)
        element = build_mesh(patch).elements[3]
        point = torch.tensor([0.1, 0.6], dtype=DTYPE)
        B = strain_displacement_B(patch, element, point)
        n_loc = element.control_points.numel()
        self.assertEqual(B.shape, (3, 2 * n_loc))
        translation = torch.tensor([0.3, -0.7], dtype=DTYPE).repeat(n_loc)
        self.assertTensorClose(B @ translation, torch.zeros(3), atol=1e-13)
        # u_x = x is reproduced exactly by the isoparametric basis
        x = patch.control_points[element.control_points, 0]
        stretch = torch.stack([x, torch.zeros_like(x)], dim=1)
        self.assertTensorClose(B @ stretch.reshape(-1), [1.0, 0.0, 0.0], atol=1e-12)


class TestElementMatrices(HyigaTestCase):
    material = Material(1.0, 0.0, Regime.PLANE_STRESS)

    def test_bilinear_square(self) -> None:
        patch = _unit_square()
        element = _single_element(patch)
        hybrid = element_matrices_hybrid(patch, element, self.material)
        conventional = element_matrices_conventional(patch, element, self.material)
        for K in (hybrid.stiffness, conventional.stiffness):
            self.assertTensorClose(K, K.T, atol=0.0)
            eigenvalues = torch.linalg.eigvalsh(K)
            self.assertTensorClose(eigenvalues[:3], torch.zeros(3), atol=1e-12)
            self.assertGreater(float(eigenvalues[3]), 1e-6)
        # the hybrid element is softer
        difference = torch.linalg.eigvalsh(conventional.stiffness - hybrid.stiffness)
        self.assertGreater(float(difference.min()), -1e-12)
        self.assertGreater(float(difference.max()), 1e-3)
        self.assertLessEqual(
            float(torch.linalg.eigvalsh(hybrid.stiffness).max()),
            float(torch.linalg.eigvalsh(conventional.stiffness).max()) + 1e-12,
        )

    @nested_params(["cook", "curved_beam_10"], [1, 2, 3], ["iga", "hybrid"])
    def test_rank(self, name, degree, formulation) -> None:
        base = load_patch(name)
        if degree < max(base.degree_u, base.degree_v):
            self.skipTest("{} starts above degree {}".format(name, degree))
        patch = k_refine(base, degree)
        material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
        systems = compute_element_systems(patch, build_mesh(patch).elements, material, formulation)
        K = systems.stiffness[0]
        self.assertEqual(int(torch.linalg.matrix_rank(K, rtol=1e-10)), K.shape[0] - 3)
        if formulation == "hybrid":
            self.assertEqual(systems.H.shape[-1], stress_basis_for_degree(degree).n_beta)
            self.assertGreater(float(torch.linalg.eigvalsh(systems.H[0]).min()), 0.0)

    @nested_params([1, 2, 3], ["iga", "hybrid"])
    def test_rotation_objectivity(self, degree, formulation) -> None:
        patch = k_refine(load_patch("cook"), degree)
        angle = float(torch.rand(1)) * 2 * math.pi
        material = Material(250.0, 0.3, Regime.PLANE_STRAIN)
        before = compute_element_systems(patch, build_mesh(patch).elements, material, formulation).stiffness[0]
        rotated = patch.rotated(angle)
        after = compute_element_systems(rotated, build_mesh(rotated).elements, material, formulation).stiffness[0]
        eig_before, eig_after = torch.linalg.eigvalsh(before), torch.linalg.eigvalsh(after)
        self.assertTensorClose(eig_after, eig_before, atol=1e-9 * float(eig_before.max()))

    @nested_params([1, 2, 3], ["iga", "hybrid"])
    def test_rigid_modes_annihilated(self, degree, formulation) -> None:
        patch = k_refine(load_patch("cook"), degree)
        K = compute_element_systems(
            patch, build_mesh(patch).elements, Material(250.0, 0.3, "plane_strain"), formulation
        ).stiffness[0]
        x, y = patch.control_points[:, 0], patch.control_points[:, 1]
        modes = [
            torch.stack([torch.ones_like(x), torch.zeros_like(x)], 1),
            torch.stack([torch.zeros_like(x), torch.ones_like(x)], 1),
            torch.stack([-y, x], 1),
        ]
        scale = float(K.abs().max()) * float(patch.control_points.abs().max())
        for mode in modes:
            self.assertLess(float((K @ mode.reshape(-1)).abs().max()), 1e-10 * scale)

    @nested_params([1, 2, 3], ["iga", "hybrid"])
    def test_quadrature_is_sufficient(self, degree, formulation) -> None:
        patch = k_refine(load_patch("straight_beam_10"), degree)
        elements = build_mesh(patch).elements
        material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
        default = compute_element_systems(patch, elements, material, formulation).stiffness[0]
        doubled = compute_element_systems(
            patch, elements, material, formulation, options=ElementOptions(quadrature=2 * (degree + 1))
        ).stiffness[0]
        self.assertLess(float(torch.linalg.norm(doubled - default) / torch.linalg.norm(default)), 1e-10)

    @nested_params([1, 2, 3], ["iga", "hybrid"])
    def test_patch_test(self, degree, formulation) -> None:
        material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
        distorted = k_refine(distorted_square_patch(), degree)
        residual = patch_test_residual(distorted, material, formulation, ElementOptions(t_eval="centroid"))
        self.assertLess(residual, 1e-10)
        # affine elements: per-point and centroid transformations coincide
        square = k_refine(distorted_square_patch((0.5, 0.5)), degree)
        self.assertLess(patch_test_residual(square, material, formulation), 1e-10)

    def test_stress_recovery_of_constant_state(self) -> None:
        patch = _unit_square(2)
        element = _single_element(patch)
        material = Material(1000.0, 0.3, Regime.PLANE_STRESS)
        system = element_matrices_hybrid(patch, element, material)
        A = torch.tensor([[1e-3, 0.0], [0.0, -2e-3]], dtype=DTYPE)
        u_e = (patch.control_points[element.control_points] @ A.T).reshape(-1)
        beta = system.stress_parameters(u_e)
        expected = material.stiffness_matrix() @ torch.tensor([1e-3, -2e-3, 0.0], dtype=DTYPE)
        # constant terms of τξξ, τηη, τξη scaled by J = diag(1/2, 1/2)
        self.assertTensorClose(beta[[0, 6, 12]] / 4.0, expected, atol=1e-10)
        self.assertTensorClose(beta[[1, 2, 3, 4, 5, 7, 8, 9, 10, 11, 13, 14, 15]], torch.zeros(13), atol=1e-10)

    def test_body_force_load(self) -> None:
        patch = k_refine(load_patch("cook"), 2, 2, 2)
        mesh = build_mesh(patch)
        options = ElementOptions(body_force=lambda x: torch.tensor([0.0, -2.0], dtype=DTYPE).expand(x.shape[0], 2))
        system = assemble(mesh, Material(250.0, 0.3, "plane_strain"), "iga", options)
        # area of the tapered membrane: 48 * (44 + 16) / 2
        self.assertTensorClose(system.load.reshape(-1, 2).sum(dim=0), [0.0, -2.0 * 1440.0], atol=1e-9)

    def test_hybrid_requires_equal_degrees(self) -> None:
        patch = load_patch("curved_beam_10")
        with self.assertRaises(ConfigurationError):
            compute_element_systems(patch, build_mesh(patch).elements, self.material, Formulation.HYBRID)

    @nested_params(["iga", "hybrid"])
    def test_bilinear_equals_q4(self, formulation) -> None:
        patch = k_refine(load_patch("cook"), 1, 2, 2)
        material = Material(250.0, 0.3, Regime.PLANE_STRAIN)
        K = assemble(build_mesh(patch), material, formulation).stiffness.toarray()
        oracle = q4_global_stiffness(
            patch.control_points.numpy(), patch.shape, material, hybrid=formulation == "hybrid"
        )
        self.assertLess(float(abs(K - oracle).max() / abs(oracle).max()), 1e-12)
