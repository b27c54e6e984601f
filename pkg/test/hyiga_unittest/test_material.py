import torch
from hyiga.errors import ConfigurationError
from hyiga.material import Material, Regime
from parameterized import parameterized

from .common.hyiga_test_case import HyigaTestCase


class TestMaterial(HyigaTestCase):
    def test_plane_stress_without_contraction(self) -> None:
        material = Material(1.0, 0.0, Regime.PLANE_STRESS)
        self.assertTensorClose(material.stiffness_matrix(), torch.diag(torch.tensor([1.0, 1.0, 0.5])))
        self.assertTensorClose(material.compliance_matrix(), torch.diag(torch.tensor([1.0, 1.0, 2.0])))

    def test_plane_strain_entry(self) -> None:
        C = Material(1000.0, 0.3, "plane_strain").stiffness_matrix()
        self.assertAlmostEqual(float(C[0, 0]), 1000.0 * 0.7 / (1.3 * 0.4), places=9)
        self.assertAlmostEqual(float(C[0, 0]), 1346.15, places=2)
        self.assertAlmostEqual(float(C[2, 2]), 1000.0 / 2.6, places=9)

    @parameterized.expand(
        [
            (1000.0, 0.3, Regime.PLANE_STRESS),
            (1000.0, 0.3, Regime.PLANE_STRAIN),
            (250.0, 0.4999, Regime.PLANE_STRAIN),
            (1.0, -0.5, Regime.PLANE_STRESS),
        ]
    )
    def test_compliance_inverts_stiffness(self, E, nu, regime) -> None:
        material = Material(E, nu, regime)
        C, S = material.stiffness_matrix(), material.compliance_matrix()
        self.assertTensorClose(S @ C, torch.eye(3), atol=1e-9)
        self.assertTensorClose(C, C.T, atol=0.0)
        self.assertGreater(float(torch.linalg.eigvalsh(C).min()), 0.0)

    def test_near_incompressible_is_stiff(self) -> None:
        soft = Material(250.0, 0.3, Regime.PLANE_STRAIN).stiffness_matrix()[0, 0]
        stiff = Material(250.0, 0.4999, Regime.PLANE_STRAIN).stiffness_matrix()[0, 0]
        self.assertGreater(float(stiff / soft), 100.0)

    @parameterized.expand([(0.5,), (0.7,), (-1.0,)])
    def test_invalid_poisson_ratio(self, nu) -> None:
        with self.assertRaises(ConfigurationError):
            Material(1.0, nu, Regime.PLANE_STRAIN)

    def test_invalid_modulus_and_regime(self) -> None:
        with self.assertRaises(ConfigurationError):
            Material(0.0, 0.3, Regime.PLANE_STRESS)
        with self.assertRaises(ConfigurationError):
            Material(1.0, 0.3, "plane_wave")

    def test_regime_required_for_matrices(self) -> None:
        material = Material(1.0, 0.3)
        with self.assertRaises(ConfigurationError):
            material.stiffness_matrix()
        self.assertEqual(material.replace(regime="plane-stress").regime, Regime.PLANE_STRESS)

    def test_derived_constants(self) -> None:
        material = Material(1000.0, 0.25, Regime.PLANE_STRAIN)
        self.assertAlmostEqual(material.shear_modulus, 400.0)
        self.assertAlmostEqual(material.kolosov_constant, 2.0)
        self.assertAlmostEqual(material.replace(regime=Regime.PLANE_STRESS).kolosov_constant, 2.75 / 1.25)
