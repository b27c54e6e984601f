import torch
from hyiga._internal.tensor_utils import DTYPE
from hyiga.errors import DomainError, InputError
from hyiga.nurbs import basis_functions, bspline_basis, find_span, find_spans, KnotVector
from parameterized import parameterized

from .common.hyiga_test_case import HyigaTestCase


class TestKnotVector(HyigaTestCase):
    def test_properties(self) -> None:
        kv = KnotVector(2, (0, 0, 0, 0.5, 1, 1, 1))
        self.assertEqual(kv.num_basis, 4)
        self.assertEqual(kv.domain, (0.0, 1.0))
        self.assertTrue(kv.is_open)
        self.assertEqual(kv.nonzero_spans, (2, 3))
        self.assertEqual(kv.breakpoints, (0.0, 0.5, 1.0))
        self.assertEqual(kv.multiplicity(0.0), 3)

    @parameterized.expand(
        [
            ("decreasing", 1, (0, 0, 1, 0.5, 1)),
            ("too_short", 2, (0, 0, 1, 1)),
            ("empty_domain", 1, (0, 0, 0, 0)),
            ("interior_multiplicity", 1, (0, 0, 0.5, 0.5, 1, 1)),
            ("not_finite", 1, (0, 0, float("nan"), 1, 1)),
        ]
    )
    def test_invalid(self, _, degree, knots) -> None:
        with self.assertRaises(InputError):
            KnotVector(degree, knots)


class TestFindSpan(HyigaTestCase):
    @parameterized.expand(
        [
            (1, (0, 0, 1, 1), 0.5, 1),
            (1, (0, 0, 0.5, 1, 1), 0.25, 1),
            (1, (0, 0, 0.5, 1, 1), 0.5, 2),
            (2, (0, 0, 0, 1, 1, 1), 1.0, 2),
            (2, (0, 0, 0, 1, 1, 1), 0.0, 2),
            (2, (0, 0, 0, 0.5, 1, 1, 1), 0.75, 3),
        ]
    )
    def test_find_span(self, degree, knots, xi, expected) -> None:
        kv = KnotVector(degree, knots)
        self.assertEqual(find_span(kv, xi), expected)
        self.assertEqual(int(find_spans(kv, torch.tensor([xi], dtype=DTYPE))[0]), expected)

    @parameterized.expand([(-0.1,), (1.5,), (float("inf"),)])
    def test_outside_range(self, xi) -> None:
        kv = KnotVector(1, (0, 0, 0.5, 1, 1))
        with self.assertRaises(DomainError):
            find_span(kv, xi)
        with self.assertRaises(DomainError):
            find_spans(kv, torch.tensor([0.5, xi], dtype=DTYPE))


class TestBasis(HyigaTestCase):
    def test_quadratic_midpoint(self) -> None:
        basis = bspline_basis(KnotVector(2, (0, 0, 0, 1, 1, 1)), 0.5)
        self.assertEqual(basis.span, 2)
        self.assertTensorClose(basis.values, [0.25, 0.5, 0.25])
        # derivatives of (1-ξ)², 2ξ(1-ξ), ξ²
        self.assertTensorClose(basis.derivatives, [-1.0, 0.0, 1.0])

    def test_linear_two_spans(self) -> None:
        basis = bspline_basis(KnotVector(1, (0, 0, 0.5, 1, 1)), 0.75)
        self.assertEqual(basis.span, 2)
        self.assertTensorClose(basis.values, [0.5, 0.5])
        self.assertTensorClose(basis.derivatives, [-2.0, 2.0])

    def test_right_endpoint(self) -> None:
        basis = bspline_basis(KnotVector(3, (0, 0, 0, 0, 0.5, 1, 1, 1, 1)), 1.0)
        self.assertTensorClose(basis.values, [0.0, 0.0, 0.0, 1.0])

    @parameterized.expand(
        [
            (1, (0, 0, 0.5, 1, 1)),
            (2, (0, 0, 0, 0.3, 0.3, 0.7, 1, 1, 1)),
            (3, (0, 0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1, 1)),
        ]
    )
    def test_partition_of_unity(self, degree, knots) -> None:
        kv = KnotVector(degree, knots)
        xi = torch.rand(200, dtype=DTYPE)
        values, derivatives = basis_functions(kv, xi)
        self.assertEqual(values.shape, (200, degree + 1))
        self.assertTensorClose(values.sum(dim=1), torch.ones(200), atol=1e-13)
        self.assertTensorClose(derivatives.sum(dim=1), torch.zeros(200), atol=1e-11)
        self.assertTrue(bool((values >= -1e-15).all()))

    def test_derivatives_match_finite_differences(self) -> None:
        kv = KnotVector(3, (0, 0, 0, 0, 0.5, 1, 1, 1, 1))
        xi = torch.tensor([0.1, 0.3, 0.6, 0.9], dtype=DTYPE)
        h = 1e-6
        spans = find_spans(kv, xi)
        _, derivatives = basis_functions(kv, xi, spans)
        plus, _ = basis_functions(kv, xi + h, spans)
        minus, _ = basis_functions(kv, xi - h, spans)
        self.assertTensorClose(derivatives, (plus - minus) / (2 * h), atol=1e-6)
