# -*- coding: utf-8 -*-

"""Tests for anchored bundles, their induced fields, and orbits."""

import unittest

import numpy as np

from anchorlift.anchored import (
    BUNDLE_NAMES,
    AnchoredBundle,
    CompositeFlowSpec,
    Section,
    bracket_rank,
    composite_flow,
    concatenation,
    evaluate_anchor,
    get_bundle,
    induced_field,
    invert_bundle,
    lie_bracket,
    linearity_residual,
    montgomery_profile,
    sample_orbit,
)
from anchorlift.exceptions import Blowup, NonFiniteOutput


def _unit_fields(bundle: AnchoredBundle):
    return [
        induced_field(bundle, Section.constant(bundle, row)) for row in np.eye(bundle.fiber_dim)
    ]


def _unit_sections(bundle: AnchoredBundle):
    return [Section.constant(bundle, row) for row in np.eye(bundle.fiber_dim)]


class TestBundles(unittest.TestCase):
    """Tests for the built-in bundles and anchor evaluation."""

    def test_registry(self):
        """Test all built-in bundles are linear and unknown names fail."""
        for name in BUNDLE_NAMES:
            with self.subTest(name=name):
                bundle = get_bundle(name)
                self.assertEqual(name, bundle.name)
                self.assertTrue(bundle.linear)
                self.assertLessEqual(linearity_residual(bundle), 1e-12)
        with self.assertRaises(KeyError):
            get_bundle("moebius")

    def test_nonlinear_anchor(self):
        """Test the linearity probe detects a quadratic anchor."""
        bundle = AnchoredBundle(1, 1, lambda q, u: u**2, name="square")
        self.assertGreater(linearity_residual(bundle), 1e-3)

    def test_non_finite_anchor(self):
        """Test a non-finite anchor value raises."""
        bundle = AnchoredBundle(1, 1, lambda q, u: u / q, linear=True, name="pole")
        with self.assertRaises(NonFiniteOutput):
            evaluate_anchor(bundle, [0.0], [1.0])

    def test_invert_bundle(self):
        """Test the inverse bundle negates the anchor and inverts back."""
        bundle = get_bundle("twoleaf")
        inverse = invert_bundle(bundle)
        x, u = np.array([0.3, -1.2]), np.array([0.5, 2.0])
        np.testing.assert_allclose(-evaluate_anchor(bundle, x, u), evaluate_anchor(inverse, x, u))
        self.assertEqual("twoleaf^-1", inverse.name)
        self.assertEqual("twoleaf", invert_bundle(inverse).name)

    def test_montgomery_profile(self):
        """Test the profile has a non-degenerate maximum at one."""
        self.assertAlmostEqual(0.25, montgomery_profile(1.0))
        self.assertGreater(montgomery_profile(1.0), montgomery_profile(0.9))
        self.assertGreater(montgomery_profile(1.0), montgomery_profile(1.1))


class TestBrackets(unittest.TestCase):
    """Tests for Lie brackets and bracket ranks."""

    def test_bracket_of_linear_fields(self):
        """Test ``[d/dx, x d/dy] = d/dy``."""
        bracket = lie_bracket(lambda q: np.array([1.0, 0.0]), lambda q: np.array([0.0, q[0]]))
        np.testing.assert_allclose([0.0, 1.0], bracket(np.array([0.4, -2.0])), atol=1e-9)

    def test_bracket_is_antisymmetric(self):
        """Test ``[X, Y] = -[Y, X]`` on the Montgomery fields."""
        x_field, y_field = _unit_fields(get_bundle("montgomery"))
        q = np.array([0.5, 0.2, -0.3])
        np.testing.assert_allclose(
            lie_bracket(x_field, y_field)(q), -lie_bracket(y_field, x_field)(q), atol=1e-9
        )

    def test_montgomery_first_bracket(self):
        """Test ``[X1, X2] = -p'(r) d/dz``."""
        x_field, y_field = _unit_fields(get_bundle("montgomery"))
        for r in (0.3, 0.8, 1.5):
            q = np.array([r, 0.1, 0.2])
            expected = np.array([0.0, 0.0, -(r - r**3)])
            np.testing.assert_allclose(expected, lie_bracket(x_field, y_field)(q), atol=1e-7)

    def test_montgomery_rank(self):
        """Test the Montgomery fields and brackets of depth 2 span R^3 for 0.2 <= r <= 2."""
        fields = _unit_fields(get_bundle("montgomery"))
        rng = np.random.default_rng(0)
        points = rng.uniform([0.2, -3.0, -1.0], [2.0, 3.0, 1.0], (20, 3))
        points = np.vstack([points, [[1.0, 0.0, 0.0], [1.0, 2.0, -0.5]]])
        for q in points:
            with self.subTest(q=q):
                rank, basis = bracket_rank(fields, q, depth=2)
                self.assertEqual(3, rank)
                self.assertEqual(3, len(basis))

    def test_montgomery_singular_circle(self):
        """Test on the circle ``r = 1`` depth 1 only reaches rank 2."""
        fields = _unit_fields(get_bundle("montgomery"))
        rank, _ = bracket_rank(fields, [1.0, 0.7, 0.0], depth=1)
        self.assertEqual(2, rank)

    def test_two_leaf_rank(self):
        """Test the two-leaf bundle has rank 1 on the axis and rank 2 off it."""
        fields = _unit_fields(get_bundle("twoleaf"))
        rng = np.random.default_rng(1)
        for x in rng.uniform(-2.0, 2.0, 10):
            self.assertEqual(1, bracket_rank(fields, [x, 0.0], depth=2)[0])
        for x, y in rng.uniform(0.1, 2.0, (10, 2)):
            sign = 1.0 if x > 1.0 else -1.0
            self.assertEqual(2, bracket_rank(fields, [x, sign * y], depth=2)[0])

    def test_zero_fields(self):
        """Test vanishing fields have rank zero."""
        rank, basis = bracket_rank([lambda q: np.zeros(2)], [0.0, 0.0], depth=1)
        self.assertEqual(0, rank)
        self.assertEqual([], basis)


class TestFlows(unittest.TestCase):
    """Tests for composite flows and their concatenations."""

    def setUp(self) -> None:
        """Set up the two-leaf bundle and its unit sections."""
        self.bundle = get_bundle("twoleaf")
        self.sections = _unit_sections(self.bundle)

    def test_concatenation(self):
        """Test the breakpoints and the endpoint of a concatenation."""
        spec = CompositeFlowSpec(tuple(self.sections), (0.5, -1.5))
        result = concatenation(spec, [0.0, 1.0], step=0.01)
        self.assertEqual((0.0, 1.5, 2.0), result.breakpoints)
        # Y = y d/dy flows first for time -1.5, then X = d/dx for 0.5
        np.testing.assert_allclose([0.5, np.exp(-1.5)], result.endpoint, rtol=1e-9)
        self.assertEqual(len(result.times), len(result.points))

    def test_inverse_returns(self):
        """Test the inverse composite flow brings points back."""
        spec = CompositeFlowSpec(
            (self.sections[0], self.sections[1], self.sections[0]), (0.3, 0.8, -1.1)
        )
        x = np.array([0.2, -0.7])
        back = composite_flow(spec.inverse(), composite_flow(spec, x, step=0.01), step=0.01)
        np.testing.assert_allclose(x, back, atol=1e-8)

    def test_mismatched_lengths(self):
        """Test a flow needs one time per field."""
        with self.assertRaises(ValueError):
            CompositeFlowSpec(tuple(self.sections), (1.0,))

    def test_blowup(self):
        """Test leaving the domain guard raises."""
        bundle = AnchoredBundle(1, 1, lambda q, u: u * q**2, linear=True, name="riccati")
        spec = CompositeFlowSpec((Section.constant(bundle, [1.0]),), (2.0,))
        with np.errstate(over="ignore", invalid="ignore"), self.assertRaises(Blowup):
            composite_flow(spec, [1.0], step=0.01)


class TestOrbits(unittest.TestCase):
    """Tests for orbit sampling."""

    def test_axis_leaf(self):
        """Test orbit samples from the origin stay on the axis."""
        bundle = get_bundle("twoleaf")
        sample = sample_orbit(bundle, _unit_sections(bundle), [0.0, 0.0], 100, 1.0, seed=0)
        self.assertEqual((100, 2), sample.points.shape)
        self.assertEqual(0, sample.dropped)
        self.assertLessEqual(float(np.max(np.abs(sample.points[:, 1]))), 1e-9)
        for x in sample.points:
            self.assertLessEqual(bundle.leaf_residual(sample.start, x), 1e-9)

    def test_upper_leaf(self):
        """Test orbit samples from the upper half plane stay in it."""
        bundle = get_bundle("twoleaf")
        sample = sample_orbit(bundle, _unit_sections(bundle), [0.0, 0.5], 30, 1.0, seed=3)
        self.assertTrue(np.all(sample.points[:, 1] > 0))

    def test_reproducible(self):
        """Test the same seed gives the same sample."""
        bundle = get_bundle("montgomery")
        sections = _unit_sections(bundle)
        first = sample_orbit(bundle, sections, [1.0, 0.0, 0.0], 10, 0.5, seed=7)
        second = sample_orbit(bundle, sections, [1.0, 0.0, 0.0], 10, 0.5, seed=7)
        np.testing.assert_array_equal(first.points, second.points)

    def test_count(self):
        """Test a sample needs at least one flow."""
        bundle = get_bundle("twoleaf")
        with self.assertRaises(ValueError):
            sample_orbit(bundle, _unit_sections(bundle), [0.0, 0.0], 0, 1.0, seed=0)
