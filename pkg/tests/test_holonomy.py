# -*- coding: utf-8 -*-

"""Tests for holonomy samples and holonomy algebra estimates."""

import math
import unittest

import numpy as np

from anchorlift.anchored import Section, get_bundle
from anchorlift.curves import PiecewiseControl
from anchorlift.exceptions import DimensionMismatch, NoLogsAvailable, SpecMismatch
from anchorlift.holonomy import (
    HolonomySample,
    LoopFamily,
    conjugate_sample,
    estimate_to_frame,
    generate_loops,
    holonomy_algebra,
    principal_angle,
    sample_along,
    sample_holonomy,
    sample_loops,
    sample_to_frame,
    small_loop_log,
    vertical_rank,
)
from anchorlift.liegroup import exp, get_group
from anchorlift.lift import get_lift


class TestLoopFamilies(unittest.TestCase):
    """Tests for building loops."""

    def setUp(self) -> None:
        """Set up the planar bundle."""
        self.bundle = get_bundle("planar-identity")

    def test_validation(self):
        """Test unknown kinds, bad orientations, and negative scales are refused."""
        with self.assertRaises(ValueError):
            LoopFamily("spiral", [0.0, 0.0], [[1.0, 1.0]])
        with self.assertRaises(ValueError):
            LoopFamily("rectangles", [0.0, 0.0], [[1.0, 1.0]], orientation=0)
        with self.assertRaises(ValueError):
            LoopFamily("rectangles", [0.0, 0.0], [[1.0, -1.0]])

    def test_scalar_scales(self):
        """Test a single number is a square."""
        family = LoopFamily("rectangles", [0.0, 0.0], [0.5, [1.0, 2.0]])
        self.assertEqual(((0.5, 0.5), (1.0, 2.0)), family.scales)

    def test_counts(self):
        """Test one loop per scale for each kind."""
        for kind in ("rectangles", "polygon", "lasso"):
            with self.subTest(kind=kind):
                family = LoopFamily(kind, [0.0, 0.0], [[1.0, 1.0], [0.5, 2.0]], tail=[0.3, 0.1])
                self.assertEqual(2, len(generate_loops(family, self.bundle)))

    def test_loops_close(self):
        """Test every generated loop returns to the base point on the planar bundle."""
        lift = get_lift("zero", self.bundle)
        for kind in ("rectangles", "polygon", "lasso"):
            family = LoopFamily(kind, [0.2, -0.4], [[1.0, 0.5]], tail=[0.3, 0.1], orientation=-1)
            sample = sample_holonomy(lift, family, step=0.05, closure=False)
            self.assertEqual(("0",), sample.loop_ids)

    def test_dimension_mismatch(self):
        """Test families that don't fit the bundle raise."""
        with self.assertRaises(DimensionMismatch):
            generate_loops(LoopFamily("rectangles", [0.0, 0.0, 0.0], [1.0]), self.bundle)
        with self.assertRaises(DimensionMismatch):
            generate_loops(LoopFamily("rectangles", [0.0, 0.0], [1.0], plane=(0, 2)), self.bundle)
        with self.assertRaises(DimensionMismatch):
            generate_loops(LoopFamily("lasso", [0.0, 0.0], [1.0], tail=[1.0]), self.bundle)


class TestSamples(unittest.TestCase):
    """Tests for holonomy samples."""

    def setUp(self) -> None:
        """Set up the area and the flat lifts on the planar bundle."""
        self.bundle = get_bundle("planar-identity")
        self.area = get_lift("so2-area", self.bundle)
        self.flat = get_lift("so3-flat2", self.bundle)

    def test_closure(self):
        """Test the ids and logarithms of a sample with reversals and compositions."""
        family = LoopFamily("rectangles", [0.0, 0.0], [[1.0, 1.0], [1.0, 2.0]])
        sample = sample_holonomy(self.area, family, step=0.01)
        self.assertEqual(("0", "1", "0*", "1*", "1.0"), sample.loop_ids)
        self.assertEqual(0, sample.skipped)
        coords = [a.coords[0] for a in sample.logs]
        np.testing.assert_allclose([1.0, 2.0, -1.0, -2.0, 3.0], coords, atol=1e-9)

    def test_polygon_area(self):
        """Test a hexagon turns by its area."""
        for radius in (0.5, 1.0):
            family = LoopFamily("polygon", [0.3, 0.1], [radius])
            sample = sample_holonomy(self.area, family, step=0.01, closure=False)
            expected = 1.5 * math.sqrt(3.0) * radius**2
            self.assertAlmostEqual(expected, sample.logs[0].coords[0], delta=1e-9)

    def test_skipped(self):
        """Test a half turn has no logarithm and is counted."""
        family = LoopFamily("rectangles", [0.0, 0.0], [[math.pi, 1.0]])
        sample = sample_holonomy(self.area, family, step=0.01, closure=False)
        self.assertEqual(1, sample.skipped)
        self.assertEqual([], sample.available_logs)
        with self.assertRaises(NoLogsAvailable):
            holonomy_algebra(sample)

    def test_conjugate_sample(self):
        """Test conjugating a sample matches transporting from the new reference."""
        family = LoopFamily("lasso", [0.0, 0.0], [[0.5, 0.5], [1.0, 0.3]], tail=[0.4, -0.2])
        loops = generate_loops(family, self.bundle)
        g = exp(get_group("SO3").vector([0.3, -0.5, 1.1]))
        base = sample_loops(self.flat, loops, family.base_point, step=0.01)
        moved = sample_loops(self.flat, loops, family.base_point, step=0.01, reference=g)
        conjugated = conjugate_sample(base, g)
        for left, right in zip(conjugated.elements, moved.elements):
            self.assertLessEqual(left.distance(right), 1e-9)
        np.testing.assert_allclose(g.matrix, conjugated.reference.matrix)
        with self.assertRaises(SpecMismatch):
            conjugate_sample(base, get_group("SO2").identity())

    def test_sample_along(self):
        """Test a connector carries the sample to an equal one at its end."""
        family = LoopFamily("rectangles", [0.0, 0.0], [[0.5, 0.5], [1.0, 0.3]])
        base = sample_holonomy(self.flat, family, step=0.01, closure=False)
        connector = PiecewiseControl.constant([0.4, -0.3], 1.0)
        along = sample_along(self.flat, family, connector, step=0.01)
        np.testing.assert_allclose([0.4, -0.3], along.base_point, atol=1e-12)
        for left, right in zip(base.elements, along.elements):
            self.assertLessEqual(left.distance(right), 1e-9)

    def test_to_frame(self):
        """Test the columns of the sample table."""
        family = LoopFamily("rectangles", [0.0, 0.0], [[0.5, 0.5], [math.pi, 1.0]])
        sample = sample_holonomy(self.area, family, step=0.01, closure=False)
        df = sample_to_frame(sample)
        columns = ["loop", "has_log", "g11", "g12", "g21", "g22", "log1", "residual"]
        self.assertEqual(columns, list(df.columns))
        self.assertEqual([True, False], list(df["has_log"]))
        self.assertTrue(math.isnan(df["log1"][1]))


class TestAlgebra(unittest.TestCase):
    """Tests for holonomy algebra estimates."""

    def setUp(self) -> None:
        """Set up the planar bundle."""
        self.bundle = get_bundle("planar-identity")
        self.family = LoopFamily("rectangles", [0.0, 0.0], [[0.5, 0.5], [1.0, 1.0]])

    def test_area_rank(self):
        """Test the area lift has a one-dimensional algebra."""
        lift = get_lift("so2-area", self.bundle)
        estimate = holonomy_algebra(sample_holonomy(lift, self.family, step=0.01))
        self.assertEqual(1, estimate.rank)
        self.assertEqual(0.0, estimate.closure_residual)

    def test_flat_rank(self):
        """Test two non-commuting directions in so(3) generate all of it."""
        lift = get_lift("so3-flat2", self.bundle)
        estimate = holonomy_algebra(
            sample_holonomy(lift, self.family, step=0.01), extra_bracket_depth=2, tol=1e-6
        )
        self.assertEqual(3, estimate.rank)
        self.assertLessEqual(estimate.closure_residual, 1e-6)
        df = estimate_to_frame(estimate)
        self.assertEqual(["basis", "c1", "c2", "c3"], list(df.columns))
        self.assertEqual(3, len(df))

    def test_zero_lift(self):
        """Test the zero lift has a trivial algebra."""
        lift = get_lift("zero", self.bundle, {"group": "SO3"})
        estimate = holonomy_algebra(sample_holonomy(lift, self.family, step=0.01))
        self.assertEqual(0, estimate.rank)
        self.assertEqual(0.0, principal_angle(estimate, estimate))

    def test_no_logs(self):
        """Test a sample without logarithms can't be estimated."""
        spec = get_group("SO2")
        sample = HolonomySample(
            spec=spec,
            base_point=np.zeros(2),
            elements=(spec.identity(),),
            logs=(None,),
            loop_ids=("0",),
            reference=spec.identity(),
        )
        with self.assertRaises(NoLogsAvailable):
            holonomy_algebra(sample)

    def test_reference_change(self):
        """Test the estimate at ``u g`` is the estimate at ``u`` carried by ``Ad_g^-1``."""
        lift = get_lift("so3-area-axis", self.bundle)
        g = exp(get_group("SO3").vector([0.7, 0.2, -0.4]))
        at_identity = holonomy_algebra(sample_holonomy(lift, self.family, step=0.01))
        at_g = holonomy_algebra(sample_holonomy(lift, self.family, step=0.01, reference=g))
        self.assertEqual(1, at_identity.rank)
        self.assertLessEqual(principal_angle(at_identity.transported(g), at_g), 1e-6)
        self.assertGreater(principal_angle(at_identity, at_g), 1e-3)

    def test_principal_angle_ranks(self):
        """Test estimates of different ranks can't be compared."""
        flat = holonomy_algebra(
            sample_holonomy(get_lift("so3-flat2", self.bundle), self.family, step=0.01),
            extra_bracket_depth=2,
        )
        axis = holonomy_algebra(
            sample_holonomy(get_lift("so3-area-axis", self.bundle), self.family, step=0.01)
        )
        with self.assertRaises(DimensionMismatch):
            principal_angle(flat, axis)


class TestInfinitesimal(unittest.TestCase):
    """Tests for small loops and the vertical bracket rank."""

    def setUp(self) -> None:
        """Set up the flat lift on the planar bundle."""
        self.bundle = get_bundle("planar-identity")
        self.lift = get_lift("so3-flat2", self.bundle)

    def test_small_loop_log(self):
        """Test the small square has ``log(a) / eps^2`` close to ``[E2, E1] = -E3``."""
        expected = np.array([0.0, 0.0, -1.0])
        errors = []
        for eps in (1e-2, 5e-3):
            with self.subTest(eps=eps):
                plain = small_loop_log(self.lift, [0.1, 0.2], eps=eps)
                self.assertAlmostEqual(-1.0, plain.coords[2], delta=1e-3)
                self.assertAlmostEqual(1.0, float(np.linalg.norm(plain.coords)), delta=1e-3)
                errors.append(float(np.linalg.norm(plain.coords - expected)))
        self.assertGreaterEqual(math.log2(errors[0] / errors[1]), 0.8)
        extrapolated = small_loop_log(self.lift, [0.1, 0.2], eps=1e-2, extrapolate=True)
        self.assertLess(float(np.linalg.norm(extrapolated.coords - expected)), errors[0])

    def test_small_loop_area(self):
        """Test the area lift's small square gives the curvature."""
        lift = get_lift("so2-area", self.bundle, {"kappa": 0.5})
        np.testing.assert_allclose([0.5], small_loop_log(lift, [1.0, -1.0], eps=0.05).coords)

    def test_small_loop_eps(self):
        """Test a non-positive size raises."""
        with self.assertRaises(ValueError):
            small_loop_log(self.lift, [0.0, 0.0], eps=0.0)

    def test_vertical_rank(self):
        """Test the brackets of the lifted fields gain one vertical direction per depth."""
        sections = [Section.constant(self.bundle, row) for row in np.eye(2)]
        g = get_group("SO3").identity()
        self.assertEqual(1, vertical_rank(self.lift, sections, [0.3, -0.2], g, depth=1))
        self.assertEqual(3, vertical_rank(self.lift, sections, [0.3, -0.2], g, depth=2))
