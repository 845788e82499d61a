# -*- coding: utf-8 -*-

"""Tests for matrix Lie groups and the right-logarithmic-derivative solver."""

import math
import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from anchorlift.constants import CONSTRAINT_TOL, ROUND_TRIP_TOL
from anchorlift.exceptions import NonFiniteRHS, OutOfInjectivityRadius, SpecMismatch
from anchorlift.liegroup import (
    GROUP_NAMES,
    ad_action,
    ad_matrix,
    bracket,
    exp,
    get_group,
    log,
    solve_right_log_ode,
    steps_for,
)

coordinate = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False)


def _coords(dim: int):
    return st.lists(coordinate, min_size=dim, max_size=dim).map(np.array)


def _so3_trig(t: float) -> np.ndarray:
    return np.array([math.sin(t), math.cos(2 * t), t])


class TestGroups(unittest.TestCase):
    """Tests for the built-in groups."""

    def test_registry(self):
        """Test every listed group can be built and unknown names fail."""
        for name in GROUP_NAMES:
            with self.subTest(name=name):
                spec = get_group(name)
                self.assertEqual(name, spec.name)
                self.assertTrue(spec.identity().is_valid())
                self.assertEqual(len(spec.basis), spec.algebra_dim)
        with self.assertRaises(KeyError):
            get_group("SU2")

    def test_dimensions(self):
        """Test the algebra dimensions and abelian flags."""
        expected = {"SO2": 1, "SO3": 3, "SE2": 3, "Heisenberg3": 3, "TransR1": 1}
        for name, dim in expected.items():
            self.assertEqual(dim, get_group(name).algebra_dim)
        self.assertTrue(get_group("SO2").is_abelian)
        self.assertTrue(get_group("TransR1").is_abelian)
        self.assertFalse(get_group("SO3").is_abelian)
        self.assertFalse(get_group("Heisenberg3").is_abelian)

    def test_exp_matches_scipy(self):
        """Test the closed-form exponentials against the matrix exponential."""
        rng = np.random.default_rng(0)
        for name in GROUP_NAMES:
            spec = get_group(name)
            for coords in rng.uniform(-2.0, 2.0, (10, spec.algebra_dim)):
                with self.subTest(name=name, coords=coords):
                    np.testing.assert_allclose(
                        expm(spec.hat(coords)), spec.exp_matrix(coords), atol=1e-12
                    )

    def test_so3_quarter_turn(self):
        """Test the rotation by pi / 2 about the third axis."""
        spec = get_group("SO3")
        g = exp(spec.vector([0.0, 0.0, math.pi / 2]))
        np.testing.assert_allclose(
            [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]], g.matrix, atol=1e-15
        )

    def test_so3_log_near_pi(self):
        """Test the logarithm is accurate close to, but outside the margin of, pi."""
        spec = get_group("SO3")
        axis = np.array([1.0, 2.0, -2.0]) / 3.0
        coords = (math.pi - 1e-4) * axis
        np.testing.assert_allclose(coords, log(exp(spec.vector(coords))).coords, atol=1e-8)

    def test_so3_log_large_angles(self):
        """Test the round trip for angles between 2.4 and just inside pi."""
        spec = get_group("SO3")
        axis = np.array([0.0, 0.6, 0.8])
        for theta in [*np.linspace(2.4, 3.14, 38), math.pi - 1e-5]:
            with self.subTest(theta=theta):
                back = log(exp(spec.vector(theta * axis)))
                np.testing.assert_allclose(theta * axis, back.coords, atol=1e-8)
                self.assertAlmostEqual(theta, float(np.linalg.norm(back.coords)), delta=1e-8)

    def test_out_of_injectivity_radius(self):
        """Test the logarithm of a half turn is refused."""
        for name, coords in [("SO2", [math.pi]), ("SO3", [0.0, math.pi, 0.0])]:
            spec = get_group(name)
            with self.subTest(name=name), self.assertRaises(OutOfInjectivityRadius):
                log(exp(spec.vector(coords)))

    def test_mixing_groups(self):
        """Test combining elements of different groups raises."""
        so3, heisenberg = get_group("SO3"), get_group("Heisenberg3")
        with self.assertRaises(SpecMismatch):
            so3.identity() @ heisenberg.identity()
        with self.assertRaises(SpecMismatch):
            bracket(so3.zero(), heisenberg.zero())

    def test_heisenberg_bracket(self):
        """Test ``[X, Y] = Z`` in the Heisenberg algebra."""
        spec = get_group("Heisenberg3")
        z = bracket(spec.vector([1.0, 0.0, 0.0]), spec.vector([0.0, 1.0, 0.0]))
        np.testing.assert_allclose([0.0, 0.0, 1.0], z.coords)

    def test_so3_bracket(self):
        """Test ``[E1, E2] = E3`` in so(3)."""
        spec = get_group("SO3")
        e3 = bracket(spec.vector([1.0, 0.0, 0.0]), spec.vector([0.0, 1.0, 0.0]))
        np.testing.assert_allclose([0.0, 0.0, 1.0], e3.coords, atol=1e-15)

    def test_ad_matrix(self):
        """Test the adjoint matrix agrees with the adjoint action."""
        spec = get_group("SE2")
        g = exp(spec.vector([0.7, -0.3, 1.1]))
        a = spec.vector([0.2, 0.5, -0.4])
        np.testing.assert_allclose(ad_matrix(g) @ a.coords, ad_action(g, a).coords, atol=1e-12)


class TestProperties(unittest.TestCase):
    """Property-based tests of exponential, logarithm, and adjoint action."""

    def _check_round_trip(self, name: str, coords: np.ndarray):
        spec = get_group(name)
        g = exp(spec.vector(coords))
        self.assertLessEqual(g.residual(), CONSTRAINT_TOL)
        back = log(g)
        np.testing.assert_allclose(coords, back.coords, atol=ROUND_TRIP_TOL)
        self.assertLessEqual(exp(back).distance(g), ROUND_TRIP_TOL)

    @settings(max_examples=50, deadline=None)
    @given(_coords(3))
    def test_so3_round_trip(self, coords):
        """Test ``log(exp(a)) = a`` on so(3) inside the injectivity radius."""
        self._check_round_trip("SO3", coords)

    @settings(max_examples=50, deadline=None)
    @given(_coords(3))
    def test_se2_round_trip(self, coords):
        """Test ``log(exp(a)) = a`` on se(2)."""
        self._check_round_trip("SE2", coords)

    @settings(max_examples=50, deadline=None)
    @given(_coords(3))
    def test_heisenberg_round_trip(self, coords):
        """Test ``log(exp(a)) = a`` on the Heisenberg algebra."""
        self._check_round_trip("Heisenberg3", coords)

    @settings(max_examples=30, deadline=None)
    @given(_coords(1))
    def test_abelian_round_trip(self, coords):
        """Test ``log(exp(a)) = a`` on the one-dimensional groups."""
        self._check_round_trip("SO2", coords)
        self._check_round_trip("TransR1", coords)

    @settings(max_examples=30, deadline=None)
    @given(_coords(3), _coords(3), _coords(3))
    def test_adjoint_is_automorphism(self, g_coords, a_coords, b_coords):
        """Test ``Ad_g [a, b] = [Ad_g a, Ad_g b]`` on so(3) and the Heisenberg algebra."""
        for name in ("SO3", "Heisenberg3"):
            spec = get_group(name)
            g = exp(spec.vector(g_coords))
            a, b = spec.vector(a_coords), spec.vector(b_coords)
            left = ad_action(g, bracket(a, b))
            right = bracket(ad_action(g, a), ad_action(g, b))
            np.testing.assert_allclose(left.coords, right.coords, atol=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(_coords(3), _coords(3))
    def test_adjoint_is_action(self, g_coords, h_coords):
        """Test ``Ad_gh = Ad_g Ad_h``."""
        spec = get_group("SO3")
        g, h = exp(spec.vector(g_coords)), exp(spec.vector(h_coords))
        np.testing.assert_allclose(ad_matrix(g @ h), ad_matrix(g) @ ad_matrix(h), atol=1e-10)


class TestSolver(unittest.TestCase):
    """Tests for the commutator-free solver."""

    def test_steps_for(self):
        """Test step counts cover the duration."""
        self.assertEqual(0, steps_for(0.0, 0.1))
        self.assertEqual(10, steps_for(1.0, 0.1))
        self.assertEqual(11, steps_for(1.05, 0.1))
        self.assertEqual(1, steps_for(1e-3, 0.1))

    def test_constant(self):
        """Test a constant derivative gives the exponential."""
        spec = get_group("SO3")
        a = np.array([0.3, -0.2, 0.9])
        g0 = exp(spec.vector([0.1, 0.2, 0.3]))
        path = solve_right_log_ode(lambda _t: a, g0, (0.0, 2.0), 0.1)
        expected = spec.exp_matrix(2.0 * a) @ g0.matrix
        np.testing.assert_allclose(expected, path.end.matrix, atol=1e-12)
        self.assertEqual(21, len(path))

    def test_abelian_is_quadrature(self):
        """Test on SO(2) the solution is the exponential of the integral."""
        spec = get_group("SO2")
        path = solve_right_log_ode(lambda t: [t**2], spec.identity(), (0.0, 1.5), 0.05)
        np.testing.assert_allclose(spec.exp_matrix([1.5**3 / 3]), path.end.matrix, atol=1e-12)

    def test_order(self):
        """Test the observed order on SO(3) is four."""
        spec = get_group("SO3")
        reference = solve_right_log_ode(_so3_trig, spec.identity(), (0.0, 2.0), 0.05 / 64).end
        errors = [
            float(
                np.linalg.norm(
                    solve_right_log_ode(_so3_trig, spec.identity(), (0.0, 2.0), h).end.matrix
                    - reference.matrix
                )
            )
            for h in (0.1, 0.05)
        ]
        order = math.log(errors[0] / errors[1]) / math.log(2.0)
        self.assertAlmostEqual(4.0, order, delta=0.3)

    def test_drift(self):
        """Test the solution stays on SO(3) over a long interval."""
        spec = get_group("SO3")
        path = solve_right_log_ode(_so3_trig, spec.identity(), (0.0, 10.0), 0.01)
        self.assertLessEqual(path.max_residual(), 1e-8)

    def test_empty_interval(self):
        """Test an empty interval returns the initial value."""
        spec = get_group("SO2")
        path = solve_right_log_ode(lambda _t: [1.0], spec.identity(), (1.0, 1.0), 0.1)
        self.assertEqual(1, len(path))

    def test_errors(self):
        """Test non-positive steps and non-finite derivatives raise."""
        spec = get_group("SO3")
        with self.assertRaises(ValueError):
            solve_right_log_ode(_so3_trig, spec.identity(), (0.0, 1.0), 0.0)
        with self.assertRaises(NonFiniteRHS):
            solve_right_log_ode(
                lambda _t: [np.nan, 0.0, 0.0], spec.identity(), (0.0, 1.0), 0.1
            )
