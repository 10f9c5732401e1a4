"""
Unittests for radial test functions and their literal syntax.
"""

import math
from tests import fixture
import endslab
from endslab import functions
from endslab.geometry import RadialPoint, Region
from endslab.quadrature import DivergenceError
import unittest


SHELL_M_1_2 = 8.0 * math.pi ** 2 / 3.0 * 31.0 / 5.0


class Evaluate(unittest.TestCase):
    """Tests for pointwise evaluation."""
    def setUp(self):
        self.f = functions.RadialFunction(
            {Region.END_M: [(1, 2, 3.0), (4, float('inf'), 2.0, -1.0)]},
            core_value=0.5)

    def test_values(self):
        """Confirm values inside and outside the segments."""
        self.assertEqual(self.f(RadialPoint(Region.END_M, 1.5)), 3.0)
        self.assertEqual(self.f(RadialPoint(Region.END_M, 2.0)), 0.0)
        self.assertAlmostEqual(self.f(RadialPoint(Region.END_M, 8.0)), 0.25)
        self.assertEqual(self.f(RadialPoint(Region.END_N, 1.5)), 0.0)
        self.assertEqual(self.f(RadialPoint.core()), 0.5)

    def test_vectorised(self):
        """Confirm vectorised values match pointwise evaluation."""
        values = self.f.values(Region.END_M, [1.0, 3.0, 8.0])
        self.assertEqual(list(values), [3.0, 0.0, 0.25])

    def test_overlap(self):
        """Ensure overlapping segments are rejected."""
        with self.assertRaises(ValueError):
            functions.RadialFunction({Region.END_N: [(1, 3), (2, 4)]})

    def test_core_segments(self):
        """Ensure the core takes a value, not segments."""
        with self.assertRaises(ValueError):
            functions.RadialFunction({Region.CORE: [(1, 2)]})

    def test_sup(self):
        """Confirm the essential supremum of |f|."""
        self.assertEqual(self.f.sup_abs(), 3.0)
        tail = functions.power_tail(Region.END_N, 2.0, -1.0, c=-4.0)
        self.assertEqual(tail.sup_abs(), 2.0)

    def test_decompose(self):
        """Ensure the three parts add back to the function."""
        f_m, f_n, f_k = self.f.decompose()
        self.assertEqual(f_m + f_n + f_k, self.f)
        self.assertTrue(f_n.is_zero())
        self.assertEqual(f_k.core_value, 0.5)

    def test_scaled(self):
        """Confirm scaling multiplies every value."""
        g = self.f.scaled(2.0)
        self.assertEqual(g(RadialPoint(Region.END_M, 1.5)), 6.0)
        self.assertEqual(g.core_value, 1.0)

    def test_compact(self):
        """Test compact support detection."""
        self.assertFalse(self.f.is_compact())
        self.assertTrue(functions.chi3().is_compact())


class Norms(unittest.TestCase):
    """Tests for L^p norms and support measures."""
    def setUp(self):
        self.model = fixture.create_model()

    def test_shell_l1(self):
        """Confirm the L^1 norm of an EndM shell indicator."""
        f = functions.shell_indicator(Region.END_M, 1, 2)
        self.assertAlmostEqual(functions.lp_norm(self.model, f, 1),
                               SHELL_M_1_2)

    def test_l2(self):
        """Confirm the L^2 norm of a scaled indicator."""
        f = functions.shell_indicator(Region.END_M, 1, 2).scaled(3.0)
        self.assertAlmostEqual(functions.lp_norm(self.model, f, 2),
                               3.0 * math.sqrt(SHELL_M_1_2))

    def test_core(self):
        """Confirm the core atom contributes mu_K."""
        model = fixture.create_model(mu_K=2.5)
        self.assertAlmostEqual(functions.lp_norm(model, functions.chi3(), 1),
                               2.5)
        self.assertEqual(functions.support_measure(model, functions.chi3()),
                         2.5)

    def test_divergent(self):
        """Ensure the indicator of an end is not integrable."""
        with self.assertRaises(DivergenceError):
            functions.lp_norm(self.model, functions.chi1(), 1)

    def test_sup_norm(self):
        """Confirm p = inf gives the supremum of a power tail."""
        f = functions.power_tail(Region.END_M, 2.0, -6.0, c=64.0)
        self.assertEqual(functions.lp_norm(self.model, f, float('inf')), 1.0)

    def test_small_exponent(self):
        """Ensure exponents below 1 are rejected."""
        with self.assertRaises(ValueError):
            functions.lp_norm(self.model, functions.chi3(), 0.5)


class Literals(unittest.TestCase):
    """Tests for parsing and formatting function literals."""
    def test_parse(self):
        """Confirm a literal with both ends and the core."""
        f = functions.parse_function(
            'endM:[1,2):1; endN:[2,inf):3*s^-4; core:0.5')
        self.assertEqual(f(RadialPoint(Region.END_M, 1.0)), 1.0)
        self.assertAlmostEqual(f(RadialPoint(Region.END_N, 2.0)), 3.0 / 16.0)
        self.assertEqual(f.core_value, 0.5)
        self.assertFalse(f.is_compact())

    def test_power_only(self):
        """Confirm a bare power of s has coefficient 1."""
        f = functions.parse_function('endN:[1,4):s^2')
        self.assertAlmostEqual(f(RadialPoint(Region.END_N, 3.0)), 9.0)

    def test_round_trip(self):
        """Ensure formatted literals parse back to the same function."""
        f = functions.RadialFunction(
            {Region.END_M: [(1.5, 2.5, -0.25, 1.5)],
             Region.END_N: [(2, float('inf'), 3.0, -4.0)]}, core_value=0.75)
        g = functions.parse_function(functions.format_function(f))
        self.assertEqual(f, g)

    def test_named(self):
        """Confirm named functions are accepted."""
        self.assertEqual(functions.parse_function('chi3'), functions.chi3())
        self.assertEqual(functions.parse_function('one').core_value, 1.0)
        self.assertEqual(functions.parse_function('shellN[2,4)'),
                         functions.shell_indicator(Region.END_N, 2, 4))

    def test_invalid(self):
        """Ensure malformed literals raise InvalidConfig."""
        for text in ('endX:[1,2):1', 'endM:[1,2):abc', 'core:many',
                     'endM:[0.5,2):1', 'endM:[1,3):1; endM:[2,4):1'):
            with self.assertRaises(endslab.InvalidConfig):
                functions.parse_function(text)


class Family(unittest.TestCase):
    """Tests for the standard family of test functions."""
    def test_inventory(self):
        """Confirm ten members with unique names in a fixed order."""
        family = functions.standard_family()
        names = [f.name for f in family]
        self.assertEqual(len(family), 10)
        self.assertEqual(len(set(names)), 10)
        self.assertEqual(names[0], 'chi3')
        self.assertIn('tailM^-6', names)
        self.assertIn('tailN^-4', names)

    def test_integrable(self):
        """Ensure every member has a finite positive L^1 norm."""
        model = fixture.create_model()
        for f in functions.standard_family():
            norm = functions.lp_norm(model, f, 1)
            self.assertGreater(norm, 0.0)
            self.assertTrue(math.isfinite(norm))

    def test_dimensions(self):
        """Confirm the tail exponents follow the dimensions."""
        names = [f.name for f in
                 functions.standard_family(endslab.ModelParams(n=4, m=7))]
        self.assertIn('tailM^-8', names)
        self.assertIn('tailN^-5', names)
