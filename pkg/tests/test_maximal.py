"""
Unittests for the centred and uncentred Hardy-Littlewood maximal functions.
"""

import math
from tests import fixture
from endslab import functions, grids, maximal
from endslab.geometry import Ball, RadialPoint, Region
from endslab.heat import HeatResult
import unittest


class Averages(unittest.TestCase):
    """Tests for ball averages."""
    def setUp(self):
        self.model = fixture.create_model()

    def test_core_average(self):
        """Confirm a small ball on the core averages chi3 to 1."""
        ball = Ball(RadialPoint.core(), 0.25)
        self.assertAlmostEqual(
            maximal.ball_average(self.model, functions.chi3(), ball), 1.0)

    def test_bounds(self):
        """Ensure averages lie between 0 and sup |f|."""
        f = functions.parse_function('endM:[1,4):-2; endN:[2,8):1.5*s^-1')
        for center in (RadialPoint(Region.END_M, 3), RadialPoint.core(),
                       RadialPoint(Region.END_N, 6)):
            for r in (0.5, 3.0, 30.0):
                avg = maximal.ball_average(self.model, f, Ball(center, r))
                self.assertGreaterEqual(avg, 0.0)
                self.assertLessEqual(avg, 2.0)

    def test_missed_support(self):
        """Confirm balls away from the support average to 0."""
        ball = Ball(RadialPoint(Region.END_M, 20), 2.0)
        self.assertEqual(maximal.ball_average(self.model, functions.chi3(),
                                              ball), 0.0)

    def test_min_distance(self):
        """Confirm the smallest distance to a centre's shell."""
        x = RadialPoint(Region.END_M, 10)
        self.assertEqual(maximal.min_distance(
            self.model, x, RadialPoint(Region.END_M, 4)), 6.0)
        self.assertEqual(maximal.min_distance(
            self.model, x, RadialPoint(Region.END_N, 3)), 12.0)
        self.assertEqual(maximal.min_distance(
            self.model, x, RadialPoint.core()), 9.5)


class Operators(unittest.TestCase):
    """Tests for the maximal operators at single points."""
    def setUp(self):
        self.model = fixture.create_model()
        self.cfg = fixture.coarse_search()
        self.f = functions.shell_indicator(Region.END_M, 2, 4)

    def test_zero(self):
        """Confirm the maximal functions of 0 vanish."""
        zero = functions.RadialFunction()
        x = RadialPoint(Region.END_N, 3)
        self.assertEqual(maximal.maximal_centered(self.model, zero, x,
                                                  self.cfg).value, 0.0)
        self.assertEqual(maximal.maximal_uncentered(self.model, zero, x,
                                                    self.cfg).value, 0.0)

    def test_core_indicator(self):
        """Confirm M_c chi3 equals 1 on the core."""
        result = maximal.maximal_centered(self.model, functions.chi3(),
                                          RadialPoint.core(), self.cfg)
        self.assertAlmostEqual(result.value, 1.0)
        self.assertIs(result.end, Region.CORE)

    def test_dominance(self):
        """Ensure M f >= M_c f and both stay below sup |f|."""
        for x in (RadialPoint(Region.END_N, 5), RadialPoint(Region.END_M, 8),
                  RadialPoint.core()):
            centered = maximal.maximal_centered(self.model, self.f, x,
                                                self.cfg)
            uncentered = maximal.maximal_uncentered(self.model, self.f, x,
                                                    self.cfg)
            self.assertGreaterEqual(uncentered.value, centered.value)
            self.assertLessEqual(uncentered.value, 1.0)
            self.assertGreater(centered.value, 0.0)

    def test_homogeneous(self):
        """Confirm doubling f doubles M f."""
        x = RadialPoint(Region.END_N, 5)
        one = maximal.maximal_uncentered(self.model, self.f, x, self.cfg)
        two = maximal.maximal_uncentered(self.model, self.f.scaled(2.0), x,
                                         self.cfg)
        self.assertAlmostEqual(two.value, 2.0 * one.value,
                               delta=1e-12 * one.value)

    def test_sublinear(self):
        """Ensure M (f + g) <= M f + M g up to search accuracy."""
        g = functions.shell_indicator(Region.END_N, 2, 4)
        x = RadialPoint(Region.END_N, 6)
        mf = maximal.maximal_centered(self.model, self.f, x, self.cfg).value
        mg = maximal.maximal_centered(self.model, g, x, self.cfg).value
        mfg = maximal.maximal_centered(self.model, self.f + g, x,
                                       self.cfg).value
        self.assertLessEqual(mfg, 1.02 * (mf + mg))

    def test_search_config(self):
        """Ensure invalid search settings are rejected."""
        with self.assertRaises(ValueError):
            maximal.SearchConfig(r_min=0.0)
        with self.assertRaises(ValueError):
            maximal.SearchConfig(r_min=1.0, r_max=0.5)
        with self.assertRaises(ValueError):
            maximal.SearchConfig(grid_per_decade=0)
        with self.assertRaises(ValueError):
            maximal.SearchConfig(refine_iters=-1)


class UncenteredSearch(unittest.TestCase):
    """Tests for the convergence of the uncentred search far out in EndN."""
    @classmethod
    def setUpClass(cls):
        cls.model = fixture.create_model()
        cls.f = functions.shell_indicator(Region.END_M, 2, 4)
        cls.x = RadialPoint(Region.END_N, 1024)
        default = maximal.SearchConfig(r_min=0.1, r_max=2e4)
        fine = maximal.SearchConfig(r_min=0.1, r_max=2e4, grid_per_decade=96,
                                    center_grid_per_decade=96)
        cls.default = maximal.maximal_uncentered(cls.model, cls.f, cls.x,
                                                 default)
        cls.fine = maximal.maximal_uncentered(cls.model, cls.f, cls.x, fine)

    def test_grid_refinement(self):
        """Confirm a four times finer grid moves M f by less than 2%."""
        self.assertLess(abs(self.fine.value / self.default.value - 1.0), 0.02)

    def test_maximiser(self):
        """Confirm the best ball sits halfway between x and the shell.

        The radial path from (EndN, 1024) to the outer edge of the shell
        has length 1027, so its midpoint is (EndN, 510.5).
        """
        self.assertIs(self.default.end, Region.END_N)
        self.assertLess(abs(self.default.u / 510.5 - 1.0), 0.02)
        self.assertLess(abs(self.default.r / 513.5 - 1.0), 0.02)
        self.assertFalse(self.default.boundary)

    def test_contains_x(self):
        """Ensure the reported ball contains x."""
        center = RadialPoint(self.default.end, self.default.u)
        self.assertGreaterEqual(
            self.default.r, maximal.min_distance(self.model, self.x, center))

    def test_midpoints(self):
        """Test path midpoints within one end and through the core."""
        model = self.model
        same = maximal._along_path(model, RadialPoint(Region.END_N, 10),
                                   RadialPoint(Region.END_N, 2), 0.5)
        self.assertEqual(same, RadialPoint(Region.END_N, 6.0))
        across = maximal._along_path(model, self.x,
                                     RadialPoint(Region.END_M, 4), 0.5)
        self.assertIs(across.region, Region.END_N)
        self.assertAlmostEqual(across.s, 510.5)
        core = maximal._along_path(model, RadialPoint(Region.END_N, 2),
                                   RadialPoint(Region.END_M, 2), 0.5)
        self.assertIs(core.region, Region.CORE)
        other = maximal._along_path(model, RadialPoint.core(),
                                    RadialPoint(Region.END_M, 5), 0.5)
        self.assertEqual(other, RadialPoint(Region.END_M, 2.75))


class Counterexample(unittest.TestCase):
    """Tests for the M chi2 versus M_c chi2 table."""
    RADII = [10, 20, 40, 80, 160]

    @classmethod
    def setUpClass(cls):
        cls.model = fixture.create_model()
        cls.table = maximal.counterexample_profile(cls.model, cls.RADII,
                                                   fixture.coarse_search())

    def test_columns(self):
        """Test the table columns."""
        self.assertEqual(list(self.table.columns),
                         maximal.COUNTEREXAMPLE_COLUMNS)
        self.assertEqual(len(self.table), len(self.RADII))

    def test_radii(self):
        """Confirm the asymptotic and model radii columns."""
        self.assertEqual(list(self.table['r_star'][:2]), [25.0, 50.0])
        self.assertEqual(list(self.table['r_model'][:2]), [22.5, 47.5])

    def test_centered_argmax(self):
        """Confirm the centred maximiser sits at the model radius."""
        for argmax, r_model in zip(self.table['argmax_r'],
                                   self.table['r_model']):
            self.assertLess(abs(argmax / r_model - 1.0), 0.03)

    def test_centered_slope(self):
        """Confirm M_c chi2 decays like s^(n - m)."""
        slope = grids.fit_slope(self.table['s'], self.table['M_c'])
        self.assertLess(abs(slope + 2.0), 0.1)

    def test_uncentered_stays_large(self):
        """Confirm M chi2 stays near 1 at every radius."""
        for value in self.table['M']:
            self.assertGreaterEqual(value, 0.9)
            self.assertLessEqual(value, 1.0)

    def test_ratio_increasing(self):
        """Ensure the ratio column increases strictly."""
        ratios = list(self.table['ratio'])
        for left, right in zip(ratios[:-1], ratios[1:]):
            self.assertGreater(right, left)

    def test_small_radius(self):
        """Ensure radii below 10 are rejected."""
        with self.assertRaises(ValueError):
            maximal.counterexample_profile(self.model, [5])


class Bounds(unittest.TestCase):
    """Tests for decay constants and minimal volumes."""
    def setUp(self):
        self.model = fixture.create_model()
        self.cfg = fixture.coarse_search()

    def test_decay_same_end(self):
        """Ensure f must live in the opposite end."""
        f = functions.shell_indicator(Region.END_M, 1, 2)
        with self.assertRaises(ValueError):
            maximal.decay_bound_check(self.model, f, Region.END_M, 'n', [4.0])
        with self.assertRaises(ValueError):
            maximal.decay_bound_check(self.model, f, Region.CORE, 'n', [4.0])

    def assertDecadeBand(self, s_grid, values, factor=5.0):
        """Values at radii within one decade differ by less than factor."""
        for i, (s, v) in enumerate(zip(s_grid, values)):
            for t, w in zip(s_grid[i + 1:], values[i + 1:]):
                if t <= 10.0 * s * (1.0 + 1e-9):
                    self.assertLess(max(v, w) / min(v, w), factor)

    def test_decay_constant(self):
        """Confirm the decay constant varies by less than 5x per decade.

        s^n M f(x) / ||f||_1 is at most s^n / ||f||_1, about 0.012 at s = 4
        against 0.15 for large s, so the band starts at s = 16.
        """
        f = functions.shell_indicator(Region.END_M, 2, 4)
        s_grid = list(grids.log_grid(16.0, 4096.0, 2))
        bound = maximal.decay_bound_check(self.model, f, Region.END_N, 'n',
                                          s_grid, self.cfg)
        self.assertEqual(len(bound.values), len(s_grid))
        self.assertTrue(all(math.isfinite(v) and v > 0.0
                            for v in bound.values))
        self.assertEqual(bound.constant, max(bound.values))
        self.assertDecadeBand(s_grid, bound.values)

    def test_small_radius_decay(self):
        """Confirm the decay constant obeys its s^n / ||f||_1 cap at s = 4."""
        f = functions.shell_indicator(Region.END_M, 2, 4)
        bound = maximal.decay_bound_check(self.model, f, Region.END_N, 'n',
                                          [4.0], self.cfg)
        cap = 4.0 ** 3 / functions.lp_norm(self.model, f, 1)
        self.assertGreater(bound.constant, 0.0)
        self.assertLessEqual(bound.constant, cap * (1.0 + 1e-12))

    def test_minimal_volume(self):
        """Confirm minimal volumes scale like |x|^n for both targets."""
        s_grid = list(grids.log_grid(16.0, 4096.0, 2))
        for target in (Region.END_M, Region.CORE):
            values = [maximal.minimal_volume_bound(
                self.model, RadialPoint(Region.END_N, s), target, self.cfg)
                for s in s_grid]
            self.assertTrue(all(math.isfinite(v) and v > 0.0
                                for v in values))
            self.assertDecadeBand(s_grid, values)

    def test_infeasible(self):
        """Ensure unsupported targets raise InfeasibleTarget."""
        with self.assertRaises(maximal.InfeasibleTarget):
            maximal.minimal_volume_bound(self.model,
                                         RadialPoint(Region.END_M, 5),
                                         Region.CORE)
        with self.assertRaises(maximal.InfeasibleTarget):
            maximal.minimal_volume_bound(self.model,
                                         RadialPoint(Region.END_N, 5),
                                         Region.END_N)


class Profiles(unittest.TestCase):
    """Tests for maximal profile tables."""
    def test_frame(self):
        """Test profile rows are ordered EndM, EndN, Core."""
        grid = [RadialPoint.core(), RadialPoint(Region.END_N, 2),
                RadialPoint(Region.END_M, 2)]
        results = [maximal.SearchResult(0.5, Region.CORE, None, 1.0, False),
                   maximal.SearchResult(0.25, Region.END_N, 2.0, 3.0, True),
                   maximal.SearchResult(0.125, Region.END_M, 2.0, 3.0, False)]
        profile = maximal.MaximalProfile(maximal.CENTERED, grid, results)
        frame = profile.to_frame()
        self.assertEqual(list(frame.columns), maximal.PROFILE_COLUMNS)
        self.assertEqual(list(frame['region']), ['EndM', 'EndN', 'Core'])
        self.assertEqual(list(frame['boundary_flag']), [0, 1, 0])
        self.assertEqual(profile.core_value(), 0.5)

    def test_heat_frame(self):
        """Test heat profiles carry the maximising time."""
        profile = maximal.MaximalProfile(
            maximal.HEAT, [RadialPoint.core()], [HeatResult(0.5, 2.0, False)])
        frame = profile.to_frame()
        self.assertEqual(list(frame.columns), maximal.HEAT_COLUMNS)
        self.assertEqual(frame['t_argmax'][0], 2.0)

    def test_mismatch(self):
        """Ensure one result per grid point is required."""
        with self.assertRaises(ValueError):
            maximal.MaximalProfile(maximal.CENTERED, [RadialPoint.core()], [])
