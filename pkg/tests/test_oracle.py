"""
Unittests for the Monte-Carlo oracle.
"""

import math
import numpy as np
from tests import fixture
import endslab
from endslab import functions, oracle
from endslab.geometry import Ball, Model, RadialPoint, Region
from endslab.maximal import ball_average
import unittest


OMEGA_5 = 8.0 * math.pi ** 2 / 15.0


def generator(seed=0):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


class Sampling(unittest.TestCase):
    """Tests for sampling points of the ends."""
    def setUp(self):
        self.model = fixture.create_model()

    def test_radial_density(self):
        """Confirm radii follow the shell measure of EndM."""
        u, flat, fiber = oracle.sample_points(self.model, Region.END_M,
                                              (1.0, 2.0), 100000, generator())
        expected = (63.0 / 6.0) / (31.0 / 5.0)
        stderr = np.std(u) / math.sqrt(len(u))
        self.assertLess(abs(np.mean(u) - expected), 4.0 * stderr)
        np.testing.assert_allclose(np.linalg.norm(flat, axis=1), u)
        self.assertIsNone(fiber)

    def test_fiber_unit(self):
        """Confirm EndN samples carry unit fiber vectors."""
        u, flat, fiber = oracle.sample_points(self.model, Region.END_N,
                                              (2.0, 4.0), 1000, generator())
        self.assertEqual(flat.shape, (1000, 3))
        self.assertEqual(fiber.shape, (1000, 3))
        np.testing.assert_allclose(np.linalg.norm(fiber, axis=1), 1.0)
        self.assertTrue(np.all((u >= 2.0) & (u < 4.0)))

    def test_caps(self):
        """Ensure capped samples stay within their angles."""
        u, flat, fiber = oracle.sample_points(
            self.model, Region.END_N, (2.0, 4.0), 1000, generator(),
            polar_cap=0.3, fiber_cap=0.5)
        polar = np.arccos(np.clip(flat[:, 0] / u, -1.0, 1.0))
        self.assertTrue(np.all(polar <= 0.3 + 1e-9))
        psi = np.arccos(np.clip(fiber[:, 0], -1.0, 1.0))
        self.assertTrue(np.all(psi <= 0.5 + 1e-9))

    def test_reproducible(self):
        """Confirm equal seeds give equal samples."""
        first = oracle.sample_points(self.model, Region.END_N, (1.0, 3.0),
                                     500, generator(7))
        second = oracle.sample_points(self.model, Region.END_N, (1.0, 3.0),
                                      500, generator(7))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_single_point(self):
        """Test single samples are embedded points of the right region."""
        p = oracle.sample_point(self.model, Region.END_N, (1.0, 2.0),
                                generator())
        self.assertIs(p.region, Region.END_N)
        self.assertAlmostEqual(np.linalg.norm(p.fiber), 1.0)
        core = oracle.sample_point(self.model, Region.CORE, (1.0, 2.0),
                                   generator())
        self.assertIs(core.region, Region.CORE)

    def test_invalid_range(self):
        """Ensure the core and bad radial ranges are rejected."""
        with self.assertRaises(ValueError):
            oracle.sample_points(self.model, Region.CORE, (1.0, 2.0), 10,
                                 generator())
        with self.assertRaises(ValueError):
            oracle.sample_points(self.model, Region.END_M, (0.5, 2.0), 10,
                                 generator())
        with self.assertRaises(ValueError):
            oracle.sample_points(self.model, Region.END_M,
                                 (1.0, float('inf')), 10, generator())


class Config(unittest.TestCase):
    """Tests for Monte-Carlo settings."""
    def test_sample_floor(self):
        """Ensure fewer than 1000 samples are rejected."""
        with self.assertRaises(endslab.InvalidConfig):
            oracle.McConfig(samples=999)

    def test_batch(self):
        """Ensure the batch size must be positive."""
        with self.assertRaises(endslab.InvalidConfig):
            oracle.McConfig(batch=0)

    def test_strata(self):
        """Test the strata of a ball reaching through the core."""
        model = fixture.create_model()
        ball = Ball(RadialPoint(Region.END_M, 10), 25.0)
        strata = oracle.enclosing_strata(model, ball)
        self.assertEqual([s.region for s in strata],
                         [Region.END_M, Region.END_M, Region.END_N,
                          Region.CORE])
        self.assertEqual(strata[0].b, 16.0)
        self.assertEqual(strata[1].polar_cap, math.pi)


class Estimates(unittest.TestCase):
    """Tests for Monte-Carlo volumes, averages and norms."""
    def setUp(self):
        self.model = fixture.create_model()
        self.cfg = fixture.small_mc()

    def test_euclidean_volume(self):
        """Confirm a small ball deep in EndM."""
        ball = Ball(RadialPoint(Region.END_M, 10), 1.0)
        est = oracle.mc_volume(self.model, ball, self.cfg)
        self.assertFalse(est.degenerate)
        self.assertLess(abs(est.estimate - OMEGA_5), 4.0 * est.stderr)

    def test_large_volume(self):
        """Confirm a ball through the core against quadrature."""
        ball = Ball(RadialPoint(Region.END_M, 10), 25.0)
        est = oracle.mc_volume(self.model, ball, self.cfg)
        quad = self.model.ball_volume(ball)
        self.assertLessEqual(abs(est.estimate - quad),
                             max(4.0 * est.stderr, 0.01 * quad))

    def test_constant_average(self):
        """Confirm f = 1 averages to exactly 1."""
        ball = Ball(RadialPoint(Region.END_N, 5), 7.0)
        est = oracle.mc_ball_average(self.model, functions.constant(), ball,
                                     self.cfg)
        self.assertAlmostEqual(est.estimate, 1.0, places=12)
        self.assertAlmostEqual(est.stderr, 0.0, places=12)

    def test_missed_core(self):
        """Confirm chi3 averages to 0 on balls away from the core."""
        ball = Ball(RadialPoint(Region.END_M, 10), 2.0)
        est = oracle.mc_ball_average(self.model, functions.chi3(), ball,
                                     self.cfg)
        self.assertEqual(est.estimate, 0.0)
        self.assertFalse(est.degenerate)

    def test_average(self):
        """Confirm a shell average against quadrature."""
        f = functions.shell_indicator(Region.END_N, 2, 4)
        ball = Ball(RadialPoint(Region.END_N, 3), 2.0)
        est = oracle.mc_ball_average(self.model, f, ball, self.cfg)
        quad = ball_average(self.model, f, ball)
        self.assertLessEqual(abs(est.estimate - quad),
                             max(4.0 * est.stderr, 0.01 * quad))

    def test_degenerate(self):
        """Ensure a ball no sample hits is flagged."""
        cfg = fixture.small_mc(samples=2000, stratified=False)
        ball = Ball(RadialPoint(Region.END_M, 10), 1e-3)
        est = oracle.mc_volume(self.model, ball, cfg)
        self.assertTrue(est.degenerate)
        self.assertEqual(est.estimate, 0.0)

    def test_reproducible(self):
        """Confirm a fixed seed reproduces the estimate."""
        ball = Ball(RadialPoint(Region.END_N, 6), 4.0)
        first = oracle.mc_volume(self.model, ball, self.cfg)
        second = oracle.mc_volume(self.model, ball, self.cfg)
        self.assertEqual(first, second)

    def test_norm(self):
        """Confirm the Monte-Carlo L^1 norm of a power segment."""
        f = functions.RadialFunction({Region.END_M: [(1, 3, 1.0, -2.0)]},
                                     core_value=0.5)
        est = oracle.mc_norm(self.model, f, self.cfg)
        exact = functions.lp_norm(self.model, f, 1)
        self.assertLess(abs(est.estimate - exact), 4.0 * est.stderr + 1e-12)

    def test_norm_indicator(self):
        """Confirm an indicator norm has no sampling error."""
        f = functions.shell_indicator(Region.END_N, 1, 4)
        est = oracle.mc_norm(self.model, f, self.cfg)
        self.assertAlmostEqual(est.estimate / functions.lp_norm(self.model,
                                                                f, 1), 1.0)
        self.assertEqual(est.stderr, 0.0)

    def test_norm_compact(self):
        """Ensure Monte-Carlo norms need compact support."""
        with self.assertRaises(ValueError):
            oracle.mc_norm(self.model, functions.chi1(), self.cfg)


class InflatedReach(Model):
    """Model whose Euclidean reach areas are 50% too large."""
    def reach_area(self, center, end, u, r):
        return 1.5 * super(InflatedReach, self).reach_area(center, end, u, r)


class CorruptedSlices(Model):
    """Model whose slice weights are 50% too large."""
    def slice_weight(self, center, r, end, u):
        return 1.5 * super(CorruptedSlices, self).slice_weight(center, r,
                                                                end, u)


class Compare(unittest.TestCase):
    """Tests for the engine comparison."""
    def setUp(self):
        self.model = fixture.create_model()
        self.cfg = fixture.small_mc()

    def test_agreement(self):
        """Confirm quadrature and Monte-Carlo agree on random balls."""
        report = oracle.compare_engines(self.model, 10, self.cfg)
        self.assertEqual(report['trials'], 10)
        self.assertEqual(len(report['rows']), 10)
        self.assertEqual([row['quantity'] for row in report['rows'][:4]],
                         ['volume', 'volume', 'average', 'average'])
        self.assertEqual([row['region'] for row in report['rows'][:2]],
                         ['EndM', 'EndN'])
        self.assertTrue(report['passed'], report['failures'])

    def test_detects_bad_quadrature(self):
        """Ensure corrupted reach areas fail the comparison."""
        model = InflatedReach(self.model.params)
        report = oracle.compare_engines(model, 10, self.cfg)
        self.assertFalse(report['passed'])

    def test_detects_bad_slices(self):
        """Ensure corrupted slice weights fail the comparison."""
        model = CorruptedSlices(self.model.params)
        report = oracle.compare_engines(model, 10, self.cfg)
        self.assertFalse(report['passed'])
        self.assertGreater(report['max_rel_dev'], 0.05)

    def test_reproducible(self):
        """Confirm equal seeds reproduce the report."""
        first = oracle.compare_engines(self.model.params, 10, self.cfg)
        second = oracle.compare_engines(self.model.params, 10, self.cfg)
        self.assertEqual(first['rows'], second['rows'])

    def test_trial_floor(self):
        """Ensure fewer than 10 trials are rejected."""
        with self.assertRaises(endslab.InvalidConfig):
            oracle.compare_engines(self.model, 5, self.cfg)
