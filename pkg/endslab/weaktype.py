"""
Distribution functions and weak-(1,1) / L^p constants of maximal profiles.

A profile computed on a radial grid is turned into a function on M by
interpolating each end piecewise as a power law between nodes (linearly
where a node value is 0) and extending it past the last node with the power
law of the last two nodes. Super-level measures, L^p norms and the
Chebyshev check all use that interpolant.
"""

import collections
import logging
import math
import time

import numpy as np
import pandas

from endslab import grids
from endslab import quadrature
from endslab.functions import lp_norm, standard_family
from endslab.geometry import ENDS, Model, PowerSegment, RadialPoint, Region
from endslab.heat import HeatConfig, heat_maximal
from endslab.maximal import (CENTERED, HEAT, UNCENTERED, MaximalProfile,
                             SearchConfig, maximal_centered,
                             maximal_uncentered)
from endslab.parallel import WorkerMap
from endslab.quadrature import DivergenceError

logger = logging.getLogger(__name__)


OPERATORS = (CENTERED, UNCENTERED, HEAT)

REPORT_COLUMNS = ['function', 'operator', 'k_weak', 'l2_ratio', 'linf_ratio',
                  'runtime']

# Decades of the alpha grid below the smaller of ||f||_1 and max profile.
ALPHA_DECADES_BELOW = 6

# Decades of the alpha grid above ||f||_1.
ALPHA_DECADES_ABOVE = 3

# Golden-section steps refining the sup of alpha * lambda between grid points.
ALPHA_REFINE_ITERS = 40


def radial_grid(points_per_decade=8, s_max=1e3):
    """Evaluation grid: the core, then log-spaced radii in each end."""
    radii = grids.log_grid(1.0, s_max, points_per_decade)
    grid = [RadialPoint.core()]
    for end in ENDS:
        grid.extend(RadialPoint(end, float(s)) for s in radii)
    return grid


def operator_profile(model, f, operator, grid, cfg=None, heat_cfg=None):
    """Evaluates one maximal operator of f on every grid point."""
    if not grid:
        raise ValueError('Evaluation grid is empty')
    if operator == CENTERED:
        evaluate = lambda x: maximal_centered(model, f, x, cfg)
    elif operator == UNCENTERED:
        evaluate = lambda x: maximal_uncentered(model, f, x, cfg)
    elif operator == HEAT:
        evaluate = lambda x: heat_maximal(model, f, x, heat_cfg)
    else:
        raise ValueError('Unknown operator {0!r}'.format(operator))

    with WorkerMap() as pmap:
        results = list(pmap(evaluate, grid))
    return MaximalProfile(operator, grid, results)


class Piece(collections.namedtuple('Piece', 'a b v0 v1 power')):
    """One interval of the interpolant.

    Power pieces are v0 * (u / a)^power; linear pieces (power None) run
    from v0 at a to v1 at b.
    """
    __slots__ = ()

    def values(self, u):
        if self.power is None:
            return self.v0 + (self.v1 - self.v0) * (u - self.a) / (self.b -
                                                                    self.a)
        return self.v0 * np.power(u / self.a, self.power)

    def segment(self):
        """The power piece as a PowerSegment c * u^beta."""
        return PowerSegment(self.a, self.b, self.v0 * self.a ** -self.power,
                            self.power)

    def above(self, alpha):
        """Sub-interval of [a, b) where the piece exceeds alpha, or None."""
        if self.power is None:
            lo, hi = sorted((self.v0, self.v1))
            if alpha >= hi:
                return None
            if alpha < lo:
                return self.a, self.b
            root = self.a + (alpha - self.v0) * (self.b - self.a) / (self.v1 -
                                                                     self.v0)
            return (root, self.b) if self.v1 > self.v0 else (self.a, root)

        if self.v0 <= 0.0:
            return None
        if self.power == 0.0:
            return (self.a, self.b) if self.v0 > alpha else None
        root = self.a * (alpha / self.v0) ** (1.0 / self.power)
        if self.power > 0.0:
            lo, hi = max(self.a, root), self.b
        else:
            lo, hi = self.a, min(self.b, root)
        return (lo, hi) if hi > lo else None


class ProfileInterpolant(object):
    """Piecewise power-law function on M built from a maximal profile."""
    def __init__(self, model, profile):
        self.model = model
        self.core = profile.core_value() or 0.0
        self.pieces = {}
        self.peak = float(np.max(profile.values, initial=0.0))
        for end in ENDS:
            s, v = profile.region(end)
            self.pieces[end] = self._pieces(end, s, v)

    def _pieces(self, end, s, v):
        if len(s) == 0:
            return []
        if len(s) == 1:
            raise ValueError('An end needs at least two profile nodes')

        pieces = []
        if s[0] > 1.0:
            pieces.append(Piece(1.0, s[0], v[0], v[0], 0.0))
        for a, b, v0, v1 in zip(s[:-1], s[1:], v[:-1], v[1:]):
            if v0 > 0.0 and v1 > 0.0:
                pieces.append(Piece(a, b, v0, v1, math.log(v1 / v0) /
                                    math.log(b / a)))
            else:
                pieces.append(Piece(a, b, v0, v1, None))

        last, prev = v[-1], v[-2]
        if last > 0.0:
            if prev > 0.0:
                power = math.log(last / prev) / math.log(s[-1] / s[-2])
            else:
                power = -float(self.model.dimension[end])
            pieces.append(Piece(s[-1], float('inf'), last, 0.0, power))
        return pieces

    def superlevel_measure(self, alpha):
        """mu{F > alpha}; infinite if a non-decaying tail exceeds alpha."""
        if not alpha > 0.0:
            raise ValueError('alpha must be positive')
        total = self.model.mu if self.core > alpha else 0.0
        for end in ENDS:
            for piece in self.pieces[end]:
                band = piece.above(alpha)
                if band is None:
                    continue
                if math.isinf(band[1]) and piece.power >= 0.0:
                    return float('inf')
                total += self.model.shell_measure(end, band[0], band[1])
        return total

    def norm(self, p):
        """L^p norm of the interpolant; DivergenceError if not p-integrable."""
        if p == float('inf'):
            return max(self.peak, self.core)
        total = self.model.mu * self.core ** p
        for end in ENDS:
            for piece in self.pieces[end]:
                if piece.power is None:
                    total += quadrature.integrate(
                        lambda u, piece=piece, end=end: (
                            piece.values(u) ** p *
                            self.model.shell_density(end, u)),
                        piece.a, piece.b, self.model.tol,
                        self.model.max_depth)
                elif piece.v0 > 0.0:
                    total += self.model.shell_integral(
                        end, piece.segment().powered(p))
        return total ** (1.0 / p)


class DistributionProfile(object):
    """lambda(alpha) = mu{F > alpha} on an alpha grid, and k_weak.

    k_weak defaults to the grid supremum of alpha * lambda / ||f||_1; callers
    that refine between grid points pass their value instead.
    """
    def __init__(self, alpha_grid, lambda_, l1_norm, k_weak=None):
        self.alpha_grid = np.asarray(alpha_grid, dtype=float)
        self.lambda_ = np.asarray(lambda_, dtype=float)
        self.l1_norm = float(l1_norm)
        if k_weak is not None:
            self.k_weak = float(k_weak)
        elif len(self.alpha_grid):
            self.k_weak = float(np.max(self.alpha_grid * self.lambda_) /
                                self.l1_norm)
        else:
            self.k_weak = 0.0

    def case_constants(self):
        """Sup of alpha * lambda / ||f||_1 for alpha <= ||f||_1 and above."""
        scaled = self.alpha_grid * self.lambda_ / self.l1_norm
        low = self.alpha_grid <= self.l1_norm
        return (float(np.max(scaled[low], initial=0.0)),
                float(np.max(scaled[~low], initial=0.0)))

    def to_frame(self):
        return pandas.DataFrame({'alpha': self.alpha_grid,
                                 'lambda': self.lambda_})

    def __repr__(self):
        return 'DistributionProfile(k_weak={0!r}, points={1})'.format(
            self.k_weak, len(self.alpha_grid))


def distribution_function(model, profile, alpha):
    """Measure of {F > alpha} for the interpolated profile F."""
    return ProfileInterpolant(model, profile).superlevel_measure(alpha)


def alpha_grid(l1_norm, peak, per_decade=8):
    """Points l1_norm * 10^(j / per_decade) probing both tails of lambda.

    The grid runs from ALPHA_DECADES_BELOW decades under the smaller of
    l1_norm and peak up to the profile peak (lambda vanishes beyond it),
    and never past ALPHA_DECADES_ABOVE decades over l1_norm.
    """
    if not (l1_norm > 0.0 and peak > 0.0):
        return np.zeros(0)
    lo = math.log10(min(l1_norm, peak) / l1_norm) - ALPHA_DECADES_BELOW
    hi = min(math.log10(peak / l1_norm), ALPHA_DECADES_ABOVE)
    j = np.arange(math.floor(lo * per_decade), math.ceil(hi * per_decade) + 1)
    alphas = l1_norm * 10.0 ** (j / float(per_decade))
    return alphas[alphas < peak]


def distribution_profile(model, f, profile, per_decade=8):
    """DistributionProfile of a maximal profile of f."""
    norm = lp_norm(model, f, 1)
    if norm == 0.0:
        raise ValueError('f must not vanish')
    interpolant = ProfileInterpolant(model, profile)
    peak = interpolant.norm(float('inf'))
    alphas = alpha_grid(norm, peak, per_decade)
    lambdas = [interpolant.superlevel_measure(a) for a in alphas]
    if len(alphas) < 2:
        return DistributionProfile(alphas, lambdas, norm)

    def scaled(log_alpha):
        alpha = math.exp(log_alpha)
        return alpha * interpolant.superlevel_measure(alpha)

    # lambda vanishes at the peak, which closes the bracket of the top alpha.
    best = grids.maximize_on_grid(scaled, np.log(np.append(alphas, peak)),
                                  ALPHA_REFINE_ITERS)
    return DistributionProfile(alphas, lambdas, norm, best.value / norm)


def weak11_constant(model, f, operator, grid=None, cfg=None, heat_cfg=None,
                    per_decade=8, profile=None):
    """Empirical sup of alpha * mu{op f > alpha} / ||f||_1."""
    if profile is None:
        profile = operator_profile(model, f, operator, grid or radial_grid(),
                                   cfg, heat_cfg)
    return distribution_profile(model, f, profile, per_decade).k_weak


def lp_ratio(model, f, operator, p, grid=None, cfg=None, heat_cfg=None,
             profile=None):
    """||op f||_p / ||f||_p from the interpolated profile."""
    if not p > 1.0:
        raise ValueError('p must exceed 1')
    if profile is None:
        profile = operator_profile(model, f, operator, grid or radial_grid(),
                                   cfg, heat_cfg)
    norm = lp_norm(model, f, p)
    if norm == 0.0:
        raise ValueError('f must not vanish')
    return ProfileInterpolant(model, profile).norm(p) / norm


def chebyshev_holds(model, profile, distribution, slack=1e-9):
    """True when lambda(alpha) <= (||F||_2 / alpha)^2 on the alpha grid."""
    try:
        l2 = ProfileInterpolant(model, profile).norm(2.0)
    except DivergenceError:
        return True
    bound = (l2 / distribution.alpha_grid) ** 2
    return bool(np.all(distribution.lambda_ <= bound * (1.0 + slack)))


def report_configs():
    """Coarse search and time grids used by family_report."""
    return (SearchConfig(grid_per_decade=6, center_grid_per_decade=6,
                         refine_iters=20),
            HeatConfig(points_per_decade=4, refine_iters=20))


def family_report(params, points_per_decade=4, s_max=1e3, cfg=None,
                  heat_cfg=None, operators=OPERATORS, family=None):
    """k_weak, L^2 and L^inf ratios for every family member and operator.

    Rows follow the family order, then the operator order. The runtime
    column holds wall-clock seconds and is the only nondeterministic field.
    """
    model = Model(params)
    default_cfg, default_heat = report_configs()
    cfg = cfg or default_cfg
    heat_cfg = heat_cfg or default_heat
    grid = radial_grid(points_per_decade, s_max)
    family = standard_family(params) if family is None else family

    rows = []
    for f in family:
        for operator in operators:
            started = time.time()
            profile = operator_profile(model, f, operator, grid, cfg,
                                       heat_cfg)
            k_weak = distribution_profile(model, f, profile).k_weak
            try:
                l2 = lp_ratio(model, f, operator, 2.0, profile=profile)
            except DivergenceError:
                logger.warning('%s of %s is not in L^2', operator, f.name)
                l2 = float('inf')
            linf = lp_ratio(model, f, operator, float('inf'),
                            profile=profile)
            rows.append((f.name, operator, k_weak, l2, linf,
                         time.time() - started))
            logger.info('%s %s: k_weak %.6g', f.name, operator, k_weak)

    return pandas.DataFrame(rows, columns=REPORT_COLUMNS)
