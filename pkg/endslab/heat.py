"""
Model heat kernel and the heat maximal operator.

The kernel follows the upper-bound shapes of the two-ended heat kernel
estimates: one formula for small times and six for t > 1, chosen by the
regions of the two points. Every formula has the form

    sep(|x|, |y|, t) + gauss(|x|, |y|, t) * exp(-c d(x, y)^2 / t)

where only the two same-end regimes have a separable term, which already
contains its own factor exp(-c (|x|^2 + |y|^2) / t). The semigroup is
applied to radial data by integrating the Gaussian factor over each shell
exactly in angle (see Model.shell_kernel_integral) and adaptively in the
radius.
"""

import collections
import enum
import logging
import math

import numpy as np
from scipy import special
from scipy.stats import qmc

from endslab import grids
from endslab import quadrature
from endslab.functions import constant, standard_family
from endslab.geometry import ENDS, RadialPoint, Region
from endslab.maximal import SearchConfig, maximal_uncentered
from endslab.parallel import WorkerMap
from endslab.params import KernelConstants

logger = logging.getLogger(__name__)


# Truncation radius of the semigroup integral, in Gaussian widths.
TAIL_WIDTHS = 10.0

# Accuracy floor of integrals with fixed inner rules.
INNER_TOL = 1e-7

# Ranges of |x| and t of the Poisson domination samples.
POISSON_S_RANGE = (1.0, 100.0)
POISSON_T_RANGE = (1e-2, 1e6)


class KernelRegime(enum.Enum):
    """The seven cases of the model kernel."""
    SMALL_TIME = 'SmallTime'
    CORE_CORE = 'CoreCore'
    M_CORE = 'MCore'
    N_CORE = 'NCore'
    MN = 'MN'
    MM = 'MM'
    NN = 'NN'

    def __str__(self):
        return self.value


# Canonical ordering of regions.
RANK = {Region.END_M: 0, Region.END_N: 1, Region.CORE: 2}

REGIME_BY_PAIR = {
    (Region.CORE, Region.CORE): KernelRegime.CORE_CORE,
    (Region.END_M, Region.CORE): KernelRegime.M_CORE,
    (Region.END_N, Region.CORE): KernelRegime.N_CORE,
    (Region.END_M, Region.END_N): KernelRegime.MN,
    (Region.END_M, Region.END_M): KernelRegime.MM,
    (Region.END_N, Region.END_N): KernelRegime.NN,
}


class HeatConfig(object):
    """Time grid of the heat maximal search."""
    def __init__(self, t_min=1e-4, t_max=1e8, points_per_decade=16,
                 guard=(0.9, 1.1), refine_iters=60):
        if not 0.0 < t_min < t_max:
            raise ValueError('Time bracket must satisfy 0 < t_min < t_max')
        if int(points_per_decade) != points_per_decade or points_per_decade < 1:
            raise ValueError('points_per_decade must be a positive integer')
        if not guard[0] < 1.0 < guard[1]:
            raise ValueError('Guard band must surround t = 1')
        self.t_min = float(t_min)
        self.t_max = float(t_max)
        self.points_per_decade = int(points_per_decade)
        self.guard = (float(guard[0]), float(guard[1]))
        self.refine_iters = int(refine_iters)

    def grid(self):
        return grids.log_grid(self.t_min, self.t_max, self.points_per_decade)

    def as_dict(self):
        return {'t_min': self.t_min, 't_max': self.t_max,
                'points_per_decade': self.points_per_decade,
                'guard': list(self.guard), 'refine_iters': self.refine_iters}


HeatResult = collections.namedtuple('HeatResult', 'value t boundary')


def canonical(x, y):
    """Orders two points EndM before EndN before Core, then by radius."""
    key_x = (RANK[x.region], x.s or 0.0)
    key_y = (RANK[y.region], y.s or 0.0)
    return (x, y) if key_x <= key_y else (y, x)


def classify_regime(x, y, t):
    """Kernel regime of a pair of points at time t."""
    if not t > 0.0:
        raise ValueError('Time must be positive')
    if t <= 1.0:
        return KernelRegime.SMALL_TIME
    a, b = canonical(x, y)
    return REGIME_BY_PAIR[(a.region, b.region)]


def _small_time(model, k, region, na, nb, t):
    return 0.0, k.C_k / model.local_volume(region, math.sqrt(t))


def _core_core(model, k, region, na, nb, t):
    return 0.0, k.C_k * t ** (-model.n / 2.0)


def _m_core(model, k, region, na, nb, t):
    return 0.0, k.C_k * (t ** (-model.n / 2.0) * na ** (2 - model.m) +
                         t ** (-model.m / 2.0))


def _n_core(model, k, region, na, nb, t):
    # Second term dominates for |x| >= 1; kept as in the estimate.
    return 0.0, k.C_k * (t ** (-model.n / 2.0) * na ** (2 - model.n) +
                         t ** (-model.n / 2.0))


def _m_n(model, k, region, na, nb, t):
    return 0.0, k.C_k * (t ** (-model.n / 2.0) * na ** (2 - model.m) +
                         t ** (-model.m / 2.0) * nb ** (2 - model.n))


def _same_end(model, k, dim, gauss_power, na, nb, t):
    sep = (k.C_k * t ** (-model.n / 2.0) * (na * nb) ** (2 - dim) *
           np.exp(-k.c_k * (na * na + nb * nb) / t))
    return sep, k.C_k * t ** (-gauss_power / 2.0)


def _m_m(model, k, region, na, nb, t):
    return _same_end(model, k, model.m, model.m, na, nb, t)


def _n_n(model, k, region, na, nb, t):
    return _same_end(model, k, model.n, model.n, na, nb, t)


FORMULAS = {
    KernelRegime.SMALL_TIME: _small_time,
    KernelRegime.CORE_CORE: _core_core,
    KernelRegime.M_CORE: _m_core,
    KernelRegime.N_CORE: _n_core,
    KernelRegime.MN: _m_n,
    KernelRegime.MM: _m_m,
    KernelRegime.NN: _n_n,
}


def _terms(model, k, rx, nx, ry, ny, t):
    """(sep, gauss) prefactors for regions rx, ry and norms nx, ny.

    Norms may be arrays; the regions are fixed for the call.
    """
    if RANK[rx] > RANK[ry]:
        rx, nx, ry, ny = ry, ny, rx, nx
    if t <= 1.0:
        regime = KernelRegime.SMALL_TIME
    else:
        regime = REGIME_BY_PAIR[(rx, ry)]
    return FORMULAS[regime](model, k, rx, nx, ny, t)


def kernel_terms(model, x, y, t, k=None):
    """Separable and Gaussian prefactors of the kernel at (x, y, t)."""
    k = k or KernelConstants()
    if not t > 0.0:
        raise ValueError('Time must be positive')
    sep, gauss = _terms(model, k, x.region, model.norm(x), y.region,
                        model.norm(y), t)
    return float(sep), float(gauss)


def kernel_eval(model, x, y, d, t, k=None):
    """Model heat kernel h_t(x, y) for points at distance d."""
    k = k or KernelConstants()
    sep, gauss = kernel_terms(model, x, y, t, k)
    return sep + gauss * math.exp(-k.c_k * d * d / t)


class GaussianProfile(object):
    """g(E) = exp(-c E^2 / t) for shell integrals."""
    def __init__(self, c, t):
        self.rate = c / t
        self.scale = math.sqrt(t / c)

    def value(self, e):
        return np.exp(-self.rate * e * e)

    def slope(self, e):
        return 2.0 * self.rate * e * np.exp(-self.rate * e * e)

    def cutoff(self, e_min):
        # Beyond this the factor has dropped by exp(-40) from its peak.
        return np.sqrt(e_min * e_min + 40.0 / self.rate)


class PoissonProfile(object):
    """g(E) = t^(m/2) / (sqrt(t) + E)^(2m)."""
    def __init__(self, m, t):
        self.m = m
        self.t = t
        self.scale = math.sqrt(t)

    def value(self, e):
        return self.t ** (self.m / 2.0) * (self.scale + e) ** (-2.0 * self.m)

    def slope(self, e):
        return (2.0 * self.m * self.t ** (self.m / 2.0) *
                (self.scale + e) ** (-2.0 * self.m - 1.0))

    def cutoff(self, e_min):
        return np.full(np.shape(e_min), np.inf)


def truncation_radius(model, x, t, k):
    """Radius beyond which semigroup integrals are bounded, not computed."""
    return model.norm(x) + max(model.delta,
                               TAIL_WIDTHS * math.sqrt(t / k.c_k))


def _gaussian_moment(j, a, rate):
    """Integral of v^j exp(-rate v^2) over [a, inf), a >= 0."""
    h = (j + 1) / 2.0
    return (0.5 * rate ** (-h) * special.gamma(h) *
            special.gammaincc(h, rate * a * a))


def tail_bound(model, x, t, k, radius):
    """Upper bound of the kernel mass of x beyond radius in both ends.

    The kernel prefactors do not increase with |y|, and d(x, y) >= u - |x|
    at radius u, so each end contributes at most
    P * A * int_radius^inf u^(D-1) exp(-c (u - |x|)^2 / t) du.
    """
    s0 = model.norm(x)
    a = radius - s0
    if a <= 0.0:
        raise ValueError('Tail radius must exceed the norm of x')
    rate = k.c_k / t
    bound = 0.0
    for end in ENDS:
        gauss = _terms(model, k, x.region, s0, end, radius, t)[1]
        prefactor = gauss
        if t > 1.0 and x.region is end:
            # Separable term without its exponential, which is at most
            # exp(-c (u - |x|)^2 / t).
            dim = model.dimension[end]
            prefactor += (k.C_k * t ** (-model.n / 2.0) *
                          (s0 * radius) ** (2 - dim))
        prefactor = float(prefactor)
        dim = model.dimension[end]
        moments = (_gaussian_moment(dim - 1, a, rate) +
                   s0 ** (dim - 1) * _gaussian_moment(0, a, rate))
        bound += (prefactor * model.amplitude[end] * 2.0 ** (dim - 2) *
                  moments)
    return bound


def _apply(model, f, x, t, k):
    """Returns (value, tail bound per unit sup|f|) of the semigroup."""
    c = k.c_k
    total = 0.0
    if f.core_value:
        total += (f.core_value * model.mu *
                  kernel_eval(model, x, RadialPoint.core(),
                              model.core_distance(x), t, k))

    profile = GaussianProfile(c, t)
    radius = truncation_radius(model, x, t, k)
    s0 = model.norm(x)
    width = profile.scale
    marks = [s0 + sgn * width * w for sgn in (-1, 1) for w in (0, 1, 4, 16)]
    tol = max(model.tol, INNER_TOL)
    truncated = False

    for end in ENDS:
        for seg in f.segments(end):
            a, b = seg.a, min(seg.b, radius)
            truncated = truncated or seg.b > radius
            if b <= a:
                continue

            def integrand(u, seg=seg, end=end):
                sep, gauss = _terms(model, k, x.region, s0, end, u, t)
                shell = model.shell_kernel_integral(x, end, u, profile)
                return seg.values(u) * (sep * model.shell_density(end, u) +
                                        gauss * shell)

            total += quadrature.integrate(integrand, a, b, tol,
                                          model.max_depth, marks)

    tail = tail_bound(model, x, t, k, radius) if truncated else 0.0
    return total, tail


def semigroup_apply(model, f, x, t, k=None):
    """exp(-t Delta) f (x) under the model kernel."""
    k = k or KernelConstants()
    if not t > 0.0:
        raise ValueError('Time must be positive')
    return _apply(model, f, x, t, k)[0]


def kernel_mass(model, x, t, k=None):
    """Integral of h_t(x, .) over M; returns (mass, tail bound).

    The mass is integrated up to the truncation radius; the tail bound
    covers everything beyond it.
    """
    k = k or KernelConstants()
    if not t > 0.0:
        raise ValueError('Time must be positive')
    return _apply(model, constant(1.0), x, t, k)


def heat_maximal(model, f, x, cfg=None, k=None):
    """M_Delta f(x) = sup_t |exp(-t Delta) f (x)| over the time grid.

    Refinement never starts from, nor brackets across, the guard band
    around t = 1 where the model kernel switches formulas.
    """
    cfg = cfg or HeatConfig()
    k = k or KernelConstants()
    if f.is_zero():
        return HeatResult(0.0, cfg.t_min, False)

    lo, hi = math.log(cfg.guard[0]), math.log(cfg.guard[1])

    def objective(log_t):
        return abs(semigroup_apply(model, f, x, math.exp(log_t), k))

    best = grids.maximize_on_grid(objective, np.log(cfg.grid()),
                                  cfg.refine_iters,
                                  excluded=lambda v: lo < v < hi)
    if best.boundary:
        logger.warning('Heat search for %s peaked at the time bracket edge',
                       x)
    return HeatResult(best.value, math.exp(best.x), best.boundary)


def poisson_average(model, f, x, t):
    """Integral of t^(m/2) (sqrt(t) + d(x, y))^(-2m) |f(y)| over M."""
    g = f.abs()
    profile = PoissonProfile(model.m, t)
    total = g.core_value * model.mu * float(
        profile.value(model.core_distance(x)))
    tol = max(model.tol, INNER_TOL)
    s0 = model.norm(x)
    marks = [s0 + w * profile.scale for w in (-4, -1, 0, 1, 4)]
    for end in ENDS:
        for seg in g.segments(end):
            if math.isinf(seg.b):
                raise ValueError('Poisson averages need compact support')

            def integrand(u, seg=seg, end=end):
                return seg.values(u) * model.shell_kernel_integral(
                    x, end, u, profile)

            total += quadrature.integrate(integrand, seg.a, seg.b, tol,
                                          model.max_depth, marks)
    return total


def _sobol(dimension, count, seed):
    """Scrambled Sobol points; count is rounded up to a power of two."""
    engine = qmc.Sobol(d=dimension, scramble=True, seed=seed)
    return engine.random_base2(int(math.ceil(math.log2(count))))


def _scalar_ratios(model, k, points):
    """LHS/RHS of the scalar inequalities at unit-cube sample points."""
    n, m, c = model.n, model.m, k.c_k
    t = 10.0 ** (6.0 * points[:, 0])
    x = 10.0 ** (3.0 * points[:, 1])
    y = 10.0 ** points[:, 2]
    gauss = lambda d: np.exp(-c * d * d / t)

    cross = (x - 1.0) + model.delta + (y - 1.0)
    to_core = (x - 1.0) + 0.5 * model.delta
    return collections.OrderedDict([
        ('I11', t ** (-n / 2.0) * (x * y) ** (2 - m) *
         np.exp(-c * (x * x + y * y) / t) * x ** (m - 2 + n)),
        ('I21', t ** (-n / 2.0) * x ** (2 - m) * gauss(cross) *
         x ** (m - 2 + n)),
        ('I31', t ** (-n / 2.0) * x ** (2 - m) * gauss(to_core) *
         x ** (m + n - 2)),
        ('I32', t ** (-m / 2.0) * gauss(to_core) * x ** m),
    ])


def gaussian_polynomial_constant(power):
    """sup over u >= 0 of (1 + u)^power exp(-u), by golden section."""
    def objective(log_u):
        u = math.exp(log_u)
        return power * math.log1p(u) - u

    best = grids.maximize_on_grid(objective,
                                  np.log(grids.log_grid(1e-6, 1e3, 8)))
    return max(1.0, math.exp(best.value))


def inequality_checks(model, sample_count=10000, k=None, seed=None,
                      poisson_samples=20, cfg=None):
    """Empirical suprema of the scalar estimates behind the heat theorem.

    Each check is sampled with sample_count and twice as many quasi-random
    points; stability_ratio is the second supremum over the first. The
    Poisson domination check compares the largest Poisson average over t
    with the uncentred maximal function on grids of x holding about
    poisson_samples points, and on grids twice as dense. Every row carries
    the same four keys.
    """
    if sample_count < 1000:
        raise ValueError('At least 1000 samples are required')
    k = k or KernelConstants()
    seed = model.params.seed if seed is None else seed

    points = _sobol(3, 2 * sample_count, seed)
    half = len(points) // 2
    rows = []
    for name, ratio in _scalar_ratios(model, k, points).items():
        rows.append(_report_row(name, half, ratio[:half], ratio))

    power = model.n / 2.0
    u = 10.0 ** (5.0 * _sobol(1, 2 * sample_count, seed)[:, 0] - 2.0)
    ratio = (1.0 + u) ** power * np.exp(-u)
    rows.append(_report_row('gaussian_polynomial', half, ratio[:half], ratio))

    first, both = _poisson_ratios(model, poisson_samples, cfg)
    rows.append(_report_row('poisson_domination', len(first), first, both))
    return rows


def _report_row(name, samples, first, both):
    sup = float(np.max(first))
    sup2 = float(np.max(both))
    logger.info('%s: sup %.6g over %d samples', name, sup, samples)
    return collections.OrderedDict([
        ('inequality_name', name),
        ('samples', int(samples)),
        ('empirical_sup', sup2),
        ('stability_ratio', sup2 / sup if sup > 0.0 else float('inf')),
    ])


def _poisson_ratios(model, samples, cfg):
    """sup over t of the Poisson average over M f(x), on nested x grids.

    Each compactly supported family member and each end gets a log grid of
    s in POISSON_S_RANGE starting at the core boundary; the coarse grid is
    every other point of the doubled one. Returns the coarse and the
    doubled ratios.
    """
    cfg = cfg or SearchConfig(grid_per_decade=6, center_grid_per_decade=6,
                              refine_iters=20)
    family = [f for f in standard_family(model.params) if f.is_compact()]
    classes = [(f, end) for f in family for end in ENDS]
    per_class = max(2, int(math.ceil(samples / float(len(classes)))))
    s_grid = np.geomspace(POISSON_S_RANGE[0], POISSON_S_RANGE[1],
                          2 * per_class - 1)
    log_t = np.log(grids.log_grid(POISSON_T_RANGE[0], POISSON_T_RANGE[1], 2))

    def ratio(job):
        f, end, s = job
        x = RadialPoint(end, float(s))
        rhs = maximal_uncentered(model, f, x, cfg).value
        if not rhs > 0.0:
            return 0.0
        best = grids.maximize_on_grid(
            lambda t: poisson_average(model, f, x, math.exp(t)), log_t,
            cfg.refine_iters)
        return best.value / rhs

    jobs = [(f, end, s) for f, end in classes for s in s_grid]
    with WorkerMap() as pmap:
        ratios = np.array(list(pmap(ratio, jobs)))
    coarse = np.tile(np.arange(len(s_grid)) % 2 == 0, len(classes))
    return ratios[coarse], ratios
