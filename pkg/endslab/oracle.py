"""
Monte-Carlo ground truth for volumes, ball averages and norms.

Estimates are hit-or-miss over a region known to enclose the ball, using
only the metric (Model.distances_from) to decide membership. The enclosing
region is split into strata: shells that lie entirely inside the ball
through the core, the Euclidean sector around the centre, and the core
layer. Each stratum draws its own samples in batches; every batch has its
own Philox stream spawned from the seed, and batch sums are reduced in a
fixed order, so results do not depend on thread scheduling.
"""

import collections
import logging
import math

import numpy as np
from scipy import special

from endslab.functions import standard_family
from endslab.geometry import ENDS, Ball, EmbeddedPoint, Model, RadialPoint, \
    Region, cap_fraction
from endslab.maximal import ball_average
from endslab.parallel import WorkerMap
from endslab.params import InvalidConfig

logger = logging.getLogger(__name__)


# Smallest share of the samples given to a nonempty stratum.
MIN_STRATUM_SHARE = 0.05

# Relative deviation always accepted by compare_engines.
RELATIVE_FLOOR = 0.01


class McConfig(object):
    """Sample count, seed and batch size of a Monte-Carlo estimate.

    stratified=False samples whole shells around the ball instead of the
    Euclidean sector.
    """
    def __init__(self, samples=200000, seed=0, batch=20000, stratified=True):
        if int(samples) != samples or samples < 1000:
            raise InvalidConfig('At least 1000 samples are required')
        if int(batch) != batch or batch < 1:
            raise InvalidConfig('Batch size must be a positive integer')
        if int(seed) != seed or not 0 <= seed < 2 ** 64:
            raise InvalidConfig('Seed must be a 64-bit unsigned integer')
        self.samples = int(samples)
        self.seed = int(seed)
        self.batch = int(batch)
        self.stratified = bool(stratified)

    def as_dict(self):
        return {'samples': self.samples, 'seed': self.seed,
                'batch': self.batch, 'stratified': self.stratified}


McEstimate = collections.namedtuple('McEstimate',
                                    'estimate stderr degenerate')


class Stratum(collections.namedtuple('Stratum',
                                     'region a b polar_cap fiber_cap')):
    """Radial band [a, b) of an end with caps around the reference axis.

    Core strata sample the depth of the core layer instead.
    """
    __slots__ = ()

    def measure(self, model):
        if self.region is Region.CORE:
            return model.mu
        total = model.shell_measure(self.region, self.a, self.b)
        total *= float(cap_fraction(model.dimension[self.region],
                                    math.cos(self.polar_cap)))
        if self.region is Region.END_N:
            total *= float(cap_fraction(model.k + 1,
                                        math.cos(self.fiber_cap)))
        return total


def _rng(seed_sequence):
    return np.random.Generator(np.random.Philox(seed_sequence))


def _radii(dim, a, b, count, rng):
    """Inverse CDF of the density u^(dim-1) on [a, b)."""
    q = rng.random(count)
    return (a ** dim + q * (b ** dim - a ** dim)) ** (1.0 / dim)


def _cap_directions(d, theta_max, count, rng):
    """Uniform unit vectors of R^d within angle theta_max of e_1."""
    normal = rng.standard_normal((count, d - 1))
    normal /= np.linalg.norm(normal, axis=1)[:, None]

    # Uniform area below theta_max, inverted through the incomplete beta.
    q = rng.random(count) * cap_fraction(d, math.cos(theta_max))
    upper = q > 0.5
    sin2 = special.betaincinv((d - 1) / 2.0, 0.5,
                              2.0 * np.where(upper, 1.0 - q, q))
    cos_theta = np.sqrt(np.clip(1.0 - sin2, 0.0, 1.0))
    cos_theta = np.where(upper, -cos_theta, cos_theta)
    sin_theta = np.sqrt(np.clip(sin2, 0.0, 1.0))

    directions = np.empty((count, d))
    directions[:, 0] = cos_theta
    directions[:, 1:] = sin_theta[:, None] * normal
    return directions


def sample_points(model, region, radial_range, count, rng,
                  polar_cap=math.pi, fiber_cap=math.pi):
    """Samples of an end with density proportional to its measure.

    Returns (u, flat, fiber); fiber is None outside EndN.
    """
    region = Region.parse(region)
    if region is Region.CORE:
        raise ValueError('The core has no radial samples')
    a, b = (float(v) for v in radial_range)
    if not (1.0 <= a < b < float('inf')):
        raise ValueError('Radial range must be finite and within [1, inf)')

    dim = model.dimension[region]
    u = _radii(dim, a, b, count, rng)
    flat = u[:, None] * _cap_directions(dim, polar_cap, count, rng)
    fiber = None
    if region is Region.END_N:
        fiber = _cap_directions(model.k + 1, fiber_cap, count, rng)
    return u, flat, fiber


def sample_point(model, region, radial_range, rng):
    """One EmbeddedPoint drawn from the measure of a radial band."""
    region = Region.parse(region)
    if region is Region.CORE:
        return EmbeddedPoint(Region.CORE)
    u, flat, fiber = sample_points(model, region, radial_range, 1, rng)
    return EmbeddedPoint(region, flat[0],
                         None if fiber is None else fiber[0])


def enclosing_strata(model, ball, stratified=True):
    """Strata covering a ball, in a fixed order."""
    center, r = ball
    strata = []
    for end in ENDS:
        full_to, lo, hi = model.reach(ball, end)
        if not stratified:
            top = max(full_to, hi)
            if top > 1.0:
                strata.append(Stratum(end, 1.0, top, math.pi, math.pi))
            continue
        if full_to > 1.0:
            strata.append(Stratum(end, 1.0, full_to, math.pi, math.pi))
        if hi > lo:
            polar = math.asin(r / center.s) if r < center.s else math.pi
            fiber = min(math.pi, r / model.R)
            strata.append(Stratum(end, lo, hi, polar, fiber))

    if center.region is Region.CORE or r > center.s - 1.0:
        strata.append(Stratum(Region.CORE, 0.0, model.delta, math.pi,
                              math.pi))
    return strata


def _allocate(measures, samples):
    """Samples per stratum: proportional to measure, with a floor."""
    total = sum(measures)
    floor = int(MIN_STRATUM_SHARE * samples / max(len(measures), 1))
    return [max(floor, int(round(samples * w / total)), 2) if w > 0.0
            else 0 for w in measures]


def _batch_sums(model, ball, f, stratum, count, seed_sequence):
    """(n, sum x, sum y, sum xx, sum yy, sum xy) of hit x and value y."""
    rng = _rng(seed_sequence)
    center, r = ball
    if stratum.region is Region.CORE:
        depth = rng.random(count) * model.delta
        if center.region is Region.CORE:
            hit = 0.5 * depth < r
        else:
            hit = (center.s - 1.0) + depth < r
        value = np.full(count, 1.0 if f is None else abs(f.core_value))
    else:
        u, flat, fiber = sample_points(
            model, stratum.region, (stratum.a, stratum.b), count, rng,
            stratum.polar_cap, stratum.fiber_cap)
        distances = model.distances_from(center, stratum.region, flat, fiber)
        hit = distances < r
        if f is None:
            value = np.ones(count)
        else:
            value = np.abs(f.values(stratum.region, u))

    x = hit.astype(float)
    y = x * value
    return np.array([count, x.sum(), y.sum(), (x * x).sum(), (y * y).sum(),
                     (x * y).sum()])


def _stratum_sums(model, ball, f, strata, counts, cfg, seed_sequence):
    """Summed batch statistics per stratum, reduced in batch order."""
    jobs = []
    children = seed_sequence.spawn(len(strata))
    for i, (count, child) in enumerate(zip(counts, children)):
        sizes = [cfg.batch] * (count // cfg.batch)
        if count % cfg.batch:
            sizes.append(count % cfg.batch)
        for size, stream in zip(sizes, child.spawn(len(sizes))):
            jobs.append((i, size, stream))

    def run(job):
        return _batch_sums(model, ball, f, strata[job[0]], job[1], job[2])

    with WorkerMap() as pmap:
        results = list(pmap(run, jobs))

    sums = [np.zeros(6) for _ in strata]
    for job, result in zip(jobs, results):
        sums[job[0]] += result
    return sums


def _estimate(model, ball, f, cfg, seed_sequence):
    """Ratio (f given) or volume (f None) estimate over the strata."""
    strata = enclosing_strata(model, ball, cfg.stratified)
    measures = [s.measure(model) for s in strata]
    counts = _allocate(measures, cfg.samples)
    sums = _stratum_sums(model, ball, f, strata, counts, cfg, seed_sequence)

    volume = numerator = 0.0
    hits = 0.0
    for w, (n, sx, sy, _, _, _) in zip(measures, sums):
        if n:
            volume += w * sx / n
            numerator += w * sy / n
            hits += sx

    if hits == 0.0:
        logger.warning('No Monte-Carlo sample hit the ball %s', ball)
        return McEstimate(0.0, 0.0, True)

    if f is None:
        variance = 0.0
        for w, (n, sx, _, _, _, _) in zip(measures, sums):
            if n > 1:
                p = sx / n
                variance += w * w * p * (1.0 - p) / n
        return McEstimate(volume, math.sqrt(variance), False)

    ratio = numerator / volume
    variance = 0.0
    for w, (n, sx, sy, sxx, syy, sxy) in zip(measures, sums):
        if n > 1:
            # Sample variance of y - ratio * x, the delta-method residual.
            mean = (sy - ratio * sx) / n
            second = (syy - 2.0 * ratio * sxy + ratio * ratio * sxx) / n
            variance += w * w * max(second - mean * mean, 0.0) / (n - 1)
    return McEstimate(ratio, math.sqrt(variance) / volume, False)


def mc_volume(model, ball, cfg=None):
    """Hit-or-miss estimate of V(ball) with its binomial standard error."""
    cfg = cfg or McConfig()
    return _estimate(model, ball, None, cfg, np.random.SeedSequence(cfg.seed))


def mc_ball_average(model, f, ball, cfg=None):
    """Ratio estimate of the average of |f| over a ball."""
    cfg = cfg or McConfig()
    return _estimate(model, ball, f, cfg, np.random.SeedSequence(cfg.seed))


def mc_norm(model, f, cfg=None):
    """Monte-Carlo L^1 norm of a compactly supported radial function."""
    cfg = cfg or McConfig()
    if not f.is_compact():
        raise ValueError('Monte-Carlo norms need compact support')

    bands = [(end, seg) for end in ENDS for seg in f.segments(end)
             if seg.c != 0.0]
    total = model.mu * abs(f.core_value)
    if not bands:
        return McEstimate(total, 0.0, total == 0.0)

    variance = 0.0
    per_band = max(2, cfg.samples // len(bands))
    streams = np.random.SeedSequence(cfg.seed).spawn(len(bands))
    for (end, seg), stream in zip(bands, streams):
        rng = _rng(stream)
        u = _radii(model.dimension[end], seg.a, seg.b, per_band, rng)
        values = np.abs(seg.values(u))
        w = model.shell_measure(end, seg.a, seg.b)
        total += w * values.mean()
        variance += w * w * values.var(ddof=1) / per_band
    return McEstimate(total, math.sqrt(variance), False)


def _trial(index, rng, family):
    """The (function, ball) pair of one comparison trial."""
    end = ENDS[index % 2]
    s = 10.0 ** (math.log10(2.0) + rng.random() * math.log10(20.0))
    r = s * 10.0 ** (rng.random() * math.log10(30.0) - 1.0)
    f = None if (index // 2) % 2 == 0 else family[rng.integers(len(family))]
    return f, Ball(RadialPoint(end, s), r)


def compare_engines(model, trials=20, cfg=None):
    """Quadrature against Monte-Carlo on random balls of both ends.

    Even-numbered pairs of trials compare volumes, the others averages of a
    standard family member. A trial passes when the two values agree within
    max(3 stderr, 1% of the quadrature value).
    """
    if not isinstance(model, Model):
        model = Model(model)
    cfg = cfg or McConfig(seed=model.params.seed)
    if trials < 10:
        raise InvalidConfig('At least 10 trials are required')

    root = np.random.SeedSequence(cfg.seed)
    picker, streams = root.spawn(2)
    rng = _rng(picker)
    family = standard_family(model.params)

    rows = []
    for index, stream in enumerate(streams.spawn(trials)):
        f, ball = _trial(index, rng, family)
        if f is None:
            quad = model.ball_volume(ball)
            mc = _estimate(model, ball, None, cfg, stream)
        else:
            quad = ball_average(model, f, ball)
            mc = _estimate(model, ball, f, cfg, stream)
        allowed = max(3.0 * mc.stderr, RELATIVE_FLOOR * abs(quad))
        deviation = abs(quad - mc.estimate)
        rows.append(collections.OrderedDict([
            ('trial', index),
            ('quantity', 'volume' if f is None else 'average'),
            ('function', '' if f is None else f.name),
            ('region', str(ball.center.region)),
            ('s', ball.center.s),
            ('r', ball.radius),
            ('quadrature', quad),
            ('monte_carlo', mc.estimate),
            ('stderr', mc.stderr),
            ('rel_dev', deviation / abs(quad) if quad else deviation),
            ('passed', bool(deviation <= allowed and not mc.degenerate)),
        ]))

    failures = [row['trial'] for row in rows if not row['passed']]
    if failures:
        logger.warning('%d of %d engine comparisons failed', len(failures),
                       trials)
    return collections.OrderedDict([
        ('trials', trials),
        ('max_rel_dev', max(row['rel_dev'] for row in rows)),
        ('failures', failures),
        ('passed', not failures),
        ('rows', rows),
    ])
