"""
Centred and uncentred Hardy-Littlewood maximal operators.

Both operators are computed as searches over balls. For radial data the
average over B(y, r) depends only on the region of y, its radial
coordinate u and r, and the ball contains x exactly when r exceeds the
smallest distance from x to a point at radius u of that region. The
uncentred supremum is therefore a search over (end, u, r) with that
feasibility constraint.
"""

import collections
import logging
import math

import numpy as np
import pandas

from endslab import grids
from endslab.functions import chi2, lp_norm
from endslab.geometry import ENDS, Ball, RadialPoint, Region
from endslab.parallel import WorkerMap

logger = logging.getLogger(__name__)


class InfeasibleTarget(ValueError):
    """Raised if no admissible ball can touch the requested region."""
    pass


# Local maxima of the coarse centre scan refined on the fine centre grid,
# taken in order of value.
REFINED_CANDIDATES = 8

# Local maxima below (1 - REFINE_TOLERANCE) times the best coarse value are
# not refined.
REFINE_TOLERANCE = 0.5

# Operator names used in profiles and reports.
CENTERED = 'M_centered'
UNCENTERED = 'M_uncentered'
HEAT = 'M_heat'


class SearchConfig(object):
    """Grid densities and radius bracket of a maximal search.

    r_max defaults to 1e4 times the norm of the evaluation point.
    """
    def __init__(self, r_min=1e-3, r_max=None, grid_per_decade=24,
                 refine_iters=60, center_grid_per_decade=24):
        if not r_min > 0.0:
            raise ValueError('r_min must be positive')
        if (r_max is not None) and not (r_max > r_min):
            raise ValueError('r_max must exceed r_min')
        for name, value in (('grid_per_decade', grid_per_decade),
                            ('center_grid_per_decade', center_grid_per_decade)):
            if int(value) != value or value < 1:
                raise ValueError('{0} must be a positive integer'.format(name))
        if int(refine_iters) != refine_iters or refine_iters < 0:
            raise ValueError('refine_iters must be a nonnegative integer')

        self.r_min = float(r_min)
        self.r_max = None if r_max is None else float(r_max)
        self.grid_per_decade = int(grid_per_decade)
        self.refine_iters = int(refine_iters)
        self.center_grid_per_decade = int(center_grid_per_decade)

    def radius_bracket(self, model, x):
        r_max = self.r_max
        if r_max is None:
            r_max = 1e4 * model.norm(x)
        if not r_max > self.r_min:
            raise ValueError('Radius bracket is empty')
        return self.r_min, r_max

    def as_dict(self):
        return {'r_min': self.r_min, 'r_max': self.r_max,
                'grid_per_decade': self.grid_per_decade,
                'refine_iters': self.refine_iters,
                'center_grid_per_decade': self.center_grid_per_decade}

    def __repr__(self):
        return 'SearchConfig({0})'.format(', '.join(
            '{0}={1!r}'.format(k, v) for k, v in sorted(self.as_dict().items())))


class SearchResult(collections.namedtuple('SearchResult',
                                          'value end u r boundary')):
    """Realised supremum and the ball attaining it.

    end is the region of the best centre, u its radial coordinate (None for
    the core) and r the radius; boundary is set when the best grid point
    lay on the edge of the search grid.
    """
    __slots__ = ()


class MaximalProfile(object):
    """Values of a maximal operator on a radial evaluation grid."""
    def __init__(self, operator, grid, results):
        if len(grid) != len(results):
            raise ValueError('One result per grid point is required')
        order = sorted(range(len(grid)), key=lambda i: _grid_key(grid[i]))
        self.operator = operator
        self.grid = [grid[i] for i in order]
        self.results = [results[i] for i in order]
        self.values = np.array([max(r.value, 0.0) for r in self.results])

    def region(self, region):
        """Sorted radii and values of one end."""
        region = Region.parse(region)
        idx = [i for i, p in enumerate(self.grid) if p.region is region]
        s = np.array([self.grid[i].s for i in idx])
        return s, self.values[idx]

    def core_value(self):
        """Value at the core, or None if the grid skips it."""
        for point, value in zip(self.grid, self.values):
            if point.region is Region.CORE:
                return value
        return None

    def scaled(self, c):
        """Profile of c times the data (operators are positively homogeneous)."""
        results = [r._replace(value=c * r.value) for r in self.results]
        return MaximalProfile(self.operator, self.grid, results)

    def to_frame(self):
        rows = []
        for point, result, value in zip(self.grid, self.results, self.values):
            s = float('nan') if point.region is Region.CORE else point.s
            if self.operator == HEAT:
                rows.append((str(point.region), s, result.t, value))
            else:
                rows.append((str(point.region), s, value,
                             '' if result.end is None else str(result.end),
                             float('nan') if result.u is None else result.u,
                             result.r, int(bool(result.boundary))))
        columns = HEAT_COLUMNS if self.operator == HEAT else PROFILE_COLUMNS
        return pandas.DataFrame(rows, columns=columns)


PROFILE_COLUMNS = ['region', 's', 'value', 'arg_end', 'arg_u', 'arg_r',
                   'boundary_flag']
HEAT_COLUMNS = ['region', 's', 't_argmax', 'value']
COUNTEREXAMPLE_COLUMNS = ['s', 'M', 'M_c', 'ratio', 'argmax_r', 'r_star',
                          'r_model']


def _grid_key(point):
    rank = {Region.END_M: 0, Region.END_N: 1, Region.CORE: 2}[point.region]
    return (rank, point.s or 0.0)


def _touches_support(model, g, ball):
    """False when the ball provably misses the support of g."""
    if g.core_value != 0.0 and model.core_fraction(*ball) > 0.0:
        return True
    for end in ENDS:
        segments = g.segments(end)
        if not segments:
            continue
        bounds = model.reach_bounds(ball, end)
        if bounds is None:
            continue
        lo, hi = bounds
        for seg in segments:
            if seg.c != 0.0 and seg.a < hi and lo < seg.b:
                return True
    return False


def _average(model, g, ball):
    """Average of a nonnegative function g over a ball."""
    if not _touches_support(model, g, ball):
        return 0.0
    avg = model.ball_integral(ball, g) / model.ball_volume(ball)
    return min(max(avg, 0.0), g.sup_abs())


def ball_average(model, f, ball):
    """Average of |f| over a ball; lies in [0, sup |f|]."""
    return _average(model, f.abs(), ball)


def min_distance(model, x, center):
    """Smallest distance from x to a point at the centre's region and radius.

    Within one end this is the radial gap (the Euclidean branch, with the
    centre on the ray of x); otherwise the path through the core.
    """
    if center.region is Region.CORE:
        return model.core_distance(x)
    if x.region is Region.CORE:
        return model.core_distance(center)
    if x.region is center.region:
        return abs(x.s - center.s)
    return model.through_core(x, center.s)


def maximal_centered(model, f, x, cfg=None):
    """M_c f(x): sup over r of the average of |f| over B(x, r)."""
    cfg = cfg or SearchConfig()
    g = f.abs()
    lo, hi = cfg.radius_bracket(model, x)
    log_r = np.log(grids.log_grid(lo, hi, cfg.grid_per_decade))

    def objective(t):
        return _average(model, g, Ball(x, math.exp(t)))

    best = grids.maximize_on_grid(objective, log_r, cfg.refine_iters)
    boundary = best.boundary and best.value > 0.0
    if boundary:
        logger.warning('Centred search for %s peaked at the radius bracket '
                       'edge', x)
    return SearchResult(best.value, x.region, x.s, math.exp(best.x), boundary)


def maximal_uncentered(model, f, x, cfg=None):
    """M f(x): sup of averages of |f| over balls containing x.

    For every centre the radius is optimised first: a log grid of excesses
    r - d_min merged with the radii where the ball starts or stops covering
    a breakpoint of the support, then golden-section refinement. The best
    value per centre varies slowly with the centre, so a coarse log grid of
    centres, seeded with the path midpoints between x and the support
    breakpoints, is scanned next and every local maximum within
    REFINE_TOLERANCE of the best is refined on the fine centre grid. The
    centred search seeds the result, so M f >= M_c f always holds.
    """
    cfg = cfg or SearchConfig()
    g = f.abs()
    best = maximal_centered(model, f, x, cfg)
    ceiling = g.sup_abs()
    if g.is_zero() or best.value >= ceiling:
        return best

    lo, hi = cfg.radius_bracket(model, x)
    profile = _CenterProfile(model, g, x, cfg, lo, hi)
    seeds = _midpoint_seeds(model, g, x)
    u_hi = max(hi, 10.0)
    grid_u = {}
    for end in ENDS:
        base = np.log(grids.log_grid(1.0, u_hi,
                                     max(2, cfg.center_grid_per_decade // 4)))
        extra = [math.log(u) for u in seeds[end] if u <= u_hi]
        grid_u[end] = np.unique(np.append(base, extra))

    jobs = [(Region.CORE, 0.0)]
    jobs.extend((end, t) for end in ENDS for t in grid_u[end])
    with WorkerMap() as pmap:
        scored = list(pmap(lambda job: profile(*job), jobs))

    top = _Candidate(Region.CORE, 0.0, *scored[0])
    offset = 1
    peaks = []
    for end in ENDS:
        values = [row[0] for row in scored[offset:offset + len(grid_u[end])]]
        for i, v in enumerate(values):
            if v > top.value:
                top = _Candidate(end, grid_u[end][i], *scored[offset + i])
            if _is_peak(values, i):
                peaks.append((v, end, i))
        offset += len(grid_u[end])

    # Stable sort: the first centre attaining a value wins ties.
    peaks.sort(key=lambda peak: -peak[0])
    floor = (1.0 - REFINE_TOLERANCE) * top.value
    for v, end, i in peaks[:REFINED_CANDIDATES]:
        if v <= 0.0 or v < floor or top.value >= ceiling:
            break
        candidate = _refine_center(profile, cfg, end, grid_u[end], i)
        if candidate.value > top.value:
            top = candidate

    if top.value <= best.value:
        return best

    center = _center(top.region, top.log_u)
    boundary = top.edge or (top.region is not Region.CORE and
                            top.log_u >= math.log(u_hi) - 1e-12)
    if boundary:
        logger.warning('Uncentred search for %s peaked at the grid edge', x)
    return SearchResult(top.value, top.region, center.s, top.r, boundary)


_Candidate = collections.namedtuple('_Candidate', 'region log_u value r edge')


class _CenterProfile(object):
    """Best ball containing x about a given centre, over the radius."""
    def __init__(self, model, g, x, cfg, lo, hi):
        self.model = model
        self.g = g
        self.x = x
        self.cfg = cfg
        self.lo = lo
        self.hi = hi
        self.excess = np.log(grids.log_grid(
            lo, hi, max(2, cfg.grid_per_decade // 4)))

    def __call__(self, region, log_u):
        """(value, r, edge) of the best ball about centre (region, e^log_u).

        edge is set when the best radius is the largest of the grid.
        """
        model, g = self.model, self.g
        center = _center(region, log_u)
        d = min_distance(model, self.x, center)
        extra = [math.log(r - d) for r in _reach_radii(model, g, center)
                 if self.lo < r - d < self.hi]
        points = np.unique(np.append(self.excess, extra))

        def objective(log_e):
            return _average(model, g, Ball(center, d + math.exp(log_e)))

        found = grids.maximize_on_grid(objective, points,
                                       self.cfg.refine_iters)
        return (found.value, d + math.exp(found.x),
                found.index == len(points) - 1)


def _is_peak(values, i):
    left = values[i - 1] if i > 0 else -np.inf
    right = values[i + 1] if i + 1 < len(values) else -np.inf
    return values[i] >= left and values[i] >= right


def _refine_center(profile, cfg, end, grid, i):
    """Fine centre grid between the neighbours of grid[i], then golden."""
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, len(grid) - 1)]
    fine = np.linspace(a, b, _count(b - a, cfg.center_grid_per_decade))
    found = grids.maximize_on_grid(lambda t: profile(end, t)[0], fine,
                                   cfg.refine_iters // 2)
    return _Candidate(end, found.x, *profile(end, found.x))


def _center(region, log_u):
    if region is Region.CORE:
        return RadialPoint.core()
    return RadialPoint(region, max(1.0, math.exp(log_u)))


def _count(width, per_decade):
    """Points of a fine linear grid in log space covering `width`."""
    return max(3, int(math.ceil(width / math.log(10.0) * per_decade)) + 1)


def _reach_radii(model, g, center):
    """Radii where B(center, r) starts or stops covering a breakpoint."""
    radii = []
    if g.core_value != 0.0:
        radii.append(model.core_distance(center) + 0.5 * model.delta)
        if center.region is not Region.CORE:
            radii.append(center.s - 1.0)
    for end in ENDS:
        for seg in g.segments(end):
            for a in (seg.a, seg.b):
                if math.isinf(a):
                    continue
                radii.append(model.through_core(center, a))
                if center.region is end:
                    radii.extend([abs(center.s - a), center.s + a])
                    if end is Region.END_N:
                        radii.append(math.hypot(center.s + a,
                                                math.pi * model.R))
    return [r for r in radii if r > 0.0]


def _midpoint_seeds(model, g, x):
    """Radial coordinates, per end, of the midpoints of the radial paths
    from x to each breakpoint of the support of g (and to the core when g
    charges it).
    """
    targets = []
    if g.core_value != 0.0:
        targets.append(RadialPoint.core())
    for end in ENDS:
        for seg in g.segments(end):
            targets.extend(RadialPoint(end, a) for a in (seg.a, seg.b)
                           if not math.isinf(a))

    seeds = dict((end, []) for end in ENDS)
    for target in targets:
        point = _along_path(model, x, target, 0.5)
        if point.region is not Region.CORE:
            seeds[point.region].append(point.s)
    return seeds


def _along_path(model, x, y, fraction):
    """Point at a fraction of the radial path from x to y.

    Within one end the path runs along the ray; otherwise it passes through
    the core, whose crossing is collapsed onto the core point.
    """
    if (x.region is y.region) and (x.region is not Region.CORE):
        return RadialPoint(x.region, x.s + fraction * (y.s - x.s))
    lx = model.core_distance(x)
    ly = model.core_distance(y)
    t = fraction * (lx + ly)
    if x.region is not Region.CORE and t < x.s - 1.0:
        return RadialPoint(x.region, x.s - t)
    back = (lx + ly) - t
    if y.region is not Region.CORE and back < y.s - 1.0:
        return RadialPoint(y.region, y.s - back)
    return RadialPoint.core()


def counterexample_profile(model, s_list, cfg=None):
    """M chi2 against M_c chi2 at points (EndM, s).

    Returns a table with the centred maximiser, the asymptotic radius
    r_star = m s / (m - n) and r_model = m (s - 2 + delta) / (m - n), the
    maximiser of the model's own EndN mass quotient.
    """
    s_list = [float(s) for s in s_list]
    if not s_list:
        raise ValueError('At least one radius is required')
    if any(s < 10.0 for s in s_list):
        raise ValueError('Counterexample radii must be at least 10')

    f = chi2()
    m, n = model.m, model.n

    def row(s):
        x = RadialPoint(Region.END_M, s)
        uncentered = maximal_uncentered(model, f, x, cfg)
        centered = maximal_centered(model, f, x, cfg)
        return (s, uncentered.value, centered.value,
                uncentered.value / centered.value, centered.r,
                m * s / (m - n), m * (s - 2.0 + model.delta) / (m - n))

    rows = [row(s) for s in s_list]
    logger.info('Counterexample table: %d rows', len(rows))
    return pandas.DataFrame(rows, columns=COUNTEREXAMPLE_COLUMNS)


DecayBound = collections.namedtuple('DecayBound', 'constant values')


def decay_bound_check(model, f, end, exponent, s_grid, cfg=None):
    """Empirical constant of M f(x) <= C ||f||_1 / |x|^exponent.

    f must live in the opposite end; x runs over (end, s) for s in s_grid.
    exponent is a number or one of 'n', 'm'. Returns the supremum and the
    scaled value at every grid point.
    """
    end = Region.parse(end)
    if end is Region.CORE:
        raise ValueError('Decay is measured along an end')
    if f.segments(end) or f.core_value != 0.0:
        raise ValueError('f must be supported in the opposite end')
    if exponent in ('n', 'm'):
        exponent = getattr(model, exponent)

    norm = lp_norm(model, f, 1)
    if norm == 0.0:
        raise ValueError('f must not vanish')

    def scaled(s):
        x = RadialPoint(end, s)
        value = maximal_uncentered(model, f, x, cfg).value
        return model.norm(x) ** exponent * value / norm

    with WorkerMap() as pmap:
        values = np.array(list(pmap(scaled, [float(s) for s in s_grid])))
    return DecayBound(float(np.max(values)), values)


def minimal_volume_bound(model, x, target, cfg=None):
    """Smallest V(y, r) over balls containing x that touch `target`.

    x lies in the small end and target is EndM or the core. Returns the
    minimal volume divided by norm(x)^n.
    """
    cfg = cfg or SearchConfig()
    target = Region.parse(target)
    if x.region is not Region.END_N:
        raise InfeasibleTarget('Minimal volumes are measured from EndN')
    if target is Region.END_N:
        raise InfeasibleTarget('Every ball containing x already meets EndN')

    def needed(center):
        return max(min_distance(model, x, center), _touch(model, center,
                                                          target))

    def volume(center):
        r = needed(center)
        r = r * (1.0 + 1e-12) + 1e-12
        return model.ball_volume(Ball(center, r))

    best = volume(RadialPoint.core())
    log_u = np.log(grids.log_grid(1.0, 4.0 * x.s, cfg.center_grid_per_decade))
    for end in ENDS:
        found = grids.maximize_on_grid(
            lambda t: -volume(RadialPoint(end, max(1.0, math.exp(t)))),
            log_u, cfg.refine_iters)
        best = min(best, -found.value)

    return best / model.norm(x) ** model.n


def _touch(model, center, target):
    """Radius beyond which B(center, r) meets the target region."""
    if target is Region.CORE:
        if center.region is Region.CORE:
            return 0.0
        return center.s - 1.0
    if center.region is target:
        return 0.0
    return model.through_core(center, 1.0)
