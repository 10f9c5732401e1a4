"""
Metric-measure model of the connected sum of R^n and R^m.

The large end EndM is Euclidean R^m outside the unit ball. The small end
EndN is (R^n outside the unit ball) x S^k with k = m - n, the sphere factor
having radius R. The core is a single atom of measure mu_K that costs
delta_K to cross. Distances within an end are the shorter of the product
Euclidean distance and the path through the core; distances between the
ends always pass through the core.

Points are handled radially. A ball is described by its centre's region
and radial coordinate; by rotational symmetry the centre sits on a fixed
reference axis, and the ball meets the shell of radius u in a cap whose
area is obtained from regularised incomplete beta functions.
"""

import collections
import enum
import functools
import logging
import math

import numpy as np
import pandas
from scipy import special

from endslab import quadrature
from endslab.params import ModelParams
from endslab.parallel import WorkerMap
from endslab.quadrature import DivergenceError

logger = logging.getLogger(__name__)


# Order of the fixed rule integrating over the sphere-factor angle.
FIBER_ORDER = 32

# Order of each panel of the distance integral in shell_kernel_integral.
DISTANCE_ORDER = 8


class Region(enum.Enum):
    """The three pieces of the manifold."""
    END_M = 'EndM'
    END_N = 'EndN'
    CORE = 'Core'

    @classmethod
    def parse(cls, value):
        """Accepts a Region or one of its names, ignoring case."""
        if isinstance(value, cls):
            return value
        try:
            return REGION_NAMES[str(value).strip().lower()]
        except KeyError:
            raise ValueError('Unknown region: {0!r}'.format(value))

    def __str__(self):
        return self.value


REGION_NAMES = {
    'endm': Region.END_M,
    'm': Region.END_M,
    'endn': Region.END_N,
    'n': Region.END_N,
    'core': Region.CORE,
    'k': Region.CORE,
}

ENDS = (Region.END_M, Region.END_N)


class RadialPoint(collections.namedtuple('RadialPoint', 'region s')):
    """A point of M up to rotation: its region and radial coordinate."""
    __slots__ = ()

    def __new__(cls, region, s=None):
        region = Region.parse(region)
        if region is Region.CORE:
            if s is not None:
                raise ValueError('Core points carry no radial coordinate')
        else:
            try:
                s = float(s)
            except (TypeError, ValueError):
                raise ValueError('End points need a radial coordinate')
            if not s >= 1.0:
                raise ValueError('Radial coordinate must be at least 1')
        return super(RadialPoint, cls).__new__(cls, region, s)

    @classmethod
    def core(cls):
        return cls(Region.CORE)

    def __str__(self):
        if self.region is Region.CORE:
            return 'Core'
        return '({0}, {1:g})'.format(self.region, self.s)


class Ball(collections.namedtuple('Ball', 'center radius')):
    """Open ball of the model metric; the centre is a RadialPoint."""
    __slots__ = ()

    def __new__(cls, center, radius):
        if not isinstance(center, RadialPoint):
            raise TypeError('Ball center must be a RadialPoint')
        radius = float(radius)
        if not radius > 0.0:
            raise ValueError('Ball radius must be positive')
        return super(Ball, cls).__new__(cls, center, radius)


class EmbeddedPoint(collections.namedtuple('EmbeddedPoint',
                                           'region flat fiber')):
    """A concrete representative: flat vector plus fibre direction for EndN."""
    __slots__ = ()

    def __new__(cls, region, flat=None, fiber=None):
        region = Region.parse(region)
        if region is not Region.CORE:
            flat = np.asarray(flat, dtype=float)
            if np.linalg.norm(flat) < 1.0 - 1e-12:
                raise ValueError('Flat component must have norm at least 1')
        if region is Region.END_N:
            fiber = np.asarray(fiber, dtype=float)
            if abs(np.linalg.norm(fiber) - 1.0) > 1e-9:
                raise ValueError('Fiber component must be a unit vector')
        else:
            fiber = None
        return super(EmbeddedPoint, cls).__new__(cls, region, flat, fiber)


class PowerSegment(collections.namedtuple('PowerSegment', 'a b c beta')):
    """The radial profile c * u**beta on the interval [a, b)."""
    __slots__ = ()

    def __new__(cls, a, b, c=1.0, beta=0.0):
        a = float(a)
        b = float(b)
        if not a >= 1.0:
            raise ValueError('Segments must start at radius 1 or beyond')
        if not b > a:
            raise ValueError('Segment end must exceed its start')
        return super(PowerSegment, cls).__new__(cls, a, b, float(c),
                                                float(beta))

    def values(self, u):
        """Evaluates the profile, ignoring the interval."""
        return self.c * np.power(u, self.beta)

    def powered(self, p):
        """Returns |c u^beta|^p on the same interval."""
        return PowerSegment(self.a, self.b, abs(self.c) ** p, self.beta * p)


def sphere_area(d):
    """Area of the unit sphere S^(d-1) in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def unit_ball_volume(d):
    """Volume of the unit ball of R^d."""
    return sphere_area(d) / d


def cap_fraction(d, cos_theta):
    """Fraction of S^(d-1) within angle theta of a pole, given cos(theta).

    Vectorised; arguments outside [-1, 1] are clipped, so callers may pass
    the raw law-of-cosines ratio.
    """
    x = np.clip(np.asarray(cos_theta, dtype=float), -1.0, 1.0)
    sin2 = (1.0 - x) * (1.0 + x)
    half = 0.5 * special.betainc((d - 1) / 2.0, 0.5, sin2)
    return np.where(x >= 0.0, half, 1.0 - half)


def cap_integral(d, theta, method='beta', tol=1e-10):
    """Area of the cap of angular radius theta on the unit sphere S^(d-1).

    method='beta' uses the regularised incomplete beta function and accepts
    arrays; method='quadrature' integrates sin^(d-2) adaptively.
    """
    if (int(d) != d) or (d < 2):
        raise ValueError('Sphere dimension d must be an integer >= 2')
    d = int(d)
    theta_arr = np.asarray(theta, dtype=float)
    if np.any(~(theta_arr >= 0.0)) or np.any(theta_arr > math.pi):
        raise ValueError('Cap angle must lie in [0, pi]')

    if method == 'beta':
        area = sphere_area(d) * cap_fraction(d, np.cos(theta_arr))
        return float(area) if area.ndim == 0 else area

    if method == 'quadrature':
        if theta_arr.ndim:
            raise ValueError('Quadrature caps take a scalar angle')
        integral = quadrature.integrate(
            lambda phi: np.sin(phi) ** (d - 2), 0.0, float(theta_arr), tol)
        return sphere_area(d - 1) * integral

    raise ValueError('Unknown cap method: {0!r}'.format(method))


class _Unit(object):
    """The constant function 1, in the segment form ball_integral expects."""
    core_value = 1.0
    whole = (PowerSegment(1.0, float('inf')),)

    def segments(self, end):
        return self.whole


UNIT = _Unit()


class Model(object):
    """Immutable geometry of one parameter set."""
    def __init__(self, params=None):
        if params is None:
            params = ModelParams()
        self.params = params
        self.n = params.n
        self.m = params.m
        self.k = params.k
        self.delta = params.delta_K
        self.mu = params.mu_K
        self.R = params.sphere_radius
        self.tol = params.quad_tol
        self.max_depth = params.quad_max_depth

        # Total area of the sphere factor of the small end.
        self.fiber_area = sphere_area(self.k + 1) * self.R ** self.k

        self.amplitude = {Region.END_M: sphere_area(self.m),
                          Region.END_N: sphere_area(self.n) * self.fiber_area}
        self.dimension = {Region.END_M: self.m, Region.END_N: self.n}

        self._volume = functools.lru_cache(maxsize=1 << 16)(self._ball_volume)
        self._local = functools.lru_cache(maxsize=1 << 12)(self._local_volume)

    def __repr__(self):
        return 'Model({0!r})'.format(self.params)

    def end_dimension(self, end):
        """Dimension at infinity of an end."""
        return self.dimension[Region.parse(end)]

    def shell_density(self, end, u):
        """Measure per unit radius of the shell of radius u in an end."""
        end = Region.parse(end)
        u = np.asarray(u, dtype=float)
        rho = self.amplitude[end] * u ** (self.dimension[end] - 1)
        return float(rho) if rho.ndim == 0 else rho

    def shell_integral(self, end, seg, a=None, b=None):
        """Closed-form integral of a power segment against shell measure."""
        end = Region.parse(end)
        a = seg.a if a is None else a
        b = seg.b if b is None else b
        if b <= a:
            return 0.0

        gamma = seg.beta + self.dimension[end]
        scale = seg.c * self.amplitude[end]
        if math.isinf(b):
            if gamma >= 0.0:
                raise DivergenceError(
                    'Integral of s^{0:g} over [{1:g}, inf) in {2} diverges'
                    .format(seg.beta, a, end))
            return -scale * a ** gamma / gamma
        if gamma == 0.0:
            return scale * math.log(b / a)
        return scale * (b ** gamma - a ** gamma) / gamma

    def shell_measure(self, end, a, b):
        """Measure of the radial band [a, b) of an end."""
        if b <= a:
            return 0.0
        return self.shell_integral(end, PowerSegment(a, b))

    def norm(self, point):
        """The |x| function: s for end points, 1 on the core."""
        if point.region is Region.CORE:
            return 1.0
        return point.s

    def core_distance(self, point):
        """Distance from a point to the core atom."""
        if point.region is Region.CORE:
            return 0.0
        return (point.s - 1.0) + 0.5 * self.delta

    def through_core(self, point, u):
        """Length of the path from a point through the core to radius u.

        The value is the same for every point of the shell, in either end.
        """
        u = np.asarray(u, dtype=float)
        if point.region is Region.CORE:
            length = 0.5 * self.delta + (u - 1.0)
        else:
            length = (point.s - 1.0) + self.delta + (u - 1.0)
        return float(length) if length.ndim == 0 else length

    def embed(self, point):
        """Representative of a radial point on the reference axis."""
        if point.region is Region.CORE:
            return EmbeddedPoint(Region.CORE)
        flat = np.zeros(self.dimension[point.region])
        flat[0] = point.s
        fiber = None
        if point.region is Region.END_N:
            fiber = np.zeros(self.k + 1)
            fiber[0] = 1.0
        return EmbeddedPoint(point.region, flat, fiber)

    def distance(self, p, q):
        """Model distance between two embedded points."""
        if p.region is Region.CORE and q.region is Region.CORE:
            return 0.0
        if p.region is Region.CORE or q.region is Region.CORE:
            other = q if p.region is Region.CORE else p
            return (np.linalg.norm(other.flat) - 1.0) + 0.5 * self.delta

        s = np.linalg.norm(p.flat)
        u = np.linalg.norm(q.flat)
        via_core = (s - 1.0) + self.delta + (u - 1.0)
        if p.region is not q.region:
            return float(via_core)

        euclid = np.linalg.norm(p.flat - q.flat)
        if p.region is Region.END_N:
            cos_psi = np.clip(np.dot(p.fiber, q.fiber), -1.0, 1.0)
            euclid = math.hypot(euclid, self.R * math.acos(cos_psi))
        return float(min(euclid, via_core))

    def distances_from(self, center, region, flat, fiber=None):
        """Distances from the axis representative of center to many points.

        flat holds one point per row; fiber likewise for EndN samples.
        """
        flat = np.atleast_2d(flat)
        u = np.linalg.norm(flat, axis=1)
        via_core = self.through_core(center, u)
        if center.region is not region:
            return np.asarray(via_core, dtype=float)

        offset = flat.copy()
        offset[:, 0] -= center.s
        euclid2 = np.sum(offset * offset, axis=1)
        if region is Region.END_N:
            psi = np.arccos(np.clip(np.atleast_2d(fiber)[:, 0], -1.0, 1.0))
            euclid2 = euclid2 + (self.R * psi) ** 2
        return np.minimum(np.sqrt(euclid2), via_core)

    def core_fraction(self, center, r):
        """Share of the core atom inside B(center, r): a linear ramp."""
        if center.region is Region.CORE:
            return min(1.0, 2.0 * r / self.delta)
        return min(1.0, max(0.0, (r - (center.s - 1.0)) / self.delta))

    def reach(self, ball, end):
        """Radial structure of a ball within an end.

        Returns (full_to, lo, hi): every shell u < full_to lies inside the
        ball through the core, and shells in (lo, hi) are cut by the
        Euclidean branch. lo == hi when there is no partial band.
        """
        end = Region.parse(end)
        center, r = ball
        full_to = max(1.0, r - self.through_core(center, 1.0) + 1.0)
        if center.region is end:
            lo = max(1.0, center.s - r, full_to)
            hi = center.s + r
            if hi > lo:
                return full_to, lo, hi
        return full_to, full_to, full_to

    def reach_bounds(self, ball, end):
        """Radial interval of an end touched by a ball, or None."""
        full_to, lo, hi = self.reach(ball, end)
        if full_to > 1.0:
            return 1.0, max(full_to, hi)
        if hi > lo:
            return lo, hi
        return None

    def reach_area(self, center, end, u, r):
        """Area of the part of shell u within Euclidean reach r of center.

        Only the Euclidean branch of the metric is counted; u and r are
        broadcast against each other.
        """
        end = Region.parse(end)
        u, r = np.broadcast_arrays(np.asarray(u, dtype=float),
                                   np.asarray(r, dtype=float))
        if center.region is not end:
            return np.zeros(u.shape)

        s = center.s
        if end is Region.END_M:
            cos0 = (s * s + u * u - r * r) / (2.0 * s * u)
            return self.shell_density(end, u) * cap_fraction(self.m, cos0)
        return u ** (self.n - 1) * self._fiber_reach(s, u, r)

    def _fiber_reach(self, s, u, r):
        """Sphere-factor integral of the flat cap areas of an EndN shell."""
        R = self.R
        psi_full = np.minimum(
            np.sqrt(np.maximum(r * r - (s + u) ** 2, 0.0)) / R, math.pi)
        psi_max = np.minimum(
            np.sqrt(np.maximum(r * r - (s - u) ** 2, 0.0)) / R, math.pi)

        # Below psi_full the whole flat sphere is inside.
        full = sphere_area(self.n) * self.fiber_area * cap_fraction(
            self.k + 1, np.cos(psi_full))

        tau, w = quadrature.cosine_rule(FIBER_ORDER)
        width = (psi_max - psi_full)[..., None]
        psi = psi_full[..., None] + width * tau
        uu = u[..., None]
        cos0 = (s * s + uu * uu + (R * psi) ** 2 - (r[..., None]) ** 2) / (
            2.0 * s * uu)
        integrand = cap_fraction(self.n, cos0) * np.sin(psi) ** (self.k - 1)
        partial = np.sum(integrand * w, axis=-1) * (psi_max - psi_full)
        partial *= sphere_area(self.n) * sphere_area(self.k) * R ** self.k
        return full + partial

    def slice_weight(self, center, r, end, u):
        """Measure density of the shell u of an end inside B(center, r)."""
        end = Region.parse(end)
        if end is Region.CORE:
            raise ValueError('Slices are taken in an end, not the core')
        if not r > 0.0:
            raise ValueError('Ball radius must be positive')
        u = np.asarray(u, dtype=float)
        if np.any(~(u >= 1.0)):
            raise ValueError('Shell radius must be at least 1')

        full = self.through_core(center, u) < r
        weight = np.where(full, self.shell_density(end, u),
                          self.reach_area(center, end, u, r))
        return float(weight) if weight.ndim == 0 else weight

    def breakpoints(self, ball, end):
        """Radii where the slice weight of a ball has a kink."""
        center, r = ball
        if center.region is not end:
            return ()
        s = center.s
        points = [r - s, s - r, s + r]
        if end is Region.END_N:
            wrap = math.pi * self.R
            if r > wrap:
                q = math.sqrt(r * r - wrap * wrap)
                points.extend([q - s, s - q, s + q])
        return tuple(p for p in points if p > 1.0)

    def ball_integral(self, ball, f):
        """Integral over a ball of a radial function made of power segments.

        f provides segments(end) and core_value. Shells entirely inside the
        ball are integrated in closed form; the Euclidean band adaptively.
        """
        center, r = ball
        total = f.core_value * self.core_fraction(center, r) * self.mu
        for end in ENDS:
            segments = f.segments(end)
            if not segments:
                continue
            full_to, lo, hi = self.reach(ball, end)
            for seg in segments:
                b = min(seg.b, full_to)
                if b > seg.a:
                    total += self.shell_integral(end, seg, seg.a, b)
                a, b = max(seg.a, lo), min(seg.b, hi)
                if b > a:
                    total += self._partial_integral(ball, end, seg, a, b)
        return total

    def _partial_integral(self, ball, end, seg, a, b):
        center, r = ball

        def integrand(u):
            return seg.values(u) * self.slice_weight(center, r, end, u)

        return quadrature.integrate(integrand, a, b, self.tol, self.max_depth,
                                    self.breakpoints(ball, end))

    def ball_volume(self, ball):
        """V(x, r), memoised per ball."""
        return self._volume(ball.center, ball.radius)

    def _ball_volume(self, center, r):
        return self.ball_integral(Ball(center, r), UNIT)

    def local_volume(self, region, r):
        """Volume of a radius-r ball around a point deep inside a region.

        Exact for end points at depth r or more; the Core value is the
        volume of the ball centred on the core.
        """
        return self._local(Region.parse(region), float(r))

    def _local_volume(self, region, r):
        if region is Region.END_M:
            return unit_ball_volume(self.m) * r ** self.m
        if region is Region.CORE:
            return self.ball_volume(Ball(RadialPoint.core(), r))

        R = self.R
        k = self.k

        def integrand(psi):
            flat = np.maximum(r * r - (R * psi) ** 2, 0.0) ** (self.n / 2.0)
            return flat * np.sin(psi) ** (k - 1)

        top = min(math.pi, r / R)
        integral = quadrature.integrate(integrand, 0.0, top, self.tol,
                                        self.max_depth)
        return (unit_ball_volume(self.n) * sphere_area(k) * R ** k *
                integral)

    def shell_kernel_integral(self, x, end, u, profile):
        """Integral over each shell u of an end of g(d(x, y)).

        profile supplies value(E) = g(E), slope(E) = -g'(E) >= 0, a length
        scale, and cutoff(E_min), the distance beyond which the remaining
        decrease of g is negligible. The shell integral is
        g(T) rho(u) + int_{E_min}^{T} -g'(E) A(u, E) dE, with T the
        through-core distance and A the Euclidean reach area.
        """
        end = Region.parse(end)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        via_core = np.asarray(self.through_core(x, u), dtype=float)
        result = profile.value(via_core) * self.shell_density(end, u)
        if x.region is not end:
            return result

        e_min = np.abs(x.s - u)
        e_max = np.minimum(via_core, profile.cutoff(e_min))
        span = float(np.max(e_max - e_min, initial=0.0))
        if span <= 0.0:
            return result

        # Geometric panels from e_min outwards: widths scale * 3^j.
        scale = profile.scale
        count = int(math.ceil(math.log(2.0 * span / scale + 1.0, 3.0))) + 1
        count = max(1, min(count, 48))
        offsets = scale * (3.0 ** np.arange(count + 1) - 1.0) / 2.0

        lower = np.minimum(e_min[:, None] + offsets[None, :-1],
                           e_max[:, None])
        upper = np.minimum(e_min[:, None] + offsets[None, 1:],
                           e_max[:, None])
        nodes, weights = quadrature.composite_nodes(lower, upper,
                                                    DISTANCE_ORDER)
        nodes = nodes.reshape(len(u), -1)
        weights = weights.reshape(len(u), -1)

        area = self.reach_area(x, end, u[:, None], nodes)
        result = result + np.sum(profile.slope(nodes) * area * weights, axis=1)
        return result

    def doubling_scan(self, centers, radii, paired=False):
        """Table of V(x, r), V(x, 2r) and their ratio.

        Every centre is combined with every radius, or with its own radius
        when paired is true.
        """
        if not centers or not radii:
            raise ValueError('Doubling scans need centers and radii')
        if paired:
            if len(centers) != len(radii):
                raise ValueError('Paired scans need one radius per center')
            jobs = list(zip(centers, radii))
        else:
            jobs = [(x, r) for x in centers for r in radii]

        def row(job):
            x, r = job
            v = self.ball_volume(Ball(x, r))
            v2 = self.ball_volume(Ball(x, 2.0 * r))
            s = float('nan') if x.region is Region.CORE else x.s
            return (str(x.region), s, float(r), v, v2, v2 / v)

        with WorkerMap() as pmap:
            rows = list(pmap(row, jobs))
        logger.info('Doubling scan: %d rows', len(rows))
        return pandas.DataFrame(rows, columns=DOUBLING_COLUMNS)

    def volume_regime_check(self, x, r):
        """Classifies B(x, r) into the three volume regimes.

        Returns (tag, V / r^d), where d is m in regimes 'a' and 'c' and n in
        regime 'b' (a ball of radius above 1 kept inside the small end).
        """
        r = float(r)
        if not r > 0.0:
            raise ValueError('Ball radius must be positive')
        volume = self.ball_volume(Ball(x, r))
        if r <= 1.0:
            return 'a', volume / r ** self.m
        if (x.region is Region.END_N) and (r <= x.s - 1.0):
            return 'b', volume / r ** self.n
        return 'c', volume / r ** self.m


DOUBLING_COLUMNS = ['region', 's', 'r', 'V', 'V2', 'ratio']
