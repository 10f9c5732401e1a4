"""
Radial test functions: power-law segments per end plus a value on the core.

Literal syntax, used on the command line and in reports::

    endM:[1,2):1; endN:[2,inf):3*s^-4; core:0.5

Clauses are separated by semicolons. An end clause gives a half-open radial
interval and a form `C`, `C*s^BETA` or `s^BETA`; `inf` closes unbounded
intervals. The names chi1, chi2, chi3 and one, and the names of the
standard family members, are accepted in place of a literal.
"""

import logging
import math
import re

import numpy as np

from endslab.geometry import ENDS, PowerSegment, RadialPoint, Region
from endslab.params import InvalidConfig, ModelParams

logger = logging.getLogger(__name__)


class RadialFunction(object):
    """Immutable radial function; zero outside its segments."""
    def __init__(self, segments=None, core_value=0.0, name=None):
        self._segments = {}
        for region, segs in (segments or {}).items():
            region = Region.parse(region)
            if region is Region.CORE:
                raise ValueError('Use core_value for the core')
            segs = tuple(sorted((PowerSegment(*s) for s in segs),
                                key=lambda s: s.a))
            for left, right in zip(segs[:-1], segs[1:]):
                if right.a < left.b:
                    raise ValueError('Segments of {0} overlap'.format(region))
            if segs:
                self._segments[region] = segs

        self.core_value = float(core_value)
        self.name = name if name is not None else format_function(self)

    def segments(self, end):
        """Sorted power segments of an end."""
        return self._segments.get(Region.parse(end), ())

    def __call__(self, point):
        return evaluate(self, point)

    def __repr__(self):
        return 'RadialFunction({0!r})'.format(self.name)

    def __eq__(self, other):
        return (isinstance(other, RadialFunction) and
                self._segments == other._segments and
                self.core_value == other.core_value)

    def __ne__(self, other):
        return not self == other

    def __hash__(self):
        return hash((tuple(sorted((str(k), v) for k, v in
                                  self._segments.items())), self.core_value))

    def __add__(self, other):
        """Sum of two functions whose end segments do not overlap."""
        segments = {}
        for end in ENDS:
            segments[end] = self.segments(end) + other.segments(end)
        return RadialFunction(segments, self.core_value + other.core_value)

    def values(self, end, u):
        """Vectorised evaluation on radii u of an end."""
        u = np.asarray(u, dtype=float)
        total = np.zeros(u.shape)
        for seg in self.segments(end):
            inside = (u >= seg.a) & (u < seg.b)
            total = np.where(inside, seg.values(u), total)
        return total

    def abs(self):
        segments = dict((end, [s.powered(1) for s in self.segments(end)])
                        for end in ENDS)
        return RadialFunction(segments, abs(self.core_value),
                              name='|{0}|'.format(self.name))

    def scaled(self, c):
        """Returns c times the function."""
        segments = dict((end, [PowerSegment(s.a, s.b, c * s.c, s.beta)
                               for s in self.segments(end)])
                        for end in ENDS)
        return RadialFunction(segments, c * self.core_value)

    def restrict(self, region):
        """The part of the function living in one region."""
        region = Region.parse(region)
        if region is Region.CORE:
            return RadialFunction(core_value=self.core_value)
        return RadialFunction({region: self.segments(region)})

    def decompose(self):
        """The three parts f*chi1, f*chi2, f*chi3 (EndM, EndN, core)."""
        return (self.restrict(Region.END_M), self.restrict(Region.END_N),
                self.restrict(Region.CORE))

    def is_zero(self):
        return self.core_value == 0.0 and not any(
            s.c for end in ENDS for s in self.segments(end))

    def is_compact(self):
        return all(not math.isinf(s.b) for end in ENDS
                   for s in self.segments(end))

    def sup_abs(self):
        """Essential supremum of |f| (the core atom has positive measure)."""
        sup = abs(self.core_value)
        for end in ENDS:
            for seg in self.segments(end):
                if seg.c == 0.0:
                    continue
                if seg.beta > 0.0:
                    edge = seg.b ** seg.beta
                else:
                    edge = seg.a ** seg.beta
                sup = max(sup, abs(seg.c) * edge)
        return sup


def evaluate(f, point):
    """Value of a radial function at a RadialPoint."""
    if point.region is Region.CORE:
        return f.core_value
    for seg in f.segments(point.region):
        if seg.a <= point.s < seg.b:
            return float(seg.values(point.s))
    return 0.0


def lp_norm(model, f, p):
    """L^p norm of f on the model; p may be float('inf').

    Integrals are closed form; DivergenceError is raised for data that is
    not p-integrable.
    """
    if p == float('inf'):
        return f.sup_abs()
    if not p >= 1.0:
        raise ValueError('Norm exponent must be at least 1')

    total = abs(f.core_value) ** p * model.mu
    for end in ENDS:
        for seg in f.segments(end):
            if seg.c != 0.0:
                total += model.shell_integral(end, seg.powered(p))
    return total ** (1.0 / p)


def support_measure(model, f):
    """Measure of the set where f is nonzero."""
    total = model.mu if f.core_value != 0.0 else 0.0
    for end in ENDS:
        for seg in f.segments(end):
            if seg.c != 0.0:
                total += model.shell_measure(end, seg.a, seg.b)
    return total


def constant(value=1.0):
    """The constant function on all of M."""
    whole = [PowerSegment(1.0, float('inf'), value)]
    return RadialFunction({Region.END_M: whole, Region.END_N: whole},
                          core_value=value, name='one' if value == 1 else None)


def chi1():
    """Indicator of the large end."""
    return RadialFunction({Region.END_M: [(1.0, float('inf'))]}, name='chi1')


def chi2():
    """Indicator of the small end."""
    return RadialFunction({Region.END_N: [(1.0, float('inf'))]}, name='chi2')


def chi3():
    """Indicator of the core."""
    return RadialFunction(core_value=1.0, name='chi3')


def shell_indicator(end, a, b, name=None):
    return RadialFunction({end: [(a, b)]}, name=name)


def power_tail(end, a, beta, c=1.0, name=None):
    """c * s^beta on [a, inf) of an end."""
    return RadialFunction({end: [(a, float('inf'), c, beta)]}, name=name)


def standard_family(params=None):
    """Test functions exercised by the weak-type harness, in fixed order.

    Inventory: the core indicator chi3; chi1 and chi2 truncated to [1, 4);
    dyadic shell indicators [2^k, 2^(k+1)) of EndN for k = 1..3 and [2, 4)
    of EndM; the power tails s^-(m+1) on EndM and s^-(n+1) on EndN; and a
    bump across the core (both ends on [1, 2) plus the core).
    """
    if params is None:
        params = ModelParams()
    m = Region.END_M
    n = Region.END_N

    family = [
        chi3(),
        shell_indicator(m, 1, 4, name='chi1[1,4)'),
        shell_indicator(n, 1, 4, name='chi2[1,4)'),
    ]
    for k in range(1, 4):
        a, b = 2 ** k, 2 ** (k + 1)
        family.append(shell_indicator(n, a, b,
                                      name='shellN[{0},{1})'.format(a, b)))
    family.append(shell_indicator(m, 2, 4, name='shellM[2,4)'))
    family.append(power_tail(m, 1, -(params.m + 1),
                             name='tailM^-{0}'.format(params.m + 1)))
    family.append(power_tail(n, 1, -(params.n + 1),
                             name='tailN^-{0}'.format(params.n + 1)))
    family.append(RadialFunction({m: [(1, 2)], n: [(1, 2)]}, core_value=1.0,
                                 name='bump'))
    return family


# An end clause: region, half-open interval and form.
CLAUSE_PATTERN = re.compile(r"""
    ^(?P<region>end[mn])\s*:\s*
    \[\s*(?P<a>[^,\s]+)\s*,\s*(?P<b>[^)\s]+)\s*\)\s*:\s*
    (?P<form>.+)$
""", re.VERBOSE | re.IGNORECASE)

# Coefficient and/or power of s.
FORM_PATTERN = re.compile(r"""
    ^(?P<c>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)?
    \s*\*?\s*
    (?:s\s*\^\s*(?P<beta>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?))?$
""", re.VERBOSE)


def parse_function(text, params=None):
    """Builds a RadialFunction from its literal or a known name."""
    text = text.strip()
    named = _named_functions(params)
    if text in named:
        return named[text]

    segments = {Region.END_M: [], Region.END_N: []}
    core_value = 0.0
    for clause in [c.strip() for c in text.split(';')]:
        if not clause:
            continue
        region, _, body = clause.partition(':')
        if region.strip().lower() == 'core':
            try:
                core_value = float(body)
            except ValueError:
                raise InvalidConfig('Invalid core value: {0!r}'.format(clause))
            continue

        match = CLAUSE_PATTERN.match(clause)
        if match is None:
            raise InvalidConfig('Cannot parse clause {0!r}'.format(clause))
        form = FORM_PATTERN.match(match.group('form').strip())
        if form is None or not (form.group('c') or form.group('beta')):
            raise InvalidConfig('Invalid form in clause {0!r}'.format(clause))

        try:
            seg = PowerSegment(float(match.group('a')),
                               float(match.group('b')),
                               float(form.group('c') or 1.0),
                               float(form.group('beta') or 0.0))
        except ValueError as e:
            raise InvalidConfig('Invalid clause {0!r}: {1}'.format(clause, e))
        segments[Region.parse(match.group('region'))].append(seg)

    try:
        return RadialFunction(segments, core_value, name=text)
    except ValueError as e:
        raise InvalidConfig(str(e))


def _named_functions(params):
    named = dict((f.name, f) for f in standard_family(params))
    for f in (chi1(), chi2(), chi3(), constant()):
        named[f.name] = f
    return named


def format_function(f):
    """Literal text of a function, accepted by parse_function."""
    clauses = []
    for end, tag in ((Region.END_M, 'endM'), (Region.END_N, 'endN')):
        for seg in f.segments(end):
            form = '{0!r}'.format(seg.c)
            if seg.beta != 0.0:
                form += '*s^{0!r}'.format(seg.beta)
            clauses.append('{0}:[{1!r},{2}):{3}'.format(
                tag, seg.a, 'inf' if math.isinf(seg.b) else repr(seg.b),
                form))
    if f.core_value != 0.0 or not clauses:
        clauses.append('core:{0!r}'.format(f.core_value))
    return '; '.join(clauses)
