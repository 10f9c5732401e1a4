"""
Adaptive Gauss-Legendre quadrature on panels, plus the fixed rules used for
the inner integrals of nested quadratures.

Integrands are vectorised: they receive a numpy array of nodes and must
return an array of the same shape.
"""

import functools
import heapq
import logging

import numpy as np
from numpy.polynomial import legendre

logger = logging.getLogger(__name__)


class ConvergenceError(ArithmeticError):
    """Raised if adaptive quadrature exhausts its depth or panel limit."""
    pass


class DivergenceError(ArithmeticError):
    """Raised if a closed-form integral does not converge."""
    pass


# Gauss-Legendre order of a single panel.
ORDER = 10

# Hard cap on the number of live panels of one integral.
PANEL_LIMIT = 5000

# Floor for the relative tolerance test of integrals that vanish.
TINY = 1e-300


@functools.lru_cache(maxsize=None)
def legendre_rule(order):
    """Nodes and weights on [-1, 1]. The arrays are shared; do not modify."""
    nodes, weights = legendre.leggauss(order)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


@functools.lru_cache(maxsize=None)
def fixed_rule(order):
    """Nodes and weights on [0, 1]."""
    x, w = legendre_rule(order)
    nodes = (x + 1.0) / 2.0
    weights = w / 2.0
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


@functools.lru_cache(maxsize=None)
def cosine_rule(order):
    """Rule on [0, 1] after the substitution t = (1 - cos(pi*tau))/2.

    Nodes cluster at both ends, which absorbs square-root behaviour of the
    integrand at the interval endpoints.
    """
    tau, w = fixed_rule(order)
    nodes = (1.0 - np.cos(np.pi * tau)) / 2.0
    weights = w * (np.pi / 2.0) * np.sin(np.pi * tau)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def _panel(func, a, b, order):
    """Integrates one panel; returns (value, error).

    The error estimate compares the rule on the whole panel against the
    same rule on its two halves, whose sum is the returned value.
    """
    x, w = legendre_rule(order)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    quarter = 0.5 * half
    nodes = np.concatenate((mid + half * x,
                            0.5 * (a + mid) + quarter * x,
                            0.5 * (mid + b) + quarter * x))
    y = np.asarray(func(nodes), dtype=float)
    if not np.all(np.isfinite(y)):
        raise ConvergenceError(
            'Integrand is not finite on [{0!r}, {1!r}]'.format(a, b))

    whole = half * np.dot(w, y[:order])
    left = quarter * np.dot(w, y[order:2 * order])
    right = quarter * np.dot(w, y[2 * order:])
    value = left + right
    return value, abs(whole - value)


def integrate_with_error(func, a, b, tol=1e-8, max_depth=40, breakpoints=(),
                         order=ORDER):
    """Adaptive integral of func over [a, b]; returns (value, error).

    The interval is first cut at every breakpoint inside it. The panel with
    the largest error estimate is bisected until the summed error is below
    tol times the summed absolute panel values.
    """
    a = float(a)
    b = float(b)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError('Integration limits must be finite')
    if b < a:
        raise ValueError('Upper limit is below the lower limit')
    if b == a:
        return 0.0, 0.0

    edges = sorted(set([a, b] + [float(p) for p in breakpoints
                                 if a < p < b]))

    # Heap entries are (-error, sequence, a, b, depth, value).
    heap = []
    total = 0.0
    total_abs = 0.0
    total_err = 0.0
    for seq, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
        value, err = _panel(func, lo, hi, order)
        heapq.heappush(heap, (-err, seq, lo, hi, 0, value))
        total += value
        total_abs += abs(value)
        total_err += err
    seq = len(heap)
    splits = 0

    while total_err > tol * max(total_abs, TINY):
        neg_err, _, lo, hi, depth, value = heapq.heappop(heap)
        if (depth >= max_depth) or (len(heap) >= PANEL_LIMIT):
            raise ConvergenceError(
                'Quadrature did not converge on [{0!r}, {1!r}]: error {2:.3g} '
                'after depth {3}'.format(a, b, total_err, depth))

        mid = 0.5 * (lo + hi)
        total -= value
        total_abs -= abs(value)
        total_err += neg_err
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            sub_value, sub_err = _panel(func, sub_lo, sub_hi, order)
            heapq.heappush(heap, (-sub_err, seq, sub_lo, sub_hi, depth + 1,
                                  sub_value))
            seq += 1
            total += sub_value
            total_abs += abs(sub_value)
            total_err += sub_err

        # Running sums drift; recompute them from the panels now and then.
        splits += 1
        if splits % 128 == 0:
            total = sum(entry[5] for entry in heap)
            total_abs = sum(abs(entry[5]) for entry in heap)
            total_err = sum(-entry[0] for entry in heap)

    logger.debug('Integrated [%g, %g] with %d panels', a, b, len(heap))
    return total, total_err


def integrate(func, a, b, tol=1e-8, max_depth=40, breakpoints=(),
              order=ORDER):
    """Adaptive integral of func over [a, b]."""
    return integrate_with_error(func, a, b, tol, max_depth, breakpoints,
                                order)[0]


def composite_nodes(lower, upper, order):
    """Fixed-order nodes and weights mapped onto [lower, upper] elementwise.

    lower and upper are broadcast against each other; the result carries an
    extra trailing axis of length order.
    """
    x, w = fixed_rule(order)
    lower = np.asarray(lower, dtype=float)[..., None]
    width = np.asarray(upper, dtype=float)[..., None] - lower
    width = np.maximum(width, 0.0)
    return lower + width * x, width * w
