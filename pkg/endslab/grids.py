"""
Log-spaced grids, golden-section refinement and log-log slope fits.
"""

import collections
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)


INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQ = (3 - math.sqrt(5)) / 2  # 1 / phi^2


GridMax = collections.namedtuple('GridMax', 'x value index boundary')


def log_grid(lo, hi, per_decade):
    """Geometric grid from lo to hi, both included."""
    if not 0.0 < lo < hi:
        raise ValueError('Log grids need 0 < lo < hi')
    if per_decade < 1:
        raise ValueError('Grid density must be positive')
    count = int(math.ceil(math.log10(hi / lo) * per_decade)) + 1
    return np.geomspace(lo, hi, max(count, 2))


def golden_section_max(func, a, b, iters=60):
    """Golden-section search for a maximum of func on [a, b].

    Returns (x, y) for the best point probed, so the result never falls
    below any value the search has seen.
    """
    (a, b) = (min(a, b), max(a, b))
    h = b - a
    c = a + INV_PHI_SQ * h
    d = a + INV_PHI * h
    yc = func(c)
    yd = func(d)
    best = (c, yc) if yc >= yd else (d, yd)

    for _ in range(max(iters - 2, 0)):
        if yc >= yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQ * h
            yc = func(c)
            if yc > best[1]:
                best = (c, yc)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = func(d)
            if yd > best[1]:
                best = (d, yd)

    return best


def maximize_on_grid(func, points, iters=60, excluded=None):
    """Grid scan of func followed by golden-section refinement.

    points must be increasing; ties go to the first index attaining the
    maximum. The refinement bracket spans the neighbours of the best point.
    excluded, a predicate on points, marks points that are scanned but
    never used as a refinement bracket endpoint or start. Returns a GridMax
    whose boundary flag is set when the best grid point is an end point.
    """
    points = np.asarray(points, dtype=float)
    values = np.array([func(x) for x in points])
    index = int(np.argmax(values))
    boundary = index in (0, len(points) - 1)
    best = (points[index], values[index])

    if iters > 0 and len(points) > 1:
        bracket = _bracket(points, index, excluded)
        if bracket is not None:
            x, y = golden_section_max(func, bracket[0], bracket[1], iters)
            if y > best[1]:
                best = (x, y)

    return GridMax(best[0], best[1], index, boundary)


def _bracket(points, index, excluded):
    """Neighbour bracket around points[index], trimmed of excluded points."""
    if excluded is not None and excluded(points[index]):
        return None

    lo = max(index - 1, 0)
    hi = min(index + 1, len(points) - 1)
    if excluded is not None:
        while lo < index and excluded(points[lo]):
            lo += 1
        while hi > index and excluded(points[hi]):
            hi -= 1
    if lo == hi:
        return None
    return points[lo], points[hi]


def fit_slope(x, y):
    """Least-squares slope of log(y) against log(x)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2:
        raise ValueError('Slope fits need at least two points')
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)
