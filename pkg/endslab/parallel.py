"""
Thread pool used by the scans; sized from the ENDS_LAB_THREADS variable.

Scans nest (a profile maps over points, each point runs a search that maps
over centres); only the outermost WorkerMap owns a pool and any WorkerMap
opened from one of its workers runs serially.
"""

import logging
import multiprocessing.pool
import os
import threading

from endslab.params import InvalidConfig

logger = logging.getLogger(__name__)


THREADS_VARIABLE = 'ENDS_LAB_THREADS'

# Explicit override installed by the command line; None defers to the
# environment.
_override = None

# Set inside pool workers.
_worker = threading.local()


def set_thread_count(count):
    """Overrides the environment for the rest of the process."""
    global _override
    if count is not None and count < 1:
        raise InvalidConfig('Thread count must be positive')
    _override = count


def thread_count():
    """Number of worker threads a scan may use; 1 means no pool."""
    if _override is not None:
        return _override

    raw = os.environ.get(THREADS_VARIABLE)
    if raw is None or not raw.strip():
        return 1
    try:
        count = int(raw)
    except ValueError:
        raise InvalidConfig('{0} must be an integer, got {1!r}'.format(
            THREADS_VARIABLE, raw))
    if count < 1:
        raise InvalidConfig('{0} must be positive'.format(THREADS_VARIABLE))
    return count


def in_worker():
    """True when called from a thread of an active WorkerMap pool."""
    return getattr(_worker, 'active', False)


class WorkerMap(object):
    """Abstracts the worker pool; switches to no workers if jobs <= 1.

    The context value is an order-preserving map function, so results never
    depend on scheduling. Inside a pool worker the map is always serial.
    """
    def __init__(self, jobs=None):
        if jobs is None:
            jobs = thread_count()
        if in_worker():
            jobs = 1
        self.jobs = jobs
        if jobs <= 1:
            self.pool = None
            self.map_function = map
        else:
            logger.debug('Starting %d worker threads', jobs)
            self.pool = multiprocessing.pool.ThreadPool(processes=jobs)
            self.map_function = self._pool_map

    def _pool_map(self, func, iterable):
        def run(item):
            _worker.active = True
            try:
                return func(item)
            finally:
                _worker.active = False
        return self.pool.map(run, iterable)

    def __enter__(self):
        return self.map_function

    def __exit__(self, type, value, traceback):
        if self.pool is not None:
            self.pool.terminate()
