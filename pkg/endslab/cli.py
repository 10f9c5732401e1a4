"""
Command line interface: one subcommand per harness.

Every run writes its artifact plus manifest.json into --out. Exit codes:
0 on success, 1 for invalid configuration or arguments, 2 when a numerical
procedure fails to converge.
"""

import argparse
import collections
import io
import json
import logging
import os
import platform
import sys
import time

import numpy as np
import pandas

from endslab import __version__
from endslab import parallel
from endslab.functions import parse_function
from endslab.geometry import Ball, Model, RadialPoint, Region
from endslab.grids import log_grid
from endslab.heat import (HeatConfig, classify_regime, heat_maximal,
                          inequality_checks, kernel_eval)
from endslab.maximal import (CENTERED, HEAT, UNCENTERED, MaximalProfile,
                             SearchConfig,
                             counterexample_profile, decay_bound_check,
                             maximal_centered, maximal_uncentered)
from endslab.oracle import McConfig, compare_engines
from endslab.params import InvalidConfig, ModelParams
from endslab.quadrature import ConvergenceError, DivergenceError
from endslab.weaktype import family_report

logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONVERGENCE = 2

FLOAT_FORMAT = '%.17g'

VOLUME_COLUMNS = ['region', 's', 'r', 'V', 'regime', 'scaled']
DECAY_COLUMNS = ['s', 'scaled_value']
KERNEL_COLUMNS = ['t', 'regime', 'distance', 'kernel']
WEAKTYPE_CSV_COLUMNS = ['function', 'operator', 'k_weak', 'l2_ratio',
                        'linf_ratio']


class UsageError(Exception):
    """Raised if the command line cannot be parsed."""
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Raises UsageError instead of exiting with status 2."""
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError('{0}: error: {1}'.format(self.prog, message))


class RunManifest(object):
    """Everything needed to reproduce the artifacts of one run."""
    def __init__(self, subcommand, params, argv):
        self.subcommand = subcommand
        self.params = params
        self.argv = list(argv)
        self.settings = collections.OrderedDict()
        self.artifacts = []
        self.started = time.time()

    def to_dict(self):
        return collections.OrderedDict([
            ('subcommand', self.subcommand),
            ('argv', self.argv),
            ('params', self.params.as_dict()),
            ('seed', self.params.seed),
            ('tolerances', {'quad_tol': self.params.quad_tol,
                            'quad_max_depth': self.params.quad_max_depth}),
            ('settings', self.settings),
            ('artifacts', self.artifacts),
            ('threads', parallel.thread_count()),
            ('versions', {'endslab': __version__, 'numpy': np.__version__,
                          'pandas': pandas.__version__,
                          'python': platform.python_version()}),
            ('wall_time', time.time() - self.started),
        ])

    def write(self, directory):
        path = os.path.join(directory, 'manifest.json')
        _write_json(path, self.to_dict())
        return path


def _float_list(text):
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(
            'expected comma separated numbers, got {0!r}'.format(text))
    if not values:
        raise argparse.ArgumentTypeError('expected at least one number')
    return values


def _point(text):
    """REGION:S or core."""
    region, _, s = text.partition(':')
    try:
        region = Region.parse(region)
        return RadialPoint(region, float(s) if s else None)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _time_grid(text):
    """LO,HI,PER_DECADE."""
    try:
        lo, hi, per_decade = text.split(',')
        return log_grid(float(lo), float(hi), int(per_decade))
    except ValueError as e:
        raise argparse.ArgumentTypeError('invalid time grid: {0}'.format(e))


def _common_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument('--config', help='key=value parameter file')
    common.add_argument('--n', type=int, help='dimension of the small end')
    common.add_argument('--m', type=int, help='dimension of the large end')
    common.add_argument('--seed', type=int, help='seed of every random stream')
    common.add_argument('--out', default='.', help='output directory')
    common.add_argument('--format', choices=('csv', 'json'), default='csv',
                        dest='fmt', help='artifact format')
    common.add_argument('--threads', type=int,
                        help='worker threads (overrides {0})'.format(
                            parallel.THREADS_VARIABLE))
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='more logging; repeat for debug output')
    return common


def _search_flags(parser):
    parser.add_argument('--grid-per-decade', type=int, default=24)
    parser.add_argument('--center-grid-per-decade', type=int, default=24)
    parser.add_argument('--refine-iters', type=int, default=60)
    parser.add_argument('--r-max', type=float,
                        help='largest radius (default 1e4 * |x|)')


def _evaluation_flags(parser, default_region='endM'):
    parser.add_argument('--region', type=Region.parse,
                        default=Region.parse(default_region))
    parser.add_argument('--s', type=_float_list, default=[10.0],
                        help='comma separated radial coordinates')
    parser.add_argument('--core', action='store_true',
                        help='also evaluate at the core')


def build_parser():
    common = _common_parser()
    parser = ArgumentParser(
        prog='endslab',
        description='Numerical laboratory for the two-ended manifold '
                    'R^n # R^m.')
    groups = parser.add_subparsers(dest='group', metavar='GROUP')
    groups.required = True

    geometry = groups.add_parser('geometry', help='ball volumes')
    actions = geometry.add_subparsers(dest='action', metavar='ACTION')
    actions.required = True
    volume = actions.add_parser('volume', parents=[common],
                                help='V(x, r) and its regime')
    _evaluation_flags(volume)
    volume.add_argument('--r', type=_float_list, default=[1.0])
    doubling = actions.add_parser('doubling', parents=[common],
                                  help='V(x, 2r) / V(x, r) scan')
    _evaluation_flags(doubling, 'endN')
    doubling.add_argument('--r', type=_float_list,
                          help='radii (default r = s)')

    maximal = groups.add_parser('maximal', help='Hardy-Littlewood maximal '
                                                'functions')
    actions = maximal.add_subparsers(dest='action', metavar='ACTION')
    actions.required = True
    evaluate = actions.add_parser('eval', parents=[common],
                                  help='maximal profile of a function')
    evaluate.add_argument('--f', default='chi2', help='function literal')
    evaluate.add_argument('--operator', choices=('centered', 'uncentered'),
                          default='uncentered')
    _evaluation_flags(evaluate)
    _search_flags(evaluate)
    counter = actions.add_parser('counterexample', parents=[common],
                                 help='M chi2 against M_c chi2')
    counter.add_argument('--s', type=_float_list,
                         default=[10.0, 20.0, 40.0, 80.0, 160.0])
    _search_flags(counter)
    decay = actions.add_parser('decay', parents=[common],
                               help='decay constant of M f')
    decay.add_argument('--f', default='shellN[2,4)', help='function literal')
    decay.add_argument('--end', type=Region.parse,
                       default=Region.parse('endM'))
    decay.add_argument('--exponent', default='m')
    decay.add_argument('--s', type=_float_list,
                       default=[4.0, 16.0, 64.0, 256.0, 1024.0, 4096.0])
    _search_flags(decay)

    heat = groups.add_parser('heat', help='model heat kernel')
    actions = heat.add_subparsers(dest='action', metavar='ACTION')
    actions.required = True
    kernel = actions.add_parser('kernel', parents=[common],
                                help='h_t(x, y) over a time grid')
    kernel.add_argument('--x', type=_point, default=_point('endM:10'))
    kernel.add_argument('--y', type=_point, default=_point('endN:10'))
    kernel.add_argument('--t-grid', type=_time_grid,
                        default=log_grid(1e-2, 1e6, 4))
    heat_max = actions.add_parser('maximal', parents=[common],
                                  help='heat maximal profile')
    heat_max.add_argument('--f', default='chi3', help='function literal')
    _evaluation_flags(heat_max)
    heat_max.add_argument('--points-per-decade', type=int, default=16)
    checks = actions.add_parser('inequalities', parents=[common],
                                help='empirical suprema of the estimates')
    checks.add_argument('--samples', type=int, default=10000)
    checks.add_argument('--poisson-samples', type=int, default=20)

    weaktype = groups.add_parser('weaktype', help='weak-type constants')
    actions = weaktype.add_subparsers(dest='action', metavar='ACTION')
    actions.required = True
    report = actions.add_parser('report', parents=[common],
                                help='family report')
    report.add_argument('--points-per-decade', type=int, default=4)
    report.add_argument('--s-max', type=float, default=1e3)

    oracle = groups.add_parser('oracle', help='Monte-Carlo cross checks')
    actions = oracle.add_subparsers(dest='action', metavar='ACTION')
    actions.required = True
    compare = actions.add_parser('compare', parents=[common],
                                 help='quadrature against Monte-Carlo')
    compare.add_argument('--trials', type=int, default=100)
    compare.add_argument('--samples', type=int, default=200000)
    compare.add_argument('--batch', type=int, default=20000)

    return parser


def _params(args):
    overrides = {'n': args.n, 'm': args.m, 'seed': args.seed}
    if args.config:
        return ModelParams.load(args.config, **overrides)
    return ModelParams(**overrides)


def _search_config(args):
    return SearchConfig(r_max=args.r_max,
                        grid_per_decade=args.grid_per_decade,
                        center_grid_per_decade=args.center_grid_per_decade,
                        refine_iters=args.refine_iters)


def _grid(args):
    grid = [RadialPoint(args.region, s) for s in args.s]
    if args.core:
        grid.append(RadialPoint.core())
    return grid


def _geometry_volume(model, args, manifest):
    rows = []
    for x in _grid(args):
        for r in args.r:
            regime, scaled = model.volume_regime_check(x, r)
            s = float('nan') if x.region is Region.CORE else x.s
            rows.append((str(x.region), s, r, model.ball_volume(Ball(x, r)),
                         regime, scaled))
    return pandas.DataFrame(rows, columns=VOLUME_COLUMNS)


def _geometry_doubling(model, args, manifest):
    centers = _grid(args)
    if args.r is None:
        radii = [1.0 if x.region is Region.CORE else x.s for x in centers]
        return model.doubling_scan(centers, radii, paired=True)
    return model.doubling_scan(centers, args.r)


def _maximal_eval(model, args, manifest):
    f = parse_function(args.f, model.params)
    cfg = _search_config(args)
    manifest.settings['search'] = cfg.as_dict()
    manifest.settings['function'] = f.name
    if args.operator == 'centered':
        operator, search = CENTERED, maximal_centered
    else:
        operator, search = UNCENTERED, maximal_uncentered
    grid = _grid(args)
    results = [search(model, f, x, cfg) for x in grid]
    return MaximalProfile(operator, grid, results).to_frame()


def _maximal_counterexample(model, args, manifest):
    cfg = _search_config(args)
    manifest.settings['search'] = cfg.as_dict()
    return counterexample_profile(model, args.s, cfg)


def _maximal_decay(model, args, manifest):
    f = parse_function(args.f, model.params)
    cfg = _search_config(args)
    manifest.settings['search'] = cfg.as_dict()
    exponent = args.exponent
    if exponent not in ('n', 'm'):
        try:
            exponent = float(exponent)
        except ValueError:
            raise InvalidConfig('Exponent must be n, m or a number')
    bound = decay_bound_check(model, f, args.end, exponent, args.s, cfg)
    manifest.settings['constant'] = bound.constant
    return pandas.DataFrame({'s': args.s, 'scaled_value': bound.values},
                            columns=DECAY_COLUMNS)


def _heat_kernel(model, args, manifest):
    x, y = args.x, args.y
    d = model.distance(model.embed(x), model.embed(y))
    rows = [(t, str(classify_regime(x, y, t)), d,
             kernel_eval(model, x, y, d, t)) for t in args.t_grid]
    return pandas.DataFrame(rows, columns=KERNEL_COLUMNS)


def _heat_maximal(model, args, manifest):
    f = parse_function(args.f, model.params)
    cfg = HeatConfig(points_per_decade=args.points_per_decade)
    manifest.settings['heat'] = cfg.as_dict()
    grid = _grid(args)
    results = [heat_maximal(model, f, x, cfg) for x in grid]
    return MaximalProfile(HEAT, grid, results).to_frame()


def _heat_inequalities(model, args, manifest):
    rows = inequality_checks(model, args.samples,
                             poisson_samples=args.poisson_samples)
    return rows


def _weaktype_report(model, args, manifest):
    manifest.settings['grid'] = {'points_per_decade': args.points_per_decade,
                                 's_max': args.s_max}
    frame = family_report(model.params, args.points_per_decade, args.s_max)
    runtime = float(frame['runtime'].sum())
    frame = frame[WEAKTYPE_CSV_COLUMNS]
    if args.fmt == 'csv':
        return frame
    return collections.OrderedDict([
        ('params', model.params.as_dict()),
        ('rows', frame.to_dict(orient='records')),
        ('meta', {'seed': model.params.seed,
                  'grids': manifest.settings['grid'],
                  'runtime': runtime}),
    ])


def _oracle_compare(model, args, manifest):
    cfg = McConfig(samples=args.samples, seed=model.params.seed,
                   batch=args.batch)
    manifest.settings['monte_carlo'] = cfg.as_dict()
    report = compare_engines(model, args.trials, cfg)
    manifest.settings['passed'] = report['passed']
    if args.fmt == 'csv':
        return pandas.DataFrame(report['rows'])
    return report


COMMANDS = {
    ('geometry', 'volume'): _geometry_volume,
    ('geometry', 'doubling'): _geometry_doubling,
    ('maximal', 'eval'): _maximal_eval,
    ('maximal', 'counterexample'): _maximal_counterexample,
    ('maximal', 'decay'): _maximal_decay,
    ('heat', 'kernel'): _heat_kernel,
    ('heat', 'maximal'): _heat_maximal,
    ('heat', 'inequalities'): _heat_inequalities,
    ('weaktype', 'report'): _weaktype_report,
    ('oracle', 'compare'): _oracle_compare,
}


def _write_json(path, data):
    with io.open(path, 'w', encoding='utf-8') as f:
        f.write(json.dumps(data, indent=2, default=_jsonable) + u'\n')


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


def _write_artifact(result, directory, stem, fmt):
    """Writes a DataFrame or JSON-able result; returns the path."""
    path = os.path.join(directory, '{0}.{1}'.format(stem, fmt))
    if isinstance(result, pandas.DataFrame):
        if fmt == 'csv':
            result.to_csv(path, index=False, float_format=FLOAT_FORMAT,
                          lineterminator='\n')
        else:
            _write_json(path, result.to_dict(orient='records'))
    elif fmt == 'csv':
        pandas.DataFrame(result).to_csv(path, index=False,
                                        float_format=FLOAT_FORMAT,
                                        lineterminator='\n')
    else:
        _write_json(path, result)
    return path


def _configure_logging(verbosity):
    level = logging.WARNING
    if verbosity == 1:
        level = logging.INFO
    elif verbosity > 1:
        level = logging.DEBUG
    logging.basicConfig(level=level,
                        format='%(asctime)s %(name)s %(levelname)s '
                               '%(message)s')


def run(argv):
    """Executes one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write('{0}\n'.format(e))
        return EXIT_INVALID

    _configure_logging(args.verbose)
    try:
        parallel.set_thread_count(args.threads)
        params = _params(args)
        model = Model(params)
        subcommand = '{0} {1}'.format(args.group, args.action)
        manifest = RunManifest(subcommand, params, argv)

        if not os.path.isdir(args.out):
            os.makedirs(args.out)
        result = COMMANDS[(args.group, args.action)](model, args, manifest)
        stem = '{0}_{1}'.format(args.group, args.action)
        manifest.artifacts.append(
            _write_artifact(result, args.out, stem, args.fmt))
        manifest.write(args.out)

    except ConvergenceError as e:
        logger.error('Numerical procedure did not converge: %s', e)
        return EXIT_CONVERGENCE
    except (InvalidConfig, DivergenceError, ValueError) as e:
        logger.error('%s', e)
        sys.stderr.write('error: {0}\n'.format(e))
        return EXIT_INVALID
    except (IOError, OSError) as e:
        sys.stderr.write('error: {0}\n'.format(e))
        return EXIT_INVALID
    finally:
        parallel.set_thread_count(None)

    logger.info('Wrote %s', ', '.join(manifest.artifacts))
    return EXIT_OK


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
