"""
Bounds for capacity sets known within (1 +- epsilon), one run per
epsilon of the scenario.

  random-cluster model        delay bounds over the alpha grid,
                              curve.csv (and curve.svg)
  access-tree cardinality     user throughput bounds,
  rank                        throughput_bounds.csv
  other poly-symmetric models part queue length bounds, L_bounds.csv
  ranks on subsets            queue length bounds, L_bounds.csv, and a
                              random intermediate rank checked against
                              them
"""

import numpy as np

from polyfair import bounds, exact, plot
from polyfair.errors import PolyfairError, PolymatroidError
from polyfair.helpers import format_table, log_stderr
from polyfair.scenario import field_error
from polyfair.solvers import require

# the intermediate rank is tabulated and checked up to this many queues
MAX_INTERMEDIATE_N = 12


def _alphas(params, epsilon):
    if params['alphas']:
        return np.array(params['alphas'], dtype=float)
    return bounds.default_alpha_grid(epsilon, params['alpha_points'])


def _random_cluster(params, model):
    require(params, model, ['spec'])
    spec = model['spec']
    if len(set(spec.sizes)) != 1:
        raise field_error(params, 'model.sizes',
                          "random-cluster bounds need parts of equal size")
    results = []
    for epsilon in params['epsilon']:
        try:
            results += bounds.random_cluster_bounds(
                spec.m, spec.sizes[0], spec.degrees, epsilon,
                alphas=_alphas(params, epsilon), groups=spec.groups,
                threads=params['threads'])
        except PolyfairError:
            raise
        except ValueError as e:
            raise field_error(params, 'solver.alphas', str(e))

    lines = ["bounds: delay of random-cluster classes, %d alpha values"
             % len(results)]
    rows = []
    for epsilon in params['epsilon']:
        curve = [res for res in results if res.epsilon == epsilon]
        for res in (curve[0], curve[-1]):
            low, high = res.rates()
            for k in range(len(low)):
                rows.append([epsilon, res.alpha, k + 1, float(low[k]),
                             float(high[k])])
    lines += format_table(
        ['epsilon', 'alpha', 'part', 'lower_rate', 'upper_rate'], rows)

    artifacts = {'curve.csv': bounds.curve_csv(results)}
    if params['format'] == 'csv+svg':
        series = []
        for epsilon in params['epsilon']:
            curve = [res for res in results if res.epsilon == epsilon]
            alphas = [res.alpha for res in curve]
            for k in range(len(spec.degrees)):
                low = [float(res.rates()[0][k]) for res in curve]
                high = [float(res.rates()[1][k]) for res in curve]
                label = "e=%g part %d" % (epsilon, k + 1)
                series.append((label + " lower", alphas, low, False))
                series.append((label + " upper", alphas, high, True))
        fig = plot.line_chart(
            series, title="Service rate bounds, m=%d n=%d degrees %s"
            % (spec.m, spec.sizes[0], ",".join(map(str, spec.degrees))),
            x_label="alpha", y_label="mean service rate per job",
            log_y=True)
        artifacts['curve.svg'] = plot.svg_text(fig)
    return lines, artifacts


def _access_tree(params, model):
    require(params, model, ['grid_workload'])
    h, w = model['h'], model['grid_workload']
    results = [bounds.tree_access_bounds(model['rates'], model['shared'],
                                         h.sizes, epsilon, w)
               for epsilon in params['epsilon']]
    rows = []
    for res in results:
        for k in range(len(res.lower)):
            rows.append([res.epsilon, k + 1, float(res.lower[k]),
                         float(res.upper[k])])
    lines = ["bounds: user throughput of each part"]
    lines += format_table(['epsilon', 'part', 'lower', 'upper'], rows)
    return lines, {'throughput_bounds.csv':
                   bounds.bounds_csv(results, label='part')}


def _intermediate(params, r, w, results):
    """
    Solves a random rank of each family in the widest epsilon band and
    checks its queue lengths against the bounds of that band.
    """
    res = max(results, key=lambda x: x.epsilon)
    rng = np.random.default_rng(params['seed'])
    lines = []
    for family in bounds.INTERMEDIATE_FAMILIES:
        try:
            nu, rejected = bounds.random_intermediate_rank(
                r, res.epsilon, rng, family=family,
                components=params['components'],
                attempts=params['attempts'])
        except PolymatroidError as e:
            log_stderr("bounds: %s" % e.message)
            lines.append("%s intermediate rank (epsilon %g): none in %d draws"
                         % (family, res.epsilon, params['attempts']))
            continue
        L = exact.solve_exact(nu, w, threads=params['threads']).L_total
        inside = bool(np.all(L >= res.lower * (1 - 1e-9))
                      and np.all(L <= res.upper * (1 + 1e-9)))
        log_stderr("bounds: %s intermediate rank after %d rejections"
                   % (family, rejected))
        lines.append("%s intermediate rank (epsilon %g, %d rejected): "
                     "L = %s, %s"
                     % (family, res.epsilon, rejected,
                        ", ".join("%.6g" % x for x in L),
                        "inside the bounds" if inside
                        else "OUTSIDE the bounds"))
    return lines


def _sandwich(params, model):
    if model.get('rank') is None or model['kind'] == 'cardinality-rank':
        require(params, model, ['h', 'grid_workload'])
        reference, w, label = model['h'], model['grid_workload'], 'part'
    else:
        require(params, model, ['workload'])
        reference, w, label = model['rank'], model['workload'], 'queue'
    results = [bounds.sandwich_L(reference, epsilon, w,
                                 threads=params['threads'])
               for epsilon in params['epsilon']]
    rows = []
    for res in results:
        for i in range(len(res.lower)):
            rows.append([res.epsilon, i + 1, float(res.lower[i]),
                         float(res.upper[i])])
    lines = ["bounds: mean number of jobs of each %s" % label]
    lines += format_table(['epsilon', label, 'lower', 'upper'], rows)
    if label == 'queue' and reference.n <= MAX_INTERMEDIATE_N:
        lines += _intermediate(params, reference, w, results)
    return lines, {'L_bounds.csv': bounds.bounds_csv(results, label=label)}


def run(params, model):
    for epsilon in params['epsilon']:
        if not 0 <= epsilon < 1:
            raise field_error(params, 'solver.epsilon',
                              "epsilon must lie in [0, 1), got %g" % epsilon)
    if model['kind'] == 'random-cluster':
        return _random_cluster(params, model)
    if model.get('form') == 'access-tree':
        return _access_tree(params, model)
    return _sandwich(params, model)
