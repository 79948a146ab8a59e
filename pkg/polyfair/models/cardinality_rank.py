"""
Poly-symmetric system given directly by its cardinality rank h on the
grid of part cardinalities. Parts are contiguous blocks of queues.

  [model]
  kind = cardinality-rank
  form = access-tree      # rates, shared, sizes
  form = grid-cluster     # d1, d2
  form = table            # sizes, h (one 'a1,a2: value' line per cell)
  form = mean-random      # servers, sizes, degrees, groups (optional)
"""

import numpy as np

from polyfair import rank, polysym, random_cluster
from polyfair.errors import ParameterError
from polyfair.models import build_workloads, describe_common
from polyfair.scenario import field_error

solvers = ['exact', 'polysym', 'bounds', 'simulate']

FORMS = ('access-tree', 'grid-cluster', 'table', 'mean-random')

# ranks are expanded to all the subsets up to this many queues
MAX_EXPAND_N = 16


def _require(params, form, fields):
    missing = [f for f in fields if f not in params]
    if missing:
        raise field_error(params, 'model.form',
                          "form %s needs the fields %s"
                          % (form, ", ".join(missing)))


def _parameter_error(params, e):
    return field_error(params, 'model.' + e.context['parameter'], e.message)


def _table(params):
    sizes = tuple(params['sizes'])
    shape = tuple(n + 1 for n in sizes)
    h = np.full(shape, np.nan)
    for a, value in params['h']:
        if len(a) != len(sizes) or any(not 0 <= x <= n
                                       for x, n in zip(a, sizes)):
            raise field_error(params, 'model.h',
                              "cell %s is outside the grid %s"
                              % (list(a), list(shape)))
        h[a] = value
    if np.isnan(h.flat[0]):
        h.flat[0] = 0.0
    missing = np.argwhere(np.isnan(h))
    if missing.size:
        raise field_error(params, 'model.h', "no value for cell %s"
                          % list(int(x) for x in missing[0]))
    return rank.CardinalityRank(sizes, h, name="table")


def build(params):
    form = params.get('form', 'table')
    model = {'kind': 'cardinality-rank', 'form': form}
    if form == 'access-tree':
        _require(params, form, ['rates', 'shared', 'sizes'])
        if len(params['rates']) != len(params['sizes']):
            raise field_error(params, 'model.rates',
                              "one access rate per part is required")
        h = polysym.access_tree_rank(params['rates'], params['shared'],
                                     params['sizes'])
        model.update(rates=params['rates'], shared=params['shared'])
    elif form == 'grid-cluster':
        _require(params, form, ['d1', 'd2'])
        try:
            h = polysym.grid_cluster_rank(params['d1'], params['d2'])
        except ParameterError as e:
            raise _parameter_error(params, e)
    elif form == 'table':
        _require(params, form, ['sizes', 'h'])
        h = _table(params)
    elif form == 'mean-random':
        _require(params, form, ['servers', 'sizes', 'degrees'])
        try:
            spec = random_cluster.RandomAssignmentSpec(
                params['servers'], params['sizes'], params['degrees'],
                groups=params.get('groups'), seed=params.get('seed', 0))
        except ParameterError as e:
            raise _parameter_error(params, e)
        h = random_cluster.mean_cardinality_rank(spec)
        model['spec'] = spec
    else:
        raise field_error(params, 'model.form',
                          "unknown form %r (use one of %s)"
                          % (form, ", ".join(FORMS)))

    n = sum(h.sizes)
    partition = h.partition()
    r = h.expand() if n <= MAX_EXPAND_N else None
    workload, grid = build_workloads(params, n, partition)
    model.update(n=n, h=h, rank=r, partition=partition, workload=workload,
                 grid_workload=grid)
    return model


def describe(model):
    lines = describe_common(model)
    lines.insert(1, "form: %s, grid %s" % (
        model['form'], "x".join(str(n + 1) for n in model['h'].sizes)))
    return lines
