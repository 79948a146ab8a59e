"""
Rank function given subset by subset:

  [model]
  kind = explicit-rank
  n = 2
  rank =
      1: 2
      2: 2
      1,2: 3
"""

from polyfair import rank
from polyfair.models import build_workloads, describe_common
from polyfair.scenario import field_error
from polyfair.errors import PolymatroidError

solvers = ['exact', 'polysym', 'bounds', 'simulate']


def find_partition(params, r):
    """
    The partition of the scenario, or the exchangeability classes of r
    when the polysym solver needs one and none is given.
    """
    if 'partition' in params:
        try:
            return rank.Partition(params['partition'], r.n)
        except PolymatroidError as e:
            raise field_error(params, 'model.partition', e.message)
    if params.get('solver') == 'polysym':
        return rank.exchangeability_partition(r)
    return None


def build(params):
    if 'n' not in params or 'rank' not in params:
        raise field_error(params, 'model.kind',
                          "explicit-rank needs the fields n and rank")
    n = params['n']
    values = {}
    for subset, value in params['rank']:
        if any(i >= n for i in subset):
            raise field_error(params, 'model.rank',
                              "subset %s names a queue outside 1..%d"
                              % ([i + 1 for i in subset], n))
        values[frozenset(subset)] = value
    try:
        r = rank.RankFunction.from_sets(n, values, name="explicit")
    except PolymatroidError as e:
        raise field_error(params, 'model.rank', e.message)
    partition = find_partition(params, r)
    h = None
    if partition is not None:
        h = rank.cardinality_rank_from(r, partition)
    workload, grid = build_workloads(params, n, partition)
    return {'kind': 'explicit-rank', 'n': n, 'rank': r, 'partition': partition,
            'h': h, 'workload': workload, 'grid_workload': grid}


def describe(model):
    return describe_common(model)
