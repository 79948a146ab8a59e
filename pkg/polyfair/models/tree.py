"""
Tree data network: a laminar family of links over the users.

  [model]
  kind = tree
  n = 3
  links =
      1: 1
      2: 1
      3: 1
      1,2: 1.5
      1,2,3: 2
"""

from polyfair import rank
from polyfair.errors import PolymatroidError
from polyfair.helpers import format_subset
from polyfair.models import build_workloads, describe_common
from polyfair.scenario import field_error

solvers = ['exact', 'polysym', 'bounds', 'simulate']


def build(params):
    if 'n' not in params or 'links' not in params:
        raise field_error(params, 'model.kind',
                          "tree needs the fields n and links")
    n = params['n']
    for users, _ in params['links']:
        if not users or any(i >= n for i in users):
            raise field_error(params, 'model.links',
                              "link %s is empty or names users outside 1..%d"
                              % ([i + 1 for i in users], n))
    t = rank.TreeTopology(n, params['links'])
    r = rank.tree_rank(t)

    partition = None
    if 'partition' in params:
        try:
            partition = rank.Partition(params['partition'], n)
        except PolymatroidError as e:
            raise field_error(params, 'model.partition', e.message)
    elif params.get('solver') == 'polysym':
        partition = rank.exchangeability_partition(r)
    h = None
    if partition is not None:
        h = rank.tree_cardinality_rank(t, partition)
    workload, grid = build_workloads(params, n, partition)
    return {'kind': 'tree', 'n': n, 'tree': t, 'rank': r,
            'partition': partition, 'h': h, 'workload': workload,
            'grid_workload': grid}


def describe(model):
    t = model['tree']
    lines = describe_common(model)
    lines.append("links: %s" % ", ".join(
        "%s:%g" % (format_subset(mask), c) for mask, c in t.links))
    if t.inserted_root:
        lines.append("root link inserted with capacity %g"
                     % dict(t.declared)[(1 << t.n) - 1])
    if t.pruned:
        lines.append("pruned links: %s"
                     % ", ".join(format_subset(mask) for mask in t.pruned))
    return lines
