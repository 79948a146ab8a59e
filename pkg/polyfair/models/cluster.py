"""
Computer cluster given by its assignment graph.

  [model]
  kind = cluster
  servers = 3
  server_capacity = 1
  assign = 1,2; 2,3
"""

from polyfair import rank
from polyfair.errors import PolymatroidError
from polyfair.models import build_workloads, describe_common
from polyfair.models.explicit_rank import find_partition
from polyfair.scenario import field_error

solvers = ['exact', 'polysym', 'bounds', 'simulate']


def build(params):
    if 'servers' not in params or 'assign' not in params:
        raise field_error(params, 'model.kind',
                          "cluster needs the fields servers and assign")
    m = params['servers']
    capacity = params.get('server_capacity', [1.0])
    if len(capacity) == 1:
        capacity = capacity * m
    try:
        c = rank.ClusterAssignment(len(params['assign']), m, capacity,
                                   params['assign'])
    except PolymatroidError as e:
        raise field_error(params, 'model.assign', e.message)
    r = rank.cluster_rank(c)
    partition = find_partition(params, r)
    h = None
    if partition is not None:
        h = rank.cardinality_rank_from(r, partition)
    workload, grid = build_workloads(params, c.n, partition)
    return {'kind': 'cluster', 'n': c.n, 'cluster': c, 'rank': r,
            'partition': partition, 'h': h, 'workload': workload,
            'grid_workload': grid}


def describe(model):
    c = model['cluster']
    lines = describe_common(model)
    lines.append("servers: %d, assignment: %s" % (c.m, "; ".join(
        ",".join(str(s + 1) for s in sorted(servers))
        for servers in c.assign)))
    return lines
