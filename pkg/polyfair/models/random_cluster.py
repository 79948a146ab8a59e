"""
Computer cluster with a random assignment: every class of part k is
served by d_k servers drawn uniformly at random.

  [model]
  kind = random-cluster
  servers = 10000
  sizes = 1000, 1000
  degrees = 20, 40
  groups =                  # optional, (count: capacity) lines
      10000: 1
"""

from polyfair import random_cluster
from polyfair.errors import ParameterError
from polyfair.models import describe_common
from polyfair.scenario import field_error

solvers = ['bounds', 'concentration']


def build(params):
    missing = [f for f in ('servers', 'sizes', 'degrees') if f not in params]
    if missing and not (params.get('solver') == 'concentration'
                        and params.get('ns')):
        raise field_error(params, 'model.kind',
                          "random-cluster needs the fields %s"
                          % ", ".join(missing))
    spec = None
    if not missing:
        try:
            spec = random_cluster.RandomAssignmentSpec(
                params['servers'], params['sizes'], params['degrees'],
                groups=params.get('groups'), seed=params.get('seed', 0))
        except ParameterError as e:
            raise field_error(params, 'model.' + e.context['parameter'],
                              e.message)
    return {'kind': 'random-cluster', 'n': spec.n if spec else 0,
            'spec': spec, 'partition': None, 'rank': None, 'h': None,
            'workload': None, 'grid_workload': None}


def describe(model):
    spec = model['spec']
    if spec is None:
        return ["model: random-cluster, swept over the number of classes"]
    lines = describe_common(model)
    lines.append("servers: %d (mean capacity %g), sizes %s, degrees %s"
                 % (spec.m, spec.xi, list(spec.sizes), list(spec.degrees)))
    return lines
