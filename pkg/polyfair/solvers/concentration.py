"""
Empirical concentration of the capacity of random assignments around
the mean rank, for the random-cluster model of the scenario or swept
over solver.ns with degrees ceil(degree_factor log n) and
ceil(server_factor n) servers.

Artifacts: concentration.csv.
"""

from polyfair import random_cluster
from polyfair.helpers import format_table
from polyfair.scenario import field_error


def _chernoff(spec, epsilon):
    """
    Lower tail bound for the set made of a single class of part 1, the
    least concentrated profile.
    """
    a = (1,) + (0,) * (spec.K - 1)
    p = random_cluster.placement_probability(spec.m, spec.degrees, a)
    return random_cluster.chernoff_lower_tail(spec.m, p, epsilon)


def run(params, model):
    spec = model.get('spec')
    if spec is None and not params['ns']:
        raise field_error(params, 'solver.ns',
                          "concentration needs a random-cluster model or ns")
    if params['trials'] < 1:
        raise field_error(params, 'solver.trials',
                          "at least one trial is required")
    K = len(params['sizes']) if 'sizes' in params else 2

    reports = []
    for epsilon in params['epsilon']:
        if not 0 < epsilon < 1:
            raise field_error(params, 'solver.epsilon',
                              "epsilon must lie in (0, 1), got %g" % epsilon)
        if params['ns']:
            reports += random_cluster.concentration_sweep(
                params['ns'], epsilon, params['trials'], K=K,
                c=params['degree_factor'], b=params['server_factor'],
                subsets_per_profile=params['subsets_per_profile'],
                seed=params['seed'], threads=params['threads'])
        else:
            reports.append(random_cluster.concentration_experiment(
                spec, epsilon, params['trials'],
                subsets_per_profile=params['subsets_per_profile'],
                seed=params['seed'], threads=params['threads']))

    rows = []
    for report in reports:
        s = report.spec
        rows.append([report.epsilon, s.sizes[0], s.m, s.degrees[0],
                     report.probability, float(report.worst_rel_dev.max()),
                     _chernoff(s, report.epsilon)])
    lines = ["concentration: %d trials per run" % params['trials']]
    lines += format_table(['epsilon', 'n', 'm', 'd', 'in_band',
                           'worst_rel_dev', 'chernoff_one_class'], rows)
    return lines, {'concentration.csv':
                   random_cluster.concentration_csv(reports)}
