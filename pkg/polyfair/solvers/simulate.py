"""
Event-driven simulation under balanced fairness, with exponential or
hyperexponential job sizes. The exact mean queue lengths are reported
alongside the estimates when the system is small enough to be solved.

Artifacts: simulation.csv.
"""

from polyfair import exact, oracle
from polyfair.errors import InstabilityError
from polyfair.helpers import format_table, log_stderr
from polyfair.scenario import field_error
from polyfair.solvers import require

DISTRIBUTIONS = ('exponential', 'hyperexponential')


def run(params, model):
    require(params, model, ['rank', 'workload'])
    r, w = model['rank'], model['workload']
    if params['distribution'] not in DISTRIBUTIONS:
        raise field_error(params, 'solver.distribution',
                          "unknown distribution %r (use one of %s)"
                          % (params['distribution'], ", ".join(DISTRIBUTIONS)))
    if not 0 <= params['warmup'] < 1:
        raise field_error(params, 'solver.warmup',
                          "warmup must be a fraction in [0, 1)")

    est = oracle.simulate(r, w, distribution=params['distribution'],
                          events=params['events'], warmup=params['warmup'],
                          batches=params['batches'], seed=params['seed'],
                          cap=params['cap'])

    reference = None
    if r.n <= exact.MAX_EXACT_N:
        try:
            reference = exact.solve_exact(r, w,
                                          threads=params['threads']).L_total
        except InstabilityError:
            log_stderr("simulate: no exact reference, workload is unstable")

    lines = ["simulate: %s job sizes, %d events, simulated time %.6g"
             % (params['distribution'], est.events, est.horizon)]
    if est.diverged:
        lines.append("simulation stopped: a queue exceeded %d jobs"
                     % params['cap'])
    header = ['queue', 'L', 'stderr']
    if reference is not None:
        header.append('exact_L')
    rows = []
    for i in range(r.n):
        row = [i + 1, float(est.mean[i]), float(est.stderr[i])]
        if reference is not None:
            row.append(float(reference[i]))
        rows.append(row)
    lines += format_table(header, rows)
    return lines, {'simulation.csv': oracle.estimate_csv(est, reference)}
