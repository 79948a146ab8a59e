"""
Exact solution on all the subsets of queues.

Artifacts: subsets.csv (probability of every active set) and queues.csv
(mean queue length, delay, activity and throughput of every queue).
"""

from polyfair import exact
from polyfair.helpers import format_table
from polyfair.solvers import require


def run(params, model):
    require(params, model, ['rank', 'workload'])
    r, w = model['rank'], model['workload']
    s = exact.solve_exact(r, w, threads=params['threads'])
    exact.log_solution(s, w)
    m = exact.metrics(s, w)

    lines = ["exact: pi(empty) = %.6g" % s.pi0]
    rows = [[i + 1, float(w.rho[i]), float(m.L[i]), float(m.delay[i]),
             float(m.active[i]), float(m.throughput[i])]
            for i in range(s.n)]
    lines += format_table(
        ['queue', 'rho', 'L', 'delay', 'active', 'throughput'], rows)
    lines.append("total L = %.6g" % float(m.L.sum()))

    artifacts = {
        'subsets.csv': exact.subset_csv(s),
        'queues.csv': exact.queue_csv(s, w),
    }
    return lines, artifacts
