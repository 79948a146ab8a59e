"""
Solution on the grid of part cardinalities of a poly-symmetric system.

Artifacts: parts.csv (mean queue length and delay of each part, plus
the user throughput for access trees) and grid.csv (probability and
conditional queue lengths of every cell) when the grid is small enough.
Systems of at most 14 queues are also solved on all their subsets and
the largest deviation is reported.
"""

import numpy as np

from polyfair import polysym
from polyfair.helpers import format_table, log_stderr
from polyfair.solvers import require


def run(params, model):
    require(params, model, ['h', 'grid_workload'])
    h, w = model['h'], model['grid_workload']
    g = polysym.solve_polysym(h, w)

    throughput = None
    if model.get('form') == 'access-tree':
        throughput = polysym.access_tree_throughput(g, w)
    delay = polysym.mean_delay(g, w)

    lines = ["polysym: grid %s, pi(empty) = %.6g"
             % ("x".join(str(n + 1) for n in h.sizes), g.pi0)]
    header = ['part', 'size', 'intensity', 'L', 'delay']
    if throughput is not None:
        header.append('throughput')
    rows = []
    for k in range(g.K):
        row = [k + 1, h.sizes[k], float(w.intensity[k]), float(g.L_part[k]),
               float(delay[k])]
        if throughput is not None:
            row.append(float(throughput[k]))
        rows.append(row)
    lines += format_table(header, rows)

    if sum(h.sizes) <= polysym.MAX_EXPAND_N:
        check = polysym.expand_and_check(h, w, threads=params['threads'])
        lines.append("subset solution agrees within %.3g (relative) on "
                     "cell probabilities, %.3g on queue lengths"
                     % (check.rel_pi, check.rel_products))

    artifacts = {'parts.csv': polysym.part_csv(g, w, throughput)}
    cells = int(np.prod(h.shape))
    if cells <= params['grid_csv_max_cells']:
        artifacts['grid.csv'] = polysym.grid_csv(g)
    else:
        log_stderr("polysym: grid.csv skipped (%d cells > %d)"
                   % (cells, params['grid_csv_max_cells']))
    return lines, artifacts
