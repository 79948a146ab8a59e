# This little bit of magic fills the __all__ list
# with every model kind, and means that
# polyfair.import_model() can find any module placed here
import pkgutil

import numpy as np

__all__ = []
for p in pkgutil.iter_modules(__path__):
    if not p[1].startswith('_'):
        __all__.append(p[1])


def build_workloads(params, n, partition=None):
    """
    The per-queue Workload and, when the traffic is the same for all the
    queues of each part of partition, the per-part GridWorkload of a
    scenario. The [workload] lists hold either one value per queue or
    one value per part. Returns (None, None) without a [workload].
    """
    from polyfair.exact import Workload
    from polyfair.polysym import GridWorkload
    from polyfair.scenario import field_error

    if 'intensity' in params:
        field, values = 'workload.intensity', params['intensity']
    elif 'arrival' in params:
        field, values = 'workload.arrival', params['arrival']
    else:
        return None, None
    values = np.array(values, dtype=float)
    size = np.array(params.get('size', [1.0]), dtype=float)
    K = len(partition.parts) if partition is not None else None

    def per_queue(v, name):
        if len(v) == n:
            return v
        if len(v) == 1:
            return np.repeat(v, n)
        if K is not None and len(v) == K:
            out = np.zeros(n)
            for k, part in enumerate(partition.parts):
                out[list(part)] = v[k]
            return out
        raise field_error(
            params, name, "expected %d values (one per queue)%s, got %d"
            % (n, " or %d (one per part)" % K if K else "", len(v)))

    values = per_queue(values, field)
    size = per_queue(size, 'workload.size')
    if np.any(values <= 0) or np.any(size <= 0):
        raise field_error(params, field, "rates and sizes must be positive")
    if field == 'workload.intensity':
        workload = Workload(values / size, size)
    else:
        workload = Workload(values, size)

    grid = None
    if partition is not None:
        intensity, arrival = [], []
        for part in partition.parts:
            part = list(part)
            if (np.ptp(workload.rho[part]) > 0
                    or np.ptp(workload.arrival[part]) > 0):
                break
            intensity.append(workload.rho[part[0]])
            arrival.append(workload.arrival[part[0]])
        else:
            grid = GridWorkload(partition.sizes, intensity, arrival)
    return workload, grid


def describe_common(model):
    lines = ["model: %s, n=%d" % (model['kind'], model['n'])]
    p = model.get('partition')
    if p is not None:
        lines.append("partition: %r, K=%d, sizes=%s"
                     % (p, len(p.parts), list(p.sizes)))
    w = model.get('workload')
    if w is not None and w.n <= 16:
        lines.append("intensity: %s"
                     % ", ".join("%g" % x for x in w.rho))
    g = model.get('grid_workload')
    if g is not None:
        lines.append("part intensity: %s"
                     % ", ".join("%g" % x for x in g.intensity))
    return lines
