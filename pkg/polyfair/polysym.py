#
# Evaluation of poly-symmetric systems on the grid of part cardinalities.
#
# A grid cell a = (a_1..a_K) stands for all the active sets with a_k
# active queues in part k. Cells are processed shell by shell (by total
# a_1 + .. + a_K), each shell depending only on the previous one.
#

import math
from collections import namedtuple

import numpy as np
from scipy.special import gammaln, logsumexp

from polyfair import helpers
from polyfair.errors import (SizeGuardError, InstabilityError,
                             NumericRangeError, ConsistencyError,
                             ParameterError)
from polyfair.exact import Workload, solve_exact
from polyfair.helpers import format_profile, log_stderr
from polyfair.rank import CardinalityRank, Partition

MAX_EXPAND_N = 14

# shells whose largest unnormalized value leaves [1/RESCALE, RESCALE]
# are rescaled
RESCALE = 1e200

BOUNDARY_MARGIN = 1e-9


class GridWorkload(object):
    """
    Traffic of a poly-symmetric system: every queue of part k has
    traffic intensity intensity[k] and arrival rate arrival[k] (unit mean
    job size when arrival is omitted).
    """

    def __init__(self, sizes, intensity, arrival=None):
        self.sizes = tuple(int(n) for n in sizes)
        self.intensity = np.array(intensity, dtype=float)
        if arrival is None:
            arrival = self.intensity
        self.arrival = np.array(arrival, dtype=float)
        if (self.intensity.shape != (len(self.sizes),)
                or self.arrival.shape != self.intensity.shape):
            raise ValueError("one intensity and one arrival rate per part "
                             "are required")
        if not (np.all(self.intensity > 0) and np.all(self.arrival > 0)):
            raise ValueError("intensities and arrival rates must be positive")
        self.size = self.intensity / self.arrival
        for a in (self.intensity, self.arrival, self.size):
            a.setflags(write=False)

    @property
    def K(self):
        return len(self.sizes)

    def expand(self):
        """
        Per-queue workload, part k being a contiguous block of queues.
        """
        arrival = np.repeat(self.arrival, self.sizes)
        size = np.repeat(self.size, self.sizes)
        return Workload(arrival, size)

    def __repr__(self):
        return "GridWorkload(sizes=%s, intensity=%s)" % (
            self.sizes, list(self.intensity))


StabilityMargin = namedtuple('StabilityMargin', ['margin', 'profile', 'stable'])


def _loads(h, w):
    layout = helpers.grid_layout(h.shape)
    return w.intensity @ layout.coords


def grid_stability_margin(h, w):
    """
    Smallest slack h(a) - sum_k a_k intensity_k over the nonzero cells
    and the cell attaining it.
    """
    if h.sizes != w.sizes:
        raise ValueError("rank sizes %s do not match workload sizes %s"
                         % (h.sizes, w.sizes))
    slack = h.h.ravel() - _loads(h, w)
    slack[0] = np.inf
    argmin = len(slack) - 1 - int(np.argmin(slack[::-1]))
    profile = tuple(int(x) for x in np.unravel_index(argmin, h.shape))
    margin = float(slack[argmin])
    return StabilityMargin(margin, profile, margin > 0)


class GridSolution(object):
    """
    Output of solve_polysym. log_pi[a] is the log probability of cell a
    (summed over all its active sets), products[k][a] = pi(a) L_k(a)
    where L_k(a) counts the jobs of the whole part k.
    """

    def __init__(self, sizes, log_pi, products, log_pi0, L_part,
                 renormalizations):
        self.sizes = sizes
        self.log_pi = log_pi
        self.pi = np.exp(log_pi)
        self.products = products
        self.log_pi0 = log_pi0
        self.L_part = L_part
        self.renormalizations = renormalizations
        for a in (self.log_pi, self.pi, self.products, self.L_part):
            a.setflags(write=False)

    @property
    def K(self):
        return len(self.sizes)

    @property
    def pi0(self):
        return math.exp(self.log_pi0)

    def L(self, k, a):
        a = tuple(a)
        if a[k] == 0:
            return 0.0
        if self.pi[a] == 0:
            # underflowed cell
            return float('nan')
        return float(self.products[k][a] / self.pi[a])


def solve_polysym(h, w, renormalize=RESCALE):
    """
    Stationary probabilities of the grid cells and part mean queue
    lengths, by the recursions

      pi(a) = sum_k (n_k - a_k + 1) r_k pi(a - e_k) / (h(a) - a.r)

      pi(a) L_k(a) = (a_k r_k pi(a) + (n_k - a_k + 1) r_k pi(a - e_k)
                      + sum_l (n_l - a_l + 1) r_l pi(a - e_l) L_k(a - e_l))
                     / (h(a) - a.r)

    with r the per-part intensities. Each shell is rescaled to keep its
    largest value within renormalize (None turns rescaling off); the
    scale factors are kept in log form and removed at normalization.
    """
    if h.sizes != w.sizes:
        raise ValueError("rank sizes %s do not match workload sizes %s"
                         % (h.sizes, w.sizes))
    K = h.K
    layout = helpers.grid_layout(h.shape)
    coords = layout.coords
    rho = w.intensity
    denom = h.h.ravel() - rho @ coords

    check = grid_stability_margin(h, w)
    if not check.stable:
        raise InstabilityError(
            "workload is not inside the capacity set: margin %g at %s"
            % (check.margin, format_profile(check.profile)),
            profile=list(check.profile), margin=check.margin)
    top = float(h.h.ravel()[-1])
    if check.margin < BOUNDARY_MARGIN * top:
        raise NumericRangeError(
            "workload is too close to the boundary: margin %g at %s"
            % (check.margin, format_profile(check.profile)),
            profile=list(check.profile), margin=check.margin)

    cells = coords.shape[1]
    pi = np.zeros(cells)
    products = np.zeros((K, cells))
    shell_log = np.zeros(len(layout.shells))
    pi[0] = 1.0
    sizes = np.array(h.sizes)
    rescaled = 0

    for s in range(1, len(layout.shells)):
        shell = layout.shells[s]
        a = coords[:, shell]
        weight = (sizes[:, None] - a + 1) * rho[:, None]
        prev_pi = np.zeros((K, len(shell)))
        prev_prod = np.zeros((K, K, len(shell)))
        for k in range(K):
            on = a[k] > 0
            below = shell[on] - layout.strides[k]
            prev_pi[k, on] = pi[below]
            prev_prod[:, k, on] = products[:, below]
        raw = (weight * prev_pi).sum(axis=0) / denom[shell]

        factor = 1.0
        if renormalize is not None:
            peak = raw.max()
            if peak > renormalize or 0 < peak < 1.0 / renormalize:
                factor = 1.0 / peak
                rescaled += 1
        elif not np.all(np.isfinite(raw)):
            raise NumericRangeError(
                "unnormalized probabilities overflow at total %d" % s,
                total=s)
        pi[shell] = raw * factor
        shell_log[s] = shell_log[s - 1] - math.log(factor)

        for k in range(K):
            carried = (weight[k] * prev_pi[k]
                       + (weight * prev_prod[k]).sum(axis=0))
            products[k, shell] = (a[k] * rho[k] * pi[shell]
                                  + factor * carried) / denom[shell]

    if rescaled:
        log_stderr("polysym: %d of %d shells rescaled"
                   % (rescaled, len(layout.shells) - 1))
    cell_log = np.repeat(shell_log, [len(sh) for sh in layout.shells])
    order = np.concatenate(layout.shells)
    log_scale = np.empty(cells)
    log_scale[order] = cell_log
    with np.errstate(divide='ignore'):
        log_unnorm = np.log(pi) + log_scale
    log_Z = float(logsumexp(log_unnorm))
    log_pi = (log_unnorm - log_Z).reshape(h.shape)
    normalized = products * np.exp(log_scale - log_Z)
    L_part = normalized.sum(axis=1)
    return GridSolution(h.sizes, log_pi, normalized.reshape((K,) + h.shape),
                        -log_Z, L_part, rescaled)


def aggregate_by_profile(s, p):
    """
    Sums a SetSolution over the active sets of each profile: returns the
    cell probabilities and the products pi(a) L_k(a) for every part.
    """
    shape = tuple(n + 1 for n in p.sizes)
    masks = np.arange(1 << s.n, dtype=np.int64)
    counts = helpers.popcounts(s.n)
    flat = np.zeros(1 << s.n, dtype=np.int64)
    layout = helpers.grid_layout(shape)
    for k, pm in enumerate(p.part_masks):
        flat += counts[masks & pm] * layout.strides[k]
    cells = int(np.prod(shape))
    pi = np.bincount(flat, weights=s.pi, minlength=cells).reshape(shape)
    products = np.zeros((len(p.sizes),) + shape)
    for k, part in enumerate(p.parts):
        part_products = s.products[list(part)].sum(axis=0)
        products[k] = np.bincount(flat, weights=part_products,
                                  minlength=cells).reshape(shape)
    return pi, products


CheckReport = namedtuple('CheckReport', ['abs_pi', 'rel_pi', 'abs_products',
                                         'rel_products', 'exact', 'grid'])


def _deviation(x, y):
    diff = np.abs(x - y)
    scale = np.maximum(np.abs(x), np.abs(y))
    rel = np.divide(diff, scale, out=np.zeros_like(diff), where=scale > 0)
    return float(diff.max()), float(rel.max())


def expand_and_check(h, w, threads=1):
    """
    Solves the expanded system with the subset recursions and reports
    the largest deviations from solve_polysym.
    """
    n = sum(h.sizes)
    if n > MAX_EXPAND_N:
        raise SizeGuardError(
            "grid of %d queues is too large to expand (limit %d)"
            % (n, MAX_EXPAND_N), n=n, limit=MAX_EXPAND_N)
    exact = solve_exact(h.expand(), w.expand(), threads=threads)
    grid = solve_polysym(h, w)
    pi, products = aggregate_by_profile(exact, Partition.contiguous(h.sizes))
    abs_pi, rel_pi = _deviation(pi, grid.pi)
    abs_prod, rel_prod = _deviation(products, grid.products)
    return CheckReport(abs_pi, rel_pi, abs_prod, rel_prod, exact, grid)


def access_tree_rank(rates, shared, sizes):
    """
    h(a) = min(sum_k a_k rates_k, shared) of a star network where each
    user of part k has an access line of rate rates_k.
    """
    rates = np.array(rates, dtype=float)
    layout = helpers.grid_layout(tuple(n + 1 for n in sizes))
    h = np.minimum(rates @ layout.coords, float(shared))
    return CardinalityRank(sizes, h.reshape(layout.shape), name="access-tree")


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def access_tree_throughput(g, w):
    """
    Mean throughput of a user of each part, intensity_k / P(user active).
    P(user of part k idle) sums over the cells with a_k < n_k the number
    of active sets avoiding the user times the per-set probability
    pi(a) / prod_l C(n_l, a_l).
    """
    layout = helpers.grid_layout(g.pi.shape)
    coords = layout.coords
    sizes = np.array(g.sizes)[:, None]
    log_sets = _log_binom(sizes, coords).sum(axis=0)
    log_pi = g.log_pi.ravel() - log_sets
    gamma = np.zeros(g.K)
    for k in range(g.K):
        keep = coords[k] < g.sizes[k]
        log_count = (log_sets[keep]
                     - _log_binom(g.sizes[k], coords[k, keep])
                     + _log_binom(g.sizes[k] - 1, coords[k, keep]))
        idle = float(np.exp(logsumexp(log_count + log_pi[keep])))
        busy = 1.0 - idle
        if not busy > 0:
            raise ConsistencyError(
                "users of part %d are never active" % (k + 1), part=k + 1)
        gamma[k] = w.intensity[k] / busy
    return gamma


def grid_cluster_rank(d1, d2):
    """
    h(a) = a_1 d1 + a_2 d2 - a_1 a_2 of the grid cluster: d2 classes with
    d1 servers each, d1 classes with d2 servers each, any two classes of
    different parts sharing one server.
    """
    if d1 < 1 or d2 < 1:
        raise ParameterError("grid cluster degrees must be positive, "
                             "got d1=%d d2=%d" % (d1, d2),
                             parameter="d1" if d1 < 1 else "d2")
    a1, a2 = np.indices((d2 + 1, d1 + 1))
    return CardinalityRank((d2, d1), a1 * d1 + a2 * d2 - a1 * a2,
                           name="grid-cluster")


def mean_delay(g, w):
    """
    Mean delay of a job of each part, L_k / (n_k lambda_k).
    """
    return g.L_part / (np.array(g.sizes) * w.arrival)


def grid_csv(g):
    layout = helpers.grid_layout(g.pi.shape)
    header = ['a%d' % (k + 1) for k in range(g.K)] + ['pi'] + \
        ['L%d' % (k + 1) for k in range(g.K)]
    rows = []
    for cell in range(layout.coords.shape[1]):
        a = tuple(int(x) for x in layout.coords[:, cell])
        rows.append(list(a) + [float(g.pi[a])] +
                    [g.L(k, a) for k in range(g.K)])
    return helpers.csv_text(header, rows)


def part_csv(g, w, throughput=None):
    delay = mean_delay(g, w)
    header = ['part', 'size', 'intensity', 'L', 'delay']
    if throughput is not None:
        header.append('throughput')
    rows = []
    for k in range(g.K):
        row = [k + 1, g.sizes[k], float(w.intensity[k]), float(g.L_part[k]),
               float(delay[k])]
        if throughput is not None:
            row.append(float(throughput[k]))
        rows.append(row)
    return helpers.csv_text(header, rows)
