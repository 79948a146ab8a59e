#
# Exact performance evaluation on subsets of active queues.
#
# pi(A) is the probability that A is the set of active queues; it is
# computed relative to pi(empty) = 1 in increasing cardinality order and
# normalized at the end. The conditional mean counts are carried as the
# products pi(A) L_i(A).
#

import math
from collections import namedtuple

import numpy as np

from polyfair import helpers
from polyfair.errors import (SizeGuardError, InstabilityError,
                             NumericRangeError, ConsistencyError)
from polyfair.helpers import members, format_subset, log_stderr

MAX_EXACT_N = 20
MAX_MARGIN_N = 24

# unnormalized values above this abort the solve
RANGE_LIMIT = 1e280

# loads closer than this (relative to mu(I)) to the boundary are refused
BOUNDARY_MARGIN = 1e-9


class Workload(object):
    """
    Per-queue arrival rates and mean job sizes. The traffic intensity
    of queue i is rho[i] = arrival[i] * size[i].
    """

    def __init__(self, arrival, size):
        self.arrival = np.array(arrival, dtype=float)
        self.size = np.array(size, dtype=float)
        if self.arrival.shape != self.size.shape or self.arrival.ndim != 1:
            raise ValueError("arrival rates and sizes must be two vectors "
                             "of equal length")
        if not (np.all(self.arrival > 0) and np.all(self.size > 0)):
            raise ValueError("arrival rates and mean sizes must be positive")
        self.rho = self.arrival * self.size
        for a in (self.arrival, self.size, self.rho):
            a.setflags(write=False)

    @classmethod
    def from_intensity(cls, rho, size=None):
        rho = np.array(rho, dtype=float)
        if size is None:
            size = np.ones_like(rho)
        size = np.broadcast_to(np.array(size, dtype=float), rho.shape)
        return cls(rho / size, size)

    @property
    def n(self):
        return len(self.rho)

    def permuted(self, order):
        order = list(order)
        return Workload(self.arrival[order], self.size[order])

    def scaled_arrivals(self, factor):
        return Workload(self.arrival * factor, self.size)

    def __repr__(self):
        return "Workload(rho=%s)" % list(self.rho)


StabilityMargin = namedtuple('StabilityMargin', ['margin', 'subset', 'stable'])


def subset_loads(rho):
    """
    Sum of rho over every subset, indexed by bitmask.
    """
    n = len(rho)
    loads = np.zeros(1 << n)
    for i in range(n):
        loads[1 << i:1 << (i + 1)] = loads[:1 << i] + rho[i]
    return loads


def stability_margin(r, w):
    """
    Smallest slack mu(A) - sum_{i in A} rho_i over nonempty subsets and
    the subset (bitmask) attaining it. The system is stable iff the
    margin is positive.
    """
    if r.n != w.n:
        raise ValueError("rank has %d queues, workload %d" % (r.n, w.n))
    if r.n > MAX_MARGIN_N:
        raise SizeGuardError(
            "n=%d is too large for the stability scan (limit %d)"
            % (r.n, MAX_MARGIN_N), n=r.n, limit=MAX_MARGIN_N)
    slack = r.table() - subset_loads(w.rho)
    slack[0] = np.inf
    # ties go to the highest mask
    argmin = len(slack) - 1 - int(np.argmin(slack[::-1]))
    margin = float(slack[argmin])
    return StabilityMargin(margin, argmin, margin > 0)


class SetSolution(object):
    """
    Output of solve_exact. pi[mask] is the probability of the active
    set, products[i, mask] = pi(A) L_i(A).
    """

    def __init__(self, n, pi, products, log_pi0):
        self.n = n
        self.pi = pi
        self.products = products
        self.log_pi0 = log_pi0
        self.L_total = products.sum(axis=1)
        for a in (self.pi, self.products, self.L_total):
            a.setflags(write=False)

    @property
    def pi0(self):
        return float(self.pi[0])

    def L(self, i, mask):
        """
        Conditional mean number of jobs at queue i given active set mask.
        """
        if not mask >> i & 1:
            return 0.0
        return float(self.products[i, mask] / self.pi[mask])

    def active_probability(self, i):
        masks = np.arange(1 << self.n)
        return float(self.pi[(masks >> i & 1).astype(bool)].sum())


def _numerators(shell, values, rho):
    num = np.zeros(len(shell))
    for i, r_i in enumerate(rho):
        bit = 1 << i
        has = (shell & bit) != 0
        num[has] += r_i * values[shell[has] ^ bit]
    return num


def solve_exact(r, w, threads=1):
    """
    Stationary probabilities of the active sets and mean queue lengths
    under balanced fairness, by the subset recursions

      pi(A) = sum_{i in A} rho_i pi(A-i) / (mu(A) - rho(A))

      pi(A) L_i(A) = (rho_i pi(A-i) + rho_i pi(A)
                      + sum_{j in A-i} rho_j pi(A-j) L_i(A-j))
                     / (mu(A) - rho(A))

    The second recursion runs once per queue, optionally on a thread
    pool.
    """
    n = r.n
    if n != w.n:
        raise ValueError("rank has %d queues, workload %d" % (n, w.n))
    if n > MAX_EXACT_N:
        raise SizeGuardError(
            "n=%d is too large for the exact solver (limit %d)"
            % (n, MAX_EXACT_N), n=n, limit=MAX_EXACT_N)
    full = (1 << n) - 1
    check = stability_margin(r, w)
    if check.margin <= BOUNDARY_MARGIN * r(full):
        raise InstabilityError(
            "workload is not strictly inside the capacity set: "
            "margin %g at %s" % (check.margin, format_subset(check.subset)),
            subset=members(check.subset), margin=check.margin)

    rho = w.rho
    denom = r.table() - subset_loads(rho)
    shells = helpers.subset_shells(n)

    pi = np.zeros(1 << n)
    pi[0] = 1.0
    for shell in shells[1:]:
        pi[shell] = _numerators(shell, pi, rho) / denom[shell]
        top = pi[shell].max()
        if not top < RANGE_LIMIT:
            raise NumericRangeError(
                "unnormalized probabilities exceed %g" % RANGE_LIMIT,
                cardinality=int(helpers.popcount(int(shell[0]))))

    def queue_pass(i):
        bit = 1 << i
        prod = np.zeros(1 << n)
        for shell in shells[1:]:
            shell = shell[(shell & bit) != 0]
            if not len(shell):
                continue
            num = rho[i] * (pi[shell ^ bit] + pi[shell])
            for j, r_j in enumerate(rho):
                if j == i:
                    continue
                has = (shell & (1 << j)) != 0
                num[has] += r_j * prod[shell[has] ^ (1 << j)]
            prod[shell] = num / denom[shell]
        return prod

    products = np.array(helpers.thread_map(queue_pass, range(n), threads))
    products = products.reshape(n, 1 << n)

    Z = pi.sum()
    pi /= Z
    products /= Z
    return SetSolution(n, pi, products, -math.log(Z))


QueueMetrics = namedtuple('QueueMetrics',
                          ['L', 'delay', 'active', 'throughput'])


def metrics(s, w):
    """
    Per-queue mean delay (Little's law), probability of being active and
    mean throughput rho_i / P(X_i > 0).
    """
    active = np.array([s.active_probability(i) for i in range(s.n)])
    if np.any(active <= 0):
        i = int(np.argmin(active))
        raise ConsistencyError(
            "queue %d is never active" % (i + 1), queue=i + 1)
    return QueueMetrics(np.array(s.L_total), s.L_total / w.arrival,
                        active, w.rho / active)


def subset_csv(s):
    rows = []
    for mask in range(1 << s.n):
        rows.append([mask, format_subset(mask), float(s.pi[mask])])
    return helpers.csv_text(['mask', 'subset', 'pi'], rows)


def queue_csv(s, w):
    m = metrics(s, w)
    rows = []
    for i in range(s.n):
        rows.append([i + 1, float(w.rho[i]), float(m.L[i]), float(m.delay[i]),
                     float(m.active[i]), float(m.throughput[i])])
    return helpers.csv_text(
        ['queue', 'rho', 'L', 'delay', 'active', 'throughput'], rows)


def log_solution(s, w):
    log_stderr("exact: pi(empty)=%s, sum L=%s"
               % (helpers.format_float(s.pi0),
                  helpers.format_float(s.L_total.sum())))
