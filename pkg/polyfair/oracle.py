#
# Independent backends used to check the solvers: the balance function,
# a truncated state-space solve and a discrete-event simulator of the
# processor-sharing queues under balanced fairness.
#

import math
from collections import namedtuple

import numpy as np
from scipy.special import logsumexp

from polyfair import helpers
from polyfair.errors import (SizeGuardError, PolymatroidError,
                             TruncationError, InstabilityError)
from polyfair.exact import stability_margin
from polyfair.helpers import log_stderr, format_subset

MAX_TRUNCATED_N = 4
MAX_TRUNCATED_CELLS = 20000000
TAIL_LIMIT = 1e-8

# hyperexponential job sizes: two phases, squared coefficient of variation 4
HYPER_SCV = 4.0
HYPER_Q = (1.0 + math.sqrt(1.0 - 2.0 / (HYPER_SCV + 1.0))) / 2.0


def _active_mask(x):
    mask = 0
    for i, xi in enumerate(x):
        if xi > 0:
            mask |= 1 << i
    return mask


class BalanceCache(object):
    """
    Memo of log Phi(x) for one rank function, filled on demand with

      Phi(x) mu(I(x)) = sum_{i in I(x)} Phi(x - e_i),   Phi(0) = 1

    where I(x) is the set of active queues of x. The whole box y <= x is
    filled in lexicographic order, so no recursion is involved. A cache
    is meant to be confined to a single worker.
    """

    def __init__(self, r):
        self.r = r
        self.log_phi = {(0,) * r.n: 0.0}

    def __len__(self):
        return len(self.log_phi)

    def _log_rank(self, mask, x):
        mu = self.r(mask)
        if not mu > 0:
            raise PolymatroidError(
                "rank of active set %s is %g at state %s"
                % (format_subset(mask), mu, helpers.format_profile(x)),
                subset=helpers.members(mask), state=list(x))
        return math.log(mu)

    def get(self, x):
        x = tuple(int(v) for v in x)
        if x in self.log_phi:
            return self.log_phi[x]
        if len(x) != self.r.n or min(x) < 0:
            raise ValueError("state %s is not a state of %d queues"
                             % (helpers.format_profile(x), self.r.n))
        cache = self.log_phi
        for y in np.ndindex(*(v + 1 for v in x)):
            if y in cache:
                continue
            terms = []
            for i, yi in enumerate(y):
                if yi > 0:
                    terms.append(cache[y[:i] + (yi - 1,) + y[i + 1:]])
            cache[y] = (logsumexp(terms)
                        - self._log_rank(_active_mask(y), y))
        return cache[x]

    def residual(self, x):
        """
        Relative error of the balance recursion at x, in linear space.
        """
        x = tuple(int(v) for v in x)
        mask = _active_mask(x)
        if not mask:
            return abs(math.exp(self.get(x)) - 1.0)
        lhs = math.exp(self.get(x)) * self.r(mask)
        rhs = sum(math.exp(self.get(x[:i] + (x[i] - 1,) + x[i + 1:]))
                  for i in helpers.members(mask))
        return abs(lhs - rhs) / max(abs(rhs), helpers.ABS_TOL)


def balance(r, x, cache=None):
    """
    log Phi(x) of balanced fairness in the capacity set of r.
    """
    if cache is None:
        cache = BalanceCache(r)
    return cache.get(x)


def service_rates(r, x, cache=None):
    """
    Balanced fair service rates phi_i(x) = Phi(x - e_i) / Phi(x); zero for
    idle queues.
    """
    x = tuple(int(v) for v in x)
    if not any(x):
        raise ValueError("service rates are undefined in the empty state")
    if cache is None:
        cache = BalanceCache(r)
    log_x = cache.get(x)
    rates = np.zeros(len(x))
    for i, xi in enumerate(x):
        if xi > 0:
            rates[i] = math.exp(cache.get(x[:i] + (xi - 1,) + x[i + 1:])
                                - log_x)
    return rates


class TruncatedSolution(object):
    """
    Stationary distribution restricted to states with at most N jobs.
    states[:, j] is the j-th state, pi[j] its probability. pi_sets and
    products aggregate by active set like SetSolution.
    """

    def __init__(self, n, N, states, log_pi, tail_mass):
        self.n = n
        self.N = N
        self.states = states
        self.log_pi = log_pi
        self.pi = np.exp(log_pi)
        self.tail_mass = tail_mass
        weights = 1 << np.arange(n)
        self.active = ((states > 0) * weights[:, None]).sum(axis=0)
        self.pi_sets = np.bincount(self.active, weights=self.pi,
                                   minlength=1 << n)
        self.products = np.array([
            np.bincount(self.active, weights=self.pi * states[i],
                        minlength=1 << n)
            for i in range(n)])
        self.L_total = self.products.sum(axis=1)
        self._index = dict((tuple(int(v) for v in states[:, j]), j)
                           for j in range(states.shape[1]))

    def probability(self, x):
        j = self._index.get(tuple(int(v) for v in x))
        if j is None:
            return 0.0
        return float(self.pi[j])

    def log_probability(self, x):
        j = self._index.get(tuple(int(v) for v in x))
        if j is None:
            return -math.inf
        return float(self.log_pi[j])


def stationary_truncated(r, w, N):
    """
    pi(x) proportional to Phi(x) rho^x over the states with |x| <= N,
    computed by shells of equal total count on the box {0..N}^n. Raises
    InstabilityError for a workload outside the capacity set and
    TruncationError when the mass on the outermost shell is not
    negligible.
    """
    n = r.n
    if n != w.n:
        raise ValueError("rank has %d queues, workload %d" % (n, w.n))
    if n > MAX_TRUNCATED_N:
        raise SizeGuardError(
            "n=%d is too large for the truncated solve (limit %d)"
            % (n, MAX_TRUNCATED_N), n=n, limit=MAX_TRUNCATED_N)
    cells = (N + 1) ** n
    if cells > MAX_TRUNCATED_CELLS:
        raise SizeGuardError(
            "truncation box of %d states is too large (limit %d)"
            % (cells, MAX_TRUNCATED_CELLS), cells=cells)
    check = stability_margin(r, w)
    if not check.stable:
        raise InstabilityError(
            "workload is not inside the capacity set: margin %g at %s"
            % (check.margin, format_subset(check.subset)),
            subset=helpers.members(check.subset), margin=check.margin)

    layout = helpers.grid_layout((N + 1,) * n)
    log_mu = np.log(np.maximum(r.table(), np.finfo(float).tiny))
    log_phi = np.zeros(cells)
    weights = 1 << np.arange(n)
    for shell in layout.shells[1:N + 1]:
        coords = layout.coords[:, shell]
        terms = np.full((n, len(shell)), -np.inf)
        for k in range(n):
            on = coords[k] > 0
            terms[k, on] = log_phi[shell[on] - layout.strides[k]]
        active = ((coords > 0) * weights[:, None]).sum(axis=0)
        log_phi[shell] = logsumexp(terms, axis=0) - log_mu[active]

    kept = np.concatenate(layout.shells[:N + 1])
    states = layout.coords[:, kept]
    log_rho = np.log(w.rho)
    log_weight = log_phi[kept] + log_rho @ states
    log_pi = log_weight - logsumexp(log_weight)
    outer = states.sum(axis=0) == N
    tail = float(np.exp(logsumexp(log_pi[outer])))
    if not tail < TAIL_LIMIT:
        raise TruncationError(
            "mass %g on the states with %d jobs exceeds %g, use a larger "
            "truncation level" % (tail, N, TAIL_LIMIT), tail=tail, N=N)
    return TruncatedSolution(n, N, states, log_pi, tail)


SimEstimate = namedtuple(
    'SimEstimate', ['mean', 'stderr', 'events', 'horizon', 'diverged'])


def _phase_rates(size, distribution):
    """
    Per-queue phase probabilities and rates (in work units) of the job
    size distribution with mean size.
    """
    if distribution == 'exponential':
        return np.ones((len(size), 1)), (1.0 / size)[:, None]
    if distribution == 'hyperexponential':
        q = HYPER_Q
        probs = np.tile([q, 1.0 - q], (len(size), 1))
        rates = np.stack([2.0 * q / size, 2.0 * (1.0 - q) / size], axis=1)
        return probs, rates
    raise ValueError("unknown job size distribution %r" % distribution)


def simulate(r, w, distribution='exponential', events=1000000,
             warmup=0.2, batches=20, seed=0, cap=10000):
    """
    Event-driven simulation of the queues under balanced fairness. Each
    queue shares its rate phi_i(x) equally among its jobs. Returns
    the time-average number of jobs per queue, with standard errors from
    batch means over the events left after the warmup fraction.
    """
    n = r.n
    if n != w.n:
        raise ValueError("rank has %d queues, workload %d" % (n, w.n))
    probs, nu = _phase_rates(w.size, distribution)
    phases = probs.shape[1]
    rng = np.random.default_rng(seed)
    cache = BalanceCache(r)
    rate_memo = {}

    counts = np.zeros((n, phases), dtype=np.int64)
    skip = int(events * warmup)
    per_batch = max((events - skip) // batches, 1)
    area = np.zeros((batches, n))
    elapsed = np.zeros(batches)
    arrival = w.arrival
    diverged = False

    chunk = 65536
    uniforms = rng.random((chunk, 3))
    used = 0
    for event in range(events):
        if used == chunk:
            uniforms = rng.random((chunk, 3))
            used = 0
        u_time, u_event, u_phase = uniforms[used]
        used += 1

        x = tuple(int(v) for v in counts.sum(axis=1))
        phi = rate_memo.get(x)
        if phi is None:
            phi = service_rates(r, x, cache) if any(x) else np.zeros(n)
            rate_memo[x] = phi
        per_job = np.divide(phi, x, out=np.zeros(n), where=np.array(x) > 0)
        completion = counts * nu * per_job[:, None]
        rates = np.concatenate([arrival, completion.ravel()])
        total = rates.sum()
        dt = -math.log(1.0 - u_time) / total

        if event >= skip:
            b = min((event - skip) // per_batch, batches - 1)
            area[b] += dt * np.array(x)
            elapsed[b] += dt

        choice = int(np.searchsorted(np.cumsum(rates), u_event * total,
                                     side='right'))
        choice = min(choice, len(rates) - 1)
        if choice < n:
            phase = int(np.searchsorted(np.cumsum(probs[choice]), u_phase,
                                        side='right'))
            counts[choice, min(phase, phases - 1)] += 1
            if counts[choice].sum() > cap:
                log_stderr("simulate: queue %d exceeded %d jobs, the "
                           "workload is probably unstable" % (choice + 1, cap))
                diverged = True
                break
        else:
            i, phase = divmod(choice - n, phases)
            counts[i, phase] -= 1

    filled = elapsed > 0
    batch_means = area[filled] / elapsed[filled][:, None]
    mean = area.sum(axis=0) / max(elapsed.sum(), helpers.ABS_TOL)
    if len(batch_means) > 1:
        stderr = batch_means.std(axis=0, ddof=1) / math.sqrt(len(batch_means))
    else:
        stderr = np.full(n, np.inf)
    return SimEstimate(mean, stderr, event + 1, float(elapsed.sum()),
                       diverged)


def estimate_csv(est, reference=None):
    """
    reference holds the exact mean queue lengths when they are known.
    """
    header = ['queue', 'L', 'stderr']
    if reference is not None:
        header.append('exact_L')
    rows = []
    for i in range(len(est.mean)):
        row = [i + 1, float(est.mean[i]), float(est.stderr[i])]
        if reference is not None:
            row.append(float(reference[i]))
        rows.append(row)
    return helpers.csv_text(header, rows)
