#
# Bounds for systems whose capacity set lies between (1 - epsilon) C and
# (1 + epsilon) C for a reference polymatroid C: both scaled reference
# systems are solved and their metrics weighted by the ratio of their
# empty-state probabilities.
#

import math

import numpy as np

from polyfair import helpers
from polyfair.errors import InstabilityError, PolymatroidError
from polyfair.exact import solve_exact, stability_margin
from polyfair.polysym import (GridWorkload, solve_polysym, access_tree_rank,
                              access_tree_throughput, grid_stability_margin)
from polyfair.random_cluster import (RandomAssignmentSpec,
                                     mean_cardinality_rank)
from polyfair.rank import (CardinalityRank, RankFunction,
                           validate_polymatroid)
from polyfair.helpers import format_subset, format_profile, log_stderr

# alpha grids stay this far from 0 and from 1 - epsilon
ALPHA_MARGIN = 0.02
ALPHA_POINTS = 50

# generators of random ranks inside the epsilon band
INTERMEDIATE_FAMILIES = ('band', 'convex')


class SandwichResult(object):
    """
    Lower and upper bounds on a per-queue (or per-part) metric, kept in
    log form. log_pi0_minus and log_pi0_plus are the log empty-state
    probabilities of the (1 - epsilon) and (1 + epsilon) systems.
    """

    def __init__(self, metric, epsilon, log_pi0_minus, log_pi0_plus,
                 log_lower, log_upper, alpha=None):
        self.metric = metric
        self.epsilon = epsilon
        self.log_pi0_minus = log_pi0_minus
        self.log_pi0_plus = log_pi0_plus
        self.log_lower = np.asarray(log_lower, dtype=float)
        self.log_upper = np.asarray(log_upper, dtype=float)
        self.alpha = alpha

    @property
    def log_ratio(self):
        """log pi_+(0) / pi_-(0), never negative."""
        return self.log_pi0_plus - self.log_pi0_minus

    @property
    def pi0_minus(self):
        return math.exp(self.log_pi0_minus)

    @property
    def pi0_plus(self):
        return math.exp(self.log_pi0_plus)

    @property
    def lower(self):
        with np.errstate(over='ignore'):
            return np.exp(self.log_lower)

    @property
    def upper(self):
        with np.errstate(over='ignore'):
            return np.exp(self.log_upper)

    def rates(self):
        """
        (lower, upper) bounds on the inverse of the metric, for delay
        bounds the mean service rate per job.
        """
        with np.errstate(over='ignore'):
            return np.exp(-self.log_upper), np.exp(-self.log_lower)


def scale_rank(r, factor):
    if not factor > 0:
        raise ValueError("scale factor must be positive, got %g" % factor)
    return r.scaled(factor)


def _check_epsilon(epsilon):
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must lie in [0, 1), got %g" % epsilon)


def _check_inside(reference, workload, epsilon):
    inner = scale_rank(reference, 1 - epsilon)
    if isinstance(reference, CardinalityRank):
        check = grid_stability_margin(inner, workload)
        where, context = format_profile(check.profile), \
            {'profile': list(check.profile)}
    else:
        check = stability_margin(inner, workload)
        where, context = format_subset(check.subset), \
            {'subset': helpers.members(check.subset)}
    if not check.stable:
        raise InstabilityError(
            "workload is not inside the (1-%g)-scaled capacity set: "
            "margin %g at %s" % (epsilon, check.margin, where),
            margin=check.margin, epsilon=epsilon, **context)


def sandwich_L(reference, epsilon, workload, threads=1):
    """
    Bounds on the mean number of jobs of each queue (RankFunction
    reference, Workload) or each part (CardinalityRank reference,
    GridWorkload) of any system whose capacity set lies between the
    (1 - epsilon) and (1 + epsilon) scaled reference:

      pi_-(0)/pi_+(0) L_+  <=  L  <=  pi_+(0)/pi_-(0) L_-
    """
    _check_epsilon(epsilon)
    _check_inside(reference, workload, epsilon)
    plus = scale_rank(reference, 1 + epsilon)
    minus = scale_rank(reference, 1 - epsilon)
    if isinstance(reference, CardinalityRank):
        sp = solve_polysym(plus, workload)
        sm = solve_polysym(minus, workload)
        L_plus, L_minus = sp.L_part, sm.L_part
    else:
        sp = solve_exact(plus, workload, threads=threads)
        sm = solve_exact(minus, workload, threads=threads)
        L_plus, L_minus = sp.L_total, sm.L_total
    log_ratio = sp.log_pi0 - sm.log_pi0
    return SandwichResult('L', epsilon, sm.log_pi0, sp.log_pi0,
                          np.log(L_plus) - log_ratio,
                          np.log(L_minus) + log_ratio)


def tree_access_bounds(rates, shared, sizes, epsilon, workload):
    """
    Bounds on the mean throughput of the users of each part of a star
    network whose access rates and shared capacity are known within
    (1 +- epsilon):

      pi_-(0)/pi_+(0) gamma_-  <=  gamma  <=  pi_+(0)/pi_-(0) gamma_+
    """
    _check_epsilon(epsilon)
    rates = np.array(rates, dtype=float)
    if tuple(sizes) != workload.sizes:
        raise ValueError("sizes %s do not match the workload %s"
                         % (tuple(sizes), workload.sizes))
    for k, rate in enumerate(rates):
        if not workload.intensity[k] < (1 - epsilon) * rate:
            raise InstabilityError(
                "part %d: intensity %g is not below (1-%g) x access rate %g"
                % (k + 1, workload.intensity[k], epsilon, rate),
                part=k + 1, epsilon=epsilon)
    total = float(np.dot(sizes, workload.intensity))
    if not total < (1 - epsilon) * shared:
        raise InstabilityError(
            "total intensity %g is not below (1-%g) x shared capacity %g"
            % (total, epsilon, shared), epsilon=epsilon)

    h = access_tree_rank(rates, shared, sizes)
    sp = solve_polysym(scale_rank(h, 1 + epsilon), workload)
    sm = solve_polysym(scale_rank(h, 1 - epsilon), workload)
    gamma_plus = access_tree_throughput(sp, workload)
    gamma_minus = access_tree_throughput(sm, workload)
    log_ratio = sp.log_pi0 - sm.log_pi0
    return SandwichResult('throughput', epsilon, sm.log_pi0, sp.log_pi0,
                          np.log(gamma_minus) - log_ratio,
                          np.log(gamma_plus) + log_ratio)


def boundary_intensity(h, degrees):
    """
    Per-part intensities proportional to the degrees and putting the
    full grid cell on the boundary: sum_k n_k intensity_k = h(n).
    """
    degrees = np.array(degrees, dtype=float)
    top = float(h.h.ravel()[-1])
    return degrees * top / float(np.dot(h.sizes, degrees))


def default_alpha_grid(epsilon, points=ALPHA_POINTS):
    return np.linspace(ALPHA_MARGIN, 1 - epsilon - ALPHA_MARGIN, points)


def random_cluster_bounds(m, n, degrees, epsilon, alphas=None, groups=None,
                          threads=1):
    """
    Delay bounds for the classes of a cluster of m servers with K = len(degrees)
    parts of n classes each and random assignment, at loads alpha times
    the boundary intensity. For each alpha,

      (1 + e)/alpha  pi_-(0)/pi_+(0)  L_+ / (n intensity_k)
      (1 - e)/alpha  pi_+(0)/pi_-(0)  L_- / (n intensity_k)

    where the +- systems have rank (1 +- e)/alpha times the mean
    cardinality rank and the boundary intensity. Returns one
    SandwichResult (metric 'delay') per alpha.

    At high load pi_+(0)/pi_-(0) grows exponentially with n and the
    lower delay bound collapses toward 0. It is raised to the delay of a
    job served alone, alpha / ((1 + e) h(e_k)), and both bounds are then
    made monotone in alpha (see _delay_envelope).
    """
    _check_epsilon(epsilon)
    if alphas is None:
        alphas = default_alpha_grid(epsilon)
    for alpha in alphas:
        if not 0 < alpha < 1 - epsilon:
            raise ValueError("alpha %g outside (0, %g)" % (alpha, 1 - epsilon))
    spec = RandomAssignmentSpec(m, (n,) * len(degrees), degrees, groups=groups)
    h = mean_cardinality_rank(spec)
    intensity = boundary_intensity(h, degrees)
    workload = GridWorkload(h.sizes, intensity)
    log_load = np.log(n * intensity)
    log_single = np.log(single_job_capacity(h))

    def solve(alpha):
        sp = solve_polysym(scale_rank(h, (1 + epsilon) / alpha), workload)
        sm = solve_polysym(scale_rank(h, (1 - epsilon) / alpha), workload)
        log_ratio = sp.log_pi0 - sm.log_pi0
        log_lower = (math.log((1 + epsilon) / alpha) - log_ratio
                     + np.log(sp.L_part) - log_load)
        log_lower = np.maximum(
            log_lower, -math.log((1 + epsilon) / alpha) - log_single)
        log_upper = (math.log((1 - epsilon) / alpha) + log_ratio
                     + np.log(sm.L_part) - log_load)
        return SandwichResult('delay', epsilon, sm.log_pi0, sp.log_pi0,
                              log_lower, log_upper, alpha=float(alpha))

    results = helpers.thread_map(solve, list(alphas), threads)
    _delay_envelope(results)
    log_stderr("bounds: epsilon=%g, %d alpha values, m=%d n=%d degrees=%s"
               % (epsilon, len(results), m, n, tuple(degrees)))
    return results


def single_job_capacity(h):
    """h(e_k) for each part k: the capacity available to a lone job."""
    capacity = []
    for k in range(h.K):
        a = [0] * h.K
        a[k] = 1
        capacity.append(h(a))
    return np.array(capacity)


def _delay_envelope(results):
    """
    The mean delay of each part does not decrease with the load, so a
    lower bound at alpha also holds at every larger alpha and an upper
    bound at every smaller one. Tightens both bounds in place.
    """
    if not results:
        return
    order = np.argsort([res.alpha for res in results], kind='stable')
    low = np.maximum.accumulate(
        np.array([results[i].log_lower for i in order]), axis=0)
    high = np.minimum.accumulate(
        np.array([results[i].log_upper for i in order])[::-1], axis=0)[::-1]
    for j, i in enumerate(order):
        results[i].log_lower = low[j]
        results[i].log_upper = high[j]


def curve_rows(results):
    rows = []
    for res in results:
        low, high = res.rates()
        for k in range(len(low)):
            rows.append([res.alpha, res.epsilon, k + 1, float(low[k]),
                         float(high[k])])
    return rows


def curve_csv(results):
    return helpers.csv_text(
        ['alpha', 'epsilon', 'part', 'lower_rate', 'upper_rate'],
        curve_rows(results))


def bounds_csv(results, label='queue'):
    rows = []
    for result in results:
        lower, upper = result.lower, result.upper
        for i in range(len(lower)):
            rows.append([i + 1, result.epsilon, float(lower[i]),
                         float(upper[i])])
    return helpers.csv_text([label, 'epsilon', 'lower', 'upper'], rows)


def random_intermediate_rank(r, epsilon, rng, family='band', components=3,
                             attempts=100):
    """
    A random polymatroid rank nu with (1 - e) mu <= nu <= (1 + e) mu,
    drawn from one of INTERMEDIATE_FAMILIES. Returns the rank and the
    number of rejected candidates.
    """
    if family == 'band':
        return band_intermediate_rank(r, epsilon, rng, attempts=attempts)
    if family == 'convex':
        return convex_intermediate_rank(r, epsilon, rng,
                                        components=components,
                                        attempts=attempts)
    raise ValueError("unknown intermediate rank family %r (use one of %s)"
                     % (family, ", ".join(INTERMEDIATE_FAMILIES)))


def _repair(nu, order, low, high, tol):
    """
    Clips nu(A), in order of cardinality, to

      [max_i nu(A - i), min_{i != j} nu(A - i) + nu(A - j) - nu(A - i - j)]

    which makes nu monotone and submodular. Returns False as soon as the
    interval is empty or the clipped value leaves [low, high].
    """
    for mask in order:
        mask = int(mask)
        below = np.array([mask & ~(1 << i) for i in helpers.members(mask)],
                         dtype=np.int64)
        lo = nu[below].max()
        hi = np.inf
        if len(below) > 1:
            pairs = (nu[below][:, None] + nu[below][None, :]
                     - nu[below[:, None] & below[None, :]])
            np.fill_diagonal(pairs, np.inf)
            hi = pairs.min()
        if lo > hi + tol[mask]:
            return False
        nu[mask] = min(max(nu[mask], lo), hi)
        if not low[mask] <= nu[mask] <= high[mask]:
            return False
    return True


def band_intermediate_rank(r, epsilon, rng, attempts=100):
    """
    A random polymatroid rank inside the band, drawn subset by subset:
    nu(A) = mu(A) (1 + e U_A) with independent U_A uniform in [-1, 1],
    then repaired toward a polymatroid (see _repair). Draws whose repair
    fails or leaves the band are rejected.
    """
    _check_epsilon(epsilon)
    mu = r.table()
    n = r.n
    order = np.argsort(helpers.popcounts(n), kind='stable')[1:]
    tol = np.maximum(helpers.REL_TOL * np.abs(mu), helpers.ABS_TOL)
    low = (1 - epsilon) * mu - tol
    high = (1 + epsilon) * mu + tol
    rejected = 0
    for _ in range(attempts):
        nu = mu * (1 + epsilon * rng.uniform(-1, 1, 1 << n))
        nu[0] = 0.0
        if _repair(nu, order, low, high, tol):
            candidate = RankFunction(n, table=nu, name="intermediate")
            if validate_polymatroid(candidate).ok:
                return candidate, rejected
        rejected += 1
    raise PolymatroidError(
        "no intermediate polymatroid found in %d draws" % attempts,
        attempts=attempts, family='band')


def convex_intermediate_rank(r, epsilon, rng, components=3, attempts=100):
    """
    A random polymatroid rank nu with (1 - e) mu <= nu <= (1 + e) mu:

      nu = (1 - e) mu + 2 e u sum_t w_t nu_t

    with u uniform in [0, 1], w random convex weights and each nu_t a
    polymatroid rank below mu (a truncation min(mu, c), a restriction
    mu(A & B) or a modular function given by a greedy vertex of the
    polymatroid of mu). Every candidate lies in the band and is a
    polymatroid, so rejections only come from rounding.
    """
    _check_epsilon(epsilon)
    mu = r.table()
    n = r.n
    full = (1 << n) - 1
    masks = np.arange(1 << n, dtype=np.int64)
    rejected = 0
    for _ in range(attempts):
        parts = []
        for _ in range(components):
            kind = rng.integers(3)
            if kind == 0:
                parts.append(np.minimum(mu, rng.uniform(0, mu[full])))
            elif kind == 1:
                keep = int(rng.integers(1, full + 1))
                parts.append(r.restrict(keep).table())
            else:
                order = rng.permutation(n)
                vertex = np.zeros(n)
                prefix = 0
                for i in order:
                    vertex[i] = mu[prefix | 1 << int(i)] - mu[prefix]
                    prefix |= 1 << int(i)
                modular = np.zeros(1 << n)
                for i in range(n):
                    modular += ((masks >> i) & 1) * vertex[i]
                parts.append(modular)
        weights = rng.dirichlet(np.ones(components)) * rng.uniform()
        nu = (1 - epsilon) * mu + 2 * epsilon * np.dot(weights, parts)
        nu[0] = 0.0
        tol = np.maximum(helpers.REL_TOL * np.abs(mu), helpers.ABS_TOL)
        inside = (np.all(nu >= (1 - epsilon) * mu - tol)
                  and np.all(nu <= (1 + epsilon) * mu + tol))
        candidate = RankFunction(n, table=nu, name="intermediate")
        if inside and validate_polymatroid(candidate).ok:
            return candidate, rejected
        rejected += 1
    raise PolymatroidError(
        "no intermediate polymatroid found in %d attempts" % attempts,
        attempts=attempts, family='convex')
