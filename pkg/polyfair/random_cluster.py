#
# Computer clusters with a random assignment of servers to job classes:
# each class of part k is assigned d_k servers drawn uniformly at random,
# independently of the other classes.
#

import math
from collections import namedtuple

import numpy as np
from scipy.stats import norm

from polyfair import helpers
from polyfair.errors import ParameterError
from polyfair.rank import ClusterAssignment, CardinalityRank
from polyfair.helpers import log_stderr


class RandomAssignmentSpec(object):
    """
    m servers split into groups of (count, capacity), laid out
    contiguously; K parts of classes with sizes[k] classes of degree
    degrees[k] each.
    """

    def __init__(self, m, sizes, degrees, groups=None, seed=0):
        self.m = int(m)
        if groups is None:
            groups = [(self.m, 1.0)]
        self.groups = tuple((int(c), float(cap)) for c, cap in groups)
        self.sizes = tuple(int(n) for n in sizes)
        self.degrees = tuple(int(d) for d in degrees)
        self.seed = int(seed)
        if sum(c for c, _ in self.groups) != self.m:
            raise ParameterError("server groups hold %d servers, expected %d"
                                 % (sum(c for c, _ in self.groups), self.m),
                                 parameter="groups")
        if any(cap < 0 for _, cap in self.groups):
            raise ParameterError("server capacities must be nonnegative",
                                 parameter="groups")
        if len(self.sizes) != len(self.degrees):
            raise ParameterError("one degree per part is required",
                                 parameter="degrees")
        for d in self.degrees:
            if not 1 <= d <= self.m:
                raise ParameterError("degree %d outside 1..%d" % (d, self.m),
                                     parameter="degrees", degree=d)
        self.capacities = np.repeat([cap for _, cap in self.groups],
                                    [c for c, _ in self.groups])
        self.capacities.setflags(write=False)

    @property
    def K(self):
        return len(self.sizes)

    @property
    def n(self):
        return sum(self.sizes)

    @property
    def xi(self):
        """Mean server capacity."""
        return float(self.capacities.mean())

    def __repr__(self):
        return "RandomAssignmentSpec(m=%d, sizes=%s, degrees=%s)" % (
            self.m, self.sizes, self.degrees)


def _sample_subset(rng, m, d):
    """
    Uniform d-subset of range(m): the first d steps of a Fisher-Yates
    shuffle, with the displaced entries kept in a dict.
    """
    swaps = {}
    draws = rng.integers(np.arange(d), m)
    out = []
    for t in range(d):
        j = int(draws[t])
        out.append(swaps.get(j, j))
        swaps[j] = swaps.get(t, t)
    return out


def _sample_sets(spec, rng):
    sets = []
    for size, d in zip(spec.sizes, spec.degrees):
        for _ in range(size):
            sets.append(_sample_subset(rng, spec.m, d))
    return sets


def sample_assignment(spec, seed=None):
    """
    A realization of the random assignment. Deterministic given the seed
    (spec.seed when omitted).
    """
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    return ClusterAssignment(spec.n, spec.m, spec.capacities,
                             _sample_sets(spec, rng))


def placement_probability(m, degrees, a):
    """
    Probability that a given server serves at least one class of a set
    with profile a: 1 - prod_k (1 - d_k/m)^a_k.
    """
    log_miss = 0.0
    for d, ak in zip(degrees, a):
        if ak == 0:
            continue
        if d >= m:
            return 1.0
        log_miss += ak * math.log1p(-float(d) / m)
    return -math.expm1(log_miss)


def mean_rank(spec, a):
    """
    Expected aggregate capacity of the servers reachable from a set of
    classes with profile a.
    """
    if len(a) != spec.K:
        raise ValueError("profile %s does not have %d parts" % (a, spec.K))
    return spec.xi * spec.m * placement_probability(spec.m, spec.degrees, a)


def mean_cardinality_rank(spec):
    """
    mean_rank on the whole grid, as a CardinalityRank.
    """
    layout = helpers.grid_layout(tuple(n + 1 for n in spec.sizes))
    log_miss = np.zeros(layout.coords.shape[1])
    full = np.zeros(layout.coords.shape[1], dtype=bool)
    for k, d in enumerate(spec.degrees):
        ak = layout.coords[k]
        if d >= spec.m:
            full |= ak > 0
        else:
            log_miss += ak * math.log1p(-float(d) / spec.m)
    p = np.where(full, 1.0, -np.expm1(log_miss))
    return CardinalityRank(spec.sizes, spec.xi * spec.m * p.reshape(layout.shape),
                           name="mean-random")


MeanRankEstimate = namedtuple('MeanRankEstimate',
                              ['mean', 'stderr', 'low', 'high', 'trials'])


def empirical_mean_rank(spec, a, trials=10000, seed=None, level=0.99):
    """
    Monte Carlo estimate of the capacity reachable from a fixed set of
    classes with profile a, with a normal approximation confidence
    interval at the given level.
    """
    if trials < 100:
        raise ValueError("at least 100 trials are required")
    if len(a) != spec.K:
        raise ValueError("profile %s does not have %d parts" % (a, spec.K))
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    caps = spec.capacities
    values = np.zeros(trials)
    for t in range(trials):
        reached = np.zeros(spec.m, dtype=bool)
        for ak, d in zip(a, spec.degrees):
            for _ in range(int(ak)):
                reached[_sample_subset(rng, spec.m, d)] = True
        values[t] = caps[reached].sum()
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(trials))
    z = norm.ppf(0.5 + level / 2.0)
    return MeanRankEstimate(mean, stderr, mean - z * stderr,
                            mean + z * stderr, trials)


class ConcentrationReport(object):
    """
    Result of a concentration experiment. in_band[t] tells whether every
    sampled set of trial t had a capacity within the (1 +- epsilon) band
    around its mean; worst_rel_dev[t] is the largest |M(A)/mu(A) - 1|
    of trial t and profile_worst the largest one per profile over all
    trials.
    """

    def __init__(self, spec, epsilon, in_band, worst_rel_dev, profile_worst):
        self.spec = spec
        self.epsilon = epsilon
        self.in_band = in_band
        self.worst_rel_dev = worst_rel_dev
        self.profile_worst = profile_worst

    @property
    def trials(self):
        return len(self.in_band)

    @property
    def probability(self):
        return float(np.mean(self.in_band))

    def rows(self):
        n = self.spec.sizes[0]
        return [[t + 1, n, self.epsilon, int(self.in_band[t]),
                 float(self.worst_rel_dev[t])] for t in range(self.trials)]


def _prefix_unions(sets, order, m):
    """
    Row j is the indicator of the servers reachable from the first j
    classes of order.
    """
    out = np.zeros((len(order) + 1, m), dtype=bool)
    for j, i in enumerate(order):
        out[j + 1] = out[j]
        out[j + 1, sets[i]] = True
    return out


def _prefix_capacities(spec, sets, orders):
    """
    Capacity reachable from the nested prefixes of the orders, on the
    whole grid.
    """
    caps = spec.capacities
    unions = [_prefix_unions(sets, order, spec.m) for order in orders]
    if spec.K == 1:
        return unions[0] @ caps
    if spec.K == 2:
        u1, u2 = unions
        s1 = u1 @ caps
        s2 = u2 @ caps
        both = (u1 * caps).astype(float) @ u2.T.astype(float)
        return s1[:, None] + s2[None, :] - both
    out = np.zeros(tuple(n + 1 for n in spec.sizes))
    for a in np.ndindex(*out.shape):
        reached = np.zeros(spec.m, dtype=bool)
        for k, ak in enumerate(a):
            reached |= unions[k][ak]
        out[a] = caps[reached].sum()
    return out


def _trial(spec, mu, epsilon, subsets_per_profile, seed):
    rng = np.random.default_rng(seed)
    sets = _sample_sets(spec, rng)
    offsets = np.cumsum((0,) + spec.sizes)
    worst = np.zeros(mu.shape)
    for _ in range(subsets_per_profile):
        orders = [offsets[k] + rng.permutation(size)
                  for k, size in enumerate(spec.sizes)]
        M = _prefix_capacities(spec, sets, orders)
        dev = np.divide(np.abs(M - mu), mu, out=np.zeros_like(mu),
                        where=mu > 0)
        np.maximum(worst, dev, out=worst)
    return worst


def concentration_experiment(spec, epsilon, trials, subsets_per_profile=8,
                             seed=None, threads=1):
    """
    For each trial, draws an assignment and checks
    (1 - epsilon) mu(A) <= M(A) <= (1 + epsilon) mu(A) on sampled sets A of
    every profile, mu being the mean rank. The sets of one profile are
    nested prefixes of random orderings of each part. Trial t uses seed
    seed + t.
    """
    if subsets_per_profile < 1:
        raise ValueError("subsets_per_profile must be at least 1")
    seed = spec.seed if seed is None else seed
    mu = mean_cardinality_rank(spec).h

    def run(t):
        return _trial(spec, mu, epsilon, subsets_per_profile, seed + t)

    worst = helpers.thread_map(run, range(trials), threads)
    worst_rel_dev = np.array([w.max() for w in worst])
    tol = helpers.REL_TOL
    in_band = worst_rel_dev <= epsilon + tol
    profile_worst = np.max(worst, axis=0)
    return ConcentrationReport(spec, epsilon, in_band, worst_rel_dev,
                               profile_worst)


def sweep_spec(n, K=2, c=4.0, b=1.0, seed=0):
    """
    Random cluster with K parts of n classes, degree ceil(c log n) in
    every part and ceil(b n) unit servers.
    """
    m = int(math.ceil(b * n))
    d = min(int(math.ceil(c * math.log(n))), m)
    return RandomAssignmentSpec(m, (n,) * K, (d,) * K, seed=seed)


def concentration_sweep(ns, epsilon, trials, K=2, c=4.0, b=1.0,
                        subsets_per_profile=8, seed=0, threads=1):
    reports = []
    for n in ns:
        spec = sweep_spec(n, K=K, c=c, b=b, seed=seed)
        report = concentration_experiment(spec, epsilon, trials,
                                          subsets_per_profile, seed, threads)
        log_stderr("concentration: n=%d m=%d d=%d in band %d/%d"
                   % (n, spec.m, spec.degrees[0],
                      int(report.in_band.sum()), report.trials))
        reports.append(report)
    return reports


def concentration_csv(reports):
    rows = []
    for report in reports:
        rows.extend(report.rows())
    return helpers.csv_text(
        ['trial', 'n', 'epsilon', 'in_band', 'worst_rel_dev'], rows)


def kl_divergence(p, q):
    """
    H[p||q] between Bernoulli distributions of parameters p and q.
    """
    if not (0 < p < 1 and 0 < q < 1):
        raise ValueError("Bernoulli parameters must lie in (0, 1)")
    return p * math.log(p / q) + (1 - p) * math.log((1 - p) / (1 - q))


def kl_offset(epsilon):
    """
    Constant delta(epsilon) with
    H[(1 - epsilon) p_a || p_a] >= -delta + epsilon (a.d) / m.
    """
    return (1 - epsilon) * math.log(1 / (1 - epsilon)) + math.log(1 / epsilon)


def chernoff_lower_tail(m, p, epsilon):
    """
    Bound on P(M(A) <= (1 - epsilon) mu(A)) for a set reaching each server
    with probability p: the smaller of the two Chernoff forms.
    """
    small = math.exp(-epsilon ** 2 / 2.0 * m * p)
    if p >= 1:
        return small
    big = math.exp(-m * kl_divergence((1 - epsilon) * p, p))
    return min(small, big)


def small_profile_bound(a, g, n, delta):
    """
    delta (a_1 + .. + a_K) g / n, the lower bound on p_a for the profiles
    with every a_k <= n / g.
    """
    return delta * sum(a) * g / float(n)
