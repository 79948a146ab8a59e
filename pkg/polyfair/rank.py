#
# Polymatroid rank functions: construction, validation and
# poly-symmetry detection.
#
# Subsets of queue indices are bitmasks; queue i (0-based) is bit i.
#

import functools
from collections import namedtuple

import numpy as np

from polyfair import helpers
from polyfair.errors import (SizeGuardError, LaminarityError,
                             NotPolySymmetricError, AmbiguousProfileError,
                             PolymatroidError)
from polyfair.helpers import (members, popcount, popcounts, slack,
                              format_subset, log_stderr)

MAX_VALIDATE_N = 16
MAX_EXCHANGE_N = 24
MAX_TABLE_N = 24
MAX_MASK_N = 64


class RankFunction(object):
    """
    A set function on the subsets of {0..n-1}, given either by a callable
    on bitmasks or by a table of all 2^n values. Instances are treated as
    immutable; values computed from the callable are memoized.
    """

    def __init__(self, n, func=None, table=None, name="rank"):
        if n < 1 or n > MAX_MASK_N:
            raise SizeGuardError(
                "queue count %d outside 1..%d" % (n, MAX_MASK_N), n=n)
        if func is None and table is None:
            raise ValueError("RankFunction needs a callable or a table")
        self.n = n
        self.name = name
        self._func = func
        self._table = None
        if table is not None:
            table = np.array(table, dtype=float)
            if table.shape != (1 << n,):
                raise PolymatroidError(
                    "rank table must hold 2^%d values, got %d"
                    % (n, table.size), n=n)
            table.setflags(write=False)
            self._table = table
        if self._func is not None:
            self._func = functools.lru_cache(maxsize=None)(self._func)

    @classmethod
    def from_sets(cls, n, values, name="rank"):
        """
        Builds a rank function from a mapping of subsets (iterables of
        0-based indices) to capacities. Every nonempty subset must be
        present; the empty set defaults to 0.
        """
        table = np.full(1 << n, np.nan)
        table[0] = 0.0
        for subset, value in values.items():
            table[helpers.mask_of(subset)] = float(value)
        missing = np.flatnonzero(np.isnan(table))
        if missing.size:
            raise PolymatroidError(
                "rank not given for subset %s" % format_subset(int(missing[0])),
                subset=members(int(missing[0])))
        return cls(n, table=table, name=name)

    def __call__(self, mask):
        if self._table is not None:
            return float(self._table[mask])
        return float(self._func(int(mask)))

    def table(self):
        """
        All 2^n values as a read-only numpy array, indexed by bitmask.
        """
        if self._table is None:
            if self.n > MAX_TABLE_N:
                raise SizeGuardError(
                    "n=%d is too large to tabulate the rank (limit %d)"
                    % (self.n, MAX_TABLE_N), n=self.n, limit=MAX_TABLE_N)
            table = np.fromiter(
                (self._func(mask) for mask in range(1 << self.n)),
                dtype=float, count=1 << self.n)
            table.setflags(write=False)
            self._table = table
        return self._table

    def full_mask(self):
        return (1 << self.n) - 1

    def scaled(self, factor):
        if self._table is not None:
            return RankFunction(self.n, table=self._table * factor,
                                name=self.name)
        func = self._func
        return RankFunction(self.n, func=lambda mask: factor * func(mask),
                            name=self.name)

    def restrict(self, keep):
        """
        The rank A -> mu(A & keep): queues outside the mask keep get no
        capacity. Still a polymatroid rank when mu is one.
        """
        if self._table is not None:
            masks = np.arange(1 << self.n, dtype=np.int64)
            return RankFunction(self.n, table=self._table[masks & keep],
                                name=self.name)
        func = self._func
        return RankFunction(self.n, func=lambda mask: func(mask & keep),
                            name=self.name)

    def __repr__(self):
        return "RankFunction(n=%d, name=%r)" % (self.n, self.name)


Violation = namedtuple('Violation', ['axiom', 'first', 'second', 'detail'])


class ValidationReport(object):

    def __init__(self, n, violations):
        self.n = n
        self.violations = tuple(violations)

    @property
    def ok(self):
        return not self.violations

    def axioms_violated(self):
        return [v.axiom for v in self.violations]

    def summary(self):
        if self.ok:
            return "polymatroid axioms hold (n=%d)" % self.n
        lines = []
        for v in self.violations:
            lines.append("%s violated: %s, %s (%s)" % (
                v.axiom, format_subset(v.first), format_subset(v.second),
                v.detail))
        return "; ".join(lines)


def _without_bits(n, bits):
    masks = np.arange(1 << n, dtype=np.int64)
    return masks[(masks & bits) == 0]


def validate_polymatroid(r):
    """
    Exhaustive check of normalization, monotonicity and submodularity.
    Submodularity is checked in its local form
    mu(A+i) + mu(A+j) >= mu(A+i+j) + mu(A), which is equivalent and
    already yields a witnessing pair (A+i, A+j). One witness is
    reported per violated axiom.
    """
    if r.n > MAX_VALIDATE_N:
        raise SizeGuardError(
            "n=%d is too large for exhaustive validation (limit %d)"
            % (r.n, MAX_VALIDATE_N), n=r.n, limit=MAX_VALIDATE_N)
    t = r.table()
    n = r.n
    violations = []

    if abs(t[0]) > helpers.ABS_TOL:
        violations.append(Violation(
            'normalization', 0, 0, "mu(empty)=%g" % t[0]))

    for i in range(n):
        bit = 1 << i
        base = _without_bits(n, bit)
        lo, hi = t[base], t[base | bit]
        tol = np.maximum(helpers.REL_TOL * np.maximum(abs(lo), abs(hi)),
                         helpers.ABS_TOL)
        bad = np.flatnonzero(lo - hi > tol)
        if bad.size:
            a = int(base[bad[0]])
            violations.append(Violation(
                'monotonicity', a, a | bit,
                "mu(%s)=%g > mu(%s)=%g" % (format_subset(a), t[a],
                                           format_subset(a | bit),
                                           t[a | bit])))
            break

    found = False
    for i in range(n):
        for j in range(i + 1, n):
            bi, bj = 1 << i, 1 << j
            base = _without_bits(n, bi | bj)
            lhs = t[base | bi] + t[base | bj]
            rhs = t[base | bi | bj] + t[base]
            scale = np.maximum(np.maximum(abs(t[base | bi]), abs(t[base | bj])),
                               np.maximum(abs(t[base | bi | bj]), abs(t[base])))
            tol = np.maximum(helpers.REL_TOL * scale, helpers.ABS_TOL)
            bad = np.flatnonzero(rhs - lhs > tol)
            if bad.size:
                a = int(base[bad[0]])
                violations.append(Violation(
                    'submodularity', a | bi, a | bj,
                    "%g + %g < %g + %g" % (t[a | bi], t[a | bj],
                                           t[a | bi | bj], t[a])))
                found = True
                break
        if found:
            break

    return ValidationReport(n, violations)


def require_polymatroid(r):
    report = validate_polymatroid(r)
    if not report.ok:
        v = report.violations[0]
        raise PolymatroidError(report.summary(), axiom=v.axiom,
                               first=members(v.first),
                               second=members(v.second))
    return report


#
# Tree data networks
#

class TreeTopology(object):
    """
    A laminar family of links over n users. Links are given as
    (users, capacity) pairs where users is a bitmask or an iterable of
    0-based user indices.

    On construction the family is normalized: the full set is inserted
    when missing (with the summed capacity of the maximal links),
    duplicated link sets keep their smallest capacity, and links that
    are not constraining are pruned. 'inserted_root' and 'pruned'
    record what was done.
    """

    def __init__(self, n, links):
        if n < 1 or n > MAX_MASK_N:
            raise SizeGuardError(
                "user count %d outside 1..%d" % (n, MAX_MASK_N), n=n)
        self.n = n
        full = (1 << n) - 1
        capacities = {}
        for users, capacity in links:
            mask = users if isinstance(users, int) else helpers.mask_of(users)
            if mask == 0 or mask & ~full:
                raise LaminarityError(
                    "link %s is empty or names users outside 1..%d"
                    % (format_subset(mask), n), link=members(mask))
            capacity = float(capacity)
            if not capacity > 0:
                raise LaminarityError(
                    "link %s has non-positive capacity %g"
                    % (format_subset(mask), capacity), link=members(mask))
            if mask in capacities:
                capacity = min(capacity, capacities[mask])
            capacities[mask] = capacity

        masks = sorted(capacities)
        for x in range(len(masks)):
            for y in range(x + 1, len(masks)):
                L, M = masks[x], masks[y]
                if L & M and (L & M) != L and (L & M) != M:
                    raise LaminarityError(
                        "links %s and %s cross" % (format_subset(L),
                                                   format_subset(M)),
                        first=members(L), second=members(M))

        self.inserted_root = False
        if full not in capacities:
            maximal = [L for L in capacities
                       if not any(L != M and L & M == L for M in capacities)]
            capacities[full] = sum(capacities[L] for L in maximal)
            self.inserted_root = True
            log_stderr("# tree: inserted root link %s with capacity %g"
                       % (format_subset(full), capacities[full]))

        self.declared = tuple(sorted(capacities.items()))
        forest = _build_forest(capacities)
        self.pruned = tuple(
            L for L in sorted(capacities)
            if _evaluate_forest(forest, L) < capacities[L] - slack(capacities[L]))
        for L in self.pruned:
            log_stderr("# tree: link %s (capacity %g) is not constraining, pruned"
                       % (format_subset(L), capacities[L]))
        self.links = tuple((L, c) for L, c in sorted(capacities.items())
                           if L not in self.pruned)
        self._forest = _build_forest(dict(self.links))

    def capacity(self, mask):
        return dict(self.links)[mask]

    def evaluate(self, mask):
        return _evaluate_forest(self._forest, mask)


# a forest node: (mask, capacity, children)
def _build_forest(capacities):
    masks = sorted(capacities, key=lambda L: (-popcount(L), L))
    children = dict((L, []) for L in masks)
    roots = []
    for x, L in enumerate(masks):
        parent = None
        for M in reversed(masks[:x]):
            if M != L and M & L == L:
                parent = M
                break
        if parent is None:
            roots.append(L)
        else:
            children[parent].append(L)

    def node(L):
        return (L, capacities[L], tuple(node(c) for c in children[L]))

    return tuple(node(L) for L in roots)


def _cover_cost(node, mask):
    L, capacity, children = node
    inside = mask & L
    if not inside:
        return 0.0
    total = 0.0
    covered = 0
    for child in children:
        covered |= child[0]
        if inside & child[0]:
            total += _cover_cost(child, inside)
    if inside & ~covered:
        return capacity
    return min(capacity, total)


def _evaluate_forest(forest, mask):
    total = 0.0
    covered = 0
    for root in forest:
        covered |= root[0]
        total += _cover_cost(root, mask)
    if mask & ~covered:
        return float('inf')
    return total


def tree_rank(t):
    """
    Rank function of a tree data network: the cheapest family of
    disjoint links covering A, computed bottom-up over the laminar
    tree (each link costs the smaller of its capacity and the covers
    of its children).
    """
    return RankFunction(t.n, func=t.evaluate, name="tree")


#
# Computer clusters
#

class ClusterAssignment(object):
    """
    Assignment graph of a computer cluster: class i (0-based) can be
    served by the servers in assign[i] (0-based server indices).
    """

    def __init__(self, n, m, capacities, assign):
        if len(assign) != n:
            raise PolymatroidError(
                "assignment lists %d classes, expected %d" % (len(assign), n))
        capacities = tuple(float(c) for c in capacities)
        if len(capacities) != m:
            raise PolymatroidError(
                "%d server capacities given, expected %d"
                % (len(capacities), m))
        if any(c < 0 for c in capacities):
            raise PolymatroidError("server capacities must be nonnegative")
        assign = tuple(frozenset(int(s) for s in servers) for servers in assign)
        for i, servers in enumerate(assign):
            if not servers:
                raise PolymatroidError(
                    "class %d has no server" % (i + 1), queue=i + 1)
            if min(servers) < 0 or max(servers) >= m:
                raise PolymatroidError(
                    "class %d uses a server outside 1..%d" % (i + 1, m),
                    queue=i + 1)
        self.n = n
        self.m = m
        self.capacities = capacities
        self.assign = assign
        self.server_masks = tuple(helpers.mask_of(s) for s in assign)
        self._uniform = len(set(capacities)) == 1

    def union_capacity(self, servers_mask):
        if self._uniform:
            return popcount(servers_mask) * self.capacities[0]
        return sum(self.capacities[s] for s in members(servers_mask))

    def evaluate(self, mask):
        union = 0
        for i in members(mask):
            union |= self.server_masks[i]
        return self.union_capacity(union)

    def incidence(self):
        out = np.zeros((self.n, self.m), dtype=bool)
        for i, servers in enumerate(self.assign):
            out[i, sorted(servers)] = True
        return out


def cluster_rank(c):
    """
    Aggregate capacity of the servers able to serve at least one class
    of A.
    """
    return RankFunction(c.n, func=c.evaluate, name="cluster")


#
# Exchangeability and poly-symmetry
#

class Partition(object):
    """
    Ordered partition of {0..n-1} into nonempty parts.
    """

    def __init__(self, parts, n=None):
        parts = tuple(tuple(sorted(int(i) for i in part)) for part in parts)
        if n is None:
            n = sum(len(part) for part in parts)
        seen = set()
        for part in parts:
            if not part:
                raise PolymatroidError("partition has an empty part")
            for i in part:
                if i in seen:
                    raise PolymatroidError(
                        "index %d appears in two parts" % (i + 1), queue=i + 1)
                seen.add(i)
        if seen != set(range(n)):
            missing = sorted(set(range(n)) - seen)
            raise PolymatroidError(
                "partition does not cover {1..%d} (missing %s)"
                % (n, [i + 1 for i in missing]))
        self.n = n
        self.parts = parts
        self.sizes = tuple(len(part) for part in parts)
        self.part_masks = tuple(helpers.mask_of(part) for part in parts)

    @classmethod
    def contiguous(cls, sizes):
        parts = []
        start = 0
        for size in sizes:
            parts.append(range(start, start + size))
            start += size
        return cls(parts)

    @classmethod
    def singletons(cls, n):
        return cls([[i] for i in range(n)])

    def part_of(self, i):
        for k, part in enumerate(self.parts):
            if i in part:
                return k
        raise IndexError(i)

    def profile(self, mask):
        return tuple(popcount(mask & pm) for pm in self.part_masks)

    def __eq__(self, other):
        return isinstance(other, Partition) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __repr__(self):
        return "Partition(%s)" % ", ".join(
            "{" + ",".join(str(i + 1) for i in part) + "}"
            for part in self.parts)


def exchange_witness(r, i, j):
    """
    Returns None if i and j are exchangeable in r, otherwise a subset
    A (bitmask, avoiding i and j) with mu(A+i) != mu(A+j).
    """
    if i == j:
        raise ValueError("exchangeability needs two distinct indices")
    if r.n > MAX_EXCHANGE_N:
        raise SizeGuardError(
            "n=%d is too large for the exchangeability scan (limit %d)"
            % (r.n, MAX_EXCHANGE_N), n=r.n, limit=MAX_EXCHANGE_N)
    bi, bj = 1 << i, 1 << j
    rest = r.full_mask() & ~(bi | bj)
    a = rest
    while True:
        # every submask of rest, the empty set last
        if not helpers.isclose(r(a | bi), r(a | bj)):
            return a
        if a == 0:
            return None
        a = (a - 1) & rest


def exchangeable(r, i, j):
    if i == j:
        raise ValueError("exchangeability needs two distinct indices")
    if not helpers.isclose(r(1 << i), r(1 << j)):
        return False
    return exchange_witness(r, i, j) is None


def exchangeability_partition(r):
    """
    Quotient of {0..n-1} by the exchangeability relation, parts sorted
    by their smallest member. Each new index is only compared with the
    smallest member of the classes found so far.
    """
    if r.n > MAX_EXCHANGE_N:
        raise SizeGuardError(
            "n=%d is too large for the exchangeability scan (limit %d)"
            % (r.n, MAX_EXCHANGE_N), n=r.n, limit=MAX_EXCHANGE_N)
    classes = []
    for i in range(r.n):
        for cls in classes:
            if exchangeable(r, cls[0], i):
                cls.append(i)
                break
        else:
            classes.append([i])
    return Partition(classes, r.n)


class CardinalityRank(object):
    """
    Cardinality rank function h on the grid prod_k {0..n_k}.
    """

    def __init__(self, sizes, h, name="h"):
        self.sizes = tuple(int(n) for n in sizes)
        h = np.array(h, dtype=float)
        shape = tuple(n + 1 for n in self.sizes)
        if h.shape != shape:
            raise PolymatroidError(
                "cardinality rank has shape %s, expected %s" % (h.shape, shape))
        h.setflags(write=False)
        self.h = h
        self.name = name

    @classmethod
    def from_function(cls, sizes, func, name="h"):
        shape = tuple(int(n) + 1 for n in sizes)
        h = np.zeros(shape)
        for a in np.ndindex(*shape):
            h[a] = func(a)
        return cls(sizes, h, name=name)

    @property
    def K(self):
        return len(self.sizes)

    @property
    def shape(self):
        return self.h.shape

    def __call__(self, a):
        return float(self.h[tuple(a)])

    def scaled(self, factor):
        return CardinalityRank(self.sizes, self.h * factor, name=self.name)

    def partition(self):
        return Partition.contiguous(self.sizes)

    def expand(self):
        """
        The induced set function mu(A) = h(|A|) on sum(n_k) queues,
        part k being a contiguous block of indices.
        """
        n = sum(self.sizes)
        if n > MAX_TABLE_N:
            raise SizeGuardError(
                "cannot expand a grid of %d queues (limit %d)"
                % (n, MAX_TABLE_N), n=n, limit=MAX_TABLE_N)
        p = self.partition()
        masks = np.arange(1 << n, dtype=np.int64)
        counts = popcounts(n)
        index = tuple(counts[masks & pm] for pm in p.part_masks)
        return RankFunction(n, table=self.h[index], name=self.name)

    def check_invariants(self):
        """
        Returns a list of problems with h(0) = 0 and componentwise
        monotonicity (empty when both hold).
        """
        problems = []
        if abs(self.h.flat[0]) > helpers.ABS_TOL:
            problems.append("h(0)=%g" % self.h.flat[0])
        for k in range(self.K):
            diff = np.diff(self.h, axis=k)
            upper = np.delete(self.h, 0, axis=k)
            tol = np.maximum(helpers.REL_TOL * abs(upper), helpers.ABS_TOL)
            bad = np.argwhere(diff < -tol)
            if bad.size:
                a = tuple(int(x) for x in bad[0])
                problems.append("h decreases along part %d at %s"
                                % (k + 1, helpers.format_profile(a)))
        return problems

    def __repr__(self):
        return "CardinalityRank(sizes=%s)" % (self.sizes,)


def cardinality_rank_from(r, p):
    """
    Reads the cardinality rank off a rank function that is poly-symmetric
    with respect to p; raises NotPolySymmetricError with two subsets of
    equal profile but different rank otherwise.
    """
    if r.n != p.n:
        raise ValueError("partition covers %d indices, rank has %d"
                         % (p.n, r.n))
    t = r.table()
    masks = np.arange(1 << r.n, dtype=np.int64)
    counts = popcounts(r.n)
    shape = tuple(size + 1 for size in p.sizes)
    strides = [int(np.prod(shape[k + 1:])) for k in range(len(shape))]
    flat = np.zeros(1 << r.n, dtype=np.int64)
    for k, pm in enumerate(p.part_masks):
        flat += counts[masks & pm] * strides[k]

    n_cells = int(np.prod(shape))
    lo = np.full(n_cells, np.inf)
    hi = np.full(n_cells, -np.inf)
    np.minimum.at(lo, flat, t)
    np.maximum.at(hi, flat, t)
    tol = np.maximum(helpers.REL_TOL * np.maximum(abs(lo), abs(hi)),
                     helpers.ABS_TOL)
    bad = np.flatnonzero(hi - lo > tol)
    if bad.size:
        cell = int(bad[0])
        group = np.flatnonzero(flat == cell)
        first = int(group[np.argmin(t[group])])
        second = int(group[np.argmax(t[group])])
        raise NotPolySymmetricError(
            "not poly-symmetric w.r.t. given partition: mu(%s)=%g but mu(%s)=%g"
            % (format_subset(first), t[first], format_subset(second),
               t[second]),
            first=members(first), second=members(second))
    return CardinalityRank(p.sizes, lo.reshape(shape), name=r.name)


def tree_cardinality_rank(t, p, verify=True):
    """
    Cardinality rank of a tree network, built on the grid: f(a) is the
    capacity of the link with profile a, or the cheapest split of a into
    two nonzero profiles; h(a) is then the smallest f(b) over b >= a.
    With verify, trees of at most 12 users are checked against the
    exhaustive cardinality_rank_from.
    """
    if t.n != p.n:
        raise ValueError("partition covers %d indices, tree has %d users"
                         % (p.n, t.n))
    shape = tuple(size + 1 for size in p.sizes)
    link_profiles = {}
    for mask, capacity in t.links:
        a = p.profile(mask)
        if a in link_profiles and not helpers.isclose(link_profiles[a],
                                                      capacity):
            raise AmbiguousProfileError(
                "two links share profile %s with capacities %g and %g"
                % (helpers.format_profile(a), link_profiles[a], capacity),
                profile=list(a))
        link_profiles[a] = capacity

    f = np.full(shape, np.inf)
    f[(0,) * len(shape)] = 0.0
    for a, capacity in link_profiles.items():
        f[a] = capacity
    layout = helpers.grid_layout(shape)
    for shell in layout.shells[1:]:
        for cell in shell:
            a = tuple(int(x) for x in layout.coords[:, cell])
            if a in link_profiles:
                continue
            block = f[tuple(slice(0, x + 1) for x in a)]
            splits = block + block[(slice(None, None, -1),) * len(a)]
            splits[(0,) * len(a)] = np.inf
            splits[a] = np.inf
            f[a] = splits.min()

    h = f
    for k in range(len(shape)):
        h = np.flip(np.minimum.accumulate(np.flip(h, k), axis=k), k)
    result = CardinalityRank(p.sizes, h, name="tree")

    if verify and t.n <= 12:
        exhaustive = cardinality_rank_from(tree_rank(t), p)
        tol = np.maximum(helpers.REL_TOL * abs(exhaustive.h), helpers.ABS_TOL)
        bad = np.argwhere(abs(exhaustive.h - result.h) > tol)
        if bad.size:
            a = tuple(int(x) for x in bad[0])
            raise NotPolySymmetricError(
                "tree is not poly-symmetric w.r.t. given partition at "
                "profile %s" % helpers.format_profile(a), profile=list(a))
    return result


def access_tree_topology(rates, shared, sizes):
    """
    Tree with one access line per user (rate rates[k] for the users of
    part k, parts laid out contiguously) and one shared aggregation link.
    """
    links = []
    i = 0
    for rate, size in zip(rates, sizes):
        for _ in range(size):
            links.append(([i], rate))
            i += 1
    links.append((range(i), shared))
    return TreeTopology(i, links)


def grid_cluster_assignment(d1, d2):
    """
    Cluster of d1*d2 unit servers where each of the d2 classes of the
    first part has its own row of d1 servers and each of the d1 classes
    of the second part has its own column of d2 servers, so that any two
    classes of different parts share exactly one server.
    """
    assign = []
    for i in range(d2):
        assign.append([i * d1 + j for j in range(d1)])
    for i in range(d1):
        assign.append([i + j * d1 for j in range(d2)])
    return ClusterAssignment(d1 + d2, d1 * d2, [1.0] * (d1 * d2), assign)
