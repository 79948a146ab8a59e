import unittest

import numpy as np

from polyfair import exact, helpers, polysym, rank
from polyfair.errors import InstabilityError, NumericRangeError
from polyfair.random_cluster import RandomAssignmentSpec, mean_cardinality_rank
from polyfair.tests.ScenarioTestBase import ScenarioTestBase, SLOW
from polyfair.tests.test_rank import fig7_rank


def concave_h(rng, n):
    increments = np.sort(rng.uniform(0.2, 2.0, n))[::-1]
    return rank.CardinalityRank((n,), np.concatenate([[0], np.cumsum(increments)]))


def random_poly_symmetric(rng, max_n):
    """
    A random cardinality rank on K = 1..3 parts, the mean rank of a
    random assignment so that it is always a polymatroid.
    """
    K = int(rng.integers(1, 4))
    sizes = [int(rng.integers(1, max(2, max_n // K) + 1)) for _ in range(K)]
    while sum(sizes) > max_n:
        sizes[int(np.argmax(sizes))] -= 1
    m = int(rng.integers(5, 30))
    degrees = [int(rng.integers(1, m + 1)) for _ in range(K)]
    return mean_cardinality_rank(RandomAssignmentSpec(m, sizes, degrees))


def inside_workload(rng, h, load):
    """
    Random part intensities scaled to the given fraction of the
    boundary of h.
    """
    intensity = rng.uniform(0.2, 1.0, h.K)
    loads = intensity @ helpers.grid_layout(h.shape).coords
    ratio = h.h.ravel()[1:] / loads[1:]
    return polysym.GridWorkload(h.sizes, intensity * load * ratio.min())


class TestSolvePolysym(ScenarioTestBase):

    def test_two_symmetric_queues(self):
        h = rank.CardinalityRank((2,), [0, 2, 3])
        g = polysym.solve_polysym(h, polysym.GridWorkload((2,), [1]))
        np.testing.assert_allclose(g.pi, [0.2, 0.4, 0.4], rtol=1e-12)
        self.assertAlmostEqual(g.L(0, (1,)), 2.0, places=12)
        self.assertAlmostEqual(g.L(0, (2,)), 5.0, places=12)
        self.assertAlmostEqual(g.L_part[0], 2.8, places=12)
        self.assertAlmostEqual(g.pi0, 0.2, places=12)

    def test_single_queue(self):
        h = rank.CardinalityRank((1,), [0, 3])
        g = polysym.solve_polysym(h, polysym.GridWorkload((1,), [1.2]))
        self.assertAlmostEqual(g.pi[1] / g.pi[0], 1.2 / (3 - 1.2), places=12)

    def test_fig7_matches_subsets(self):
        p = rank.Partition([[0, 2], [1]])
        r = fig7_rank()
        h = rank.cardinality_rank_from(r, p)
        w = polysym.GridWorkload(h.sizes, [0.3, 0.5])
        g = polysym.solve_polysym(h, w)
        s = exact.solve_exact(r, exact.Workload.from_intensity([0.3, 0.5, 0.3]))
        pi, products = polysym.aggregate_by_profile(s, p)
        np.testing.assert_allclose(g.pi, pi, rtol=1e-10)
        np.testing.assert_allclose(g.products, products, rtol=1e-10,
                                   atol=1e-15)

        check = polysym.expand_and_check(h, w)
        self.assertLess(check.rel_pi, 1e-10)
        self.assertLess(check.rel_products, 1e-10)

    def test_symmetric_random_h(self):
        rng = np.random.default_rng(17)
        h = concave_h(rng, 6)
        w = inside_workload(rng, h, 0.7)
        check = polysym.expand_and_check(h, w)
        self.assertLess(check.rel_pi, 1e-10)
        self.assertLess(check.rel_products, 1e-10)

    def test_random_poly_symmetric(self):
        rng = np.random.default_rng(23)
        count = 100 if SLOW else 15
        max_n = 12 if SLOW else 9
        for _ in range(count):
            h = random_poly_symmetric(rng, max_n)
            w = inside_workload(rng, h, rng.uniform(0.3, 0.9))
            check = polysym.expand_and_check(h, w)
            self.assertLess(check.rel_pi, 1e-10)
            self.assertLess(check.rel_products, 1e-10)

    def test_relabeled_parts(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            h = random_poly_symmetric(rng, 8)
            w = inside_workload(rng, h, rng.uniform(0.3, 0.9))
            order = list(rng.permutation(h.K))
            # part k of the relabeled system is part order[k]
            relabeled = rank.CardinalityRank([h.sizes[k] for k in order],
                                             np.transpose(h.h, order))
            w_relabeled = polysym.GridWorkload(
                relabeled.sizes, w.intensity[order], w.arrival[order])
            L = polysym.solve_polysym(h, w).L_part
            L_relabeled = polysym.solve_polysym(relabeled, w_relabeled).L_part
            np.testing.assert_allclose(L_relabeled, L[order], rtol=1e-10)

    def test_light_traffic(self):
        h = polysym.grid_cluster_rank(2, 3)
        g = polysym.solve_polysym(h, polysym.GridWorkload(h.sizes, [1e-9, 1e-9]))
        self.assertAlmostEqual(g.pi0, 1.0, places=6)

    def test_unstable(self):
        h = rank.CardinalityRank((2,), [0, 2, 3])
        with self.assertRaises(InstabilityError) as ctx:
            polysym.solve_polysym(h, polysym.GridWorkload((2,), [1.6]))
        self.assertEqual(ctx.exception.context['profile'], [2])

    def test_rescaling(self):
        h = polysym.grid_cluster_rank(3, 3)
        w = polysym.GridWorkload(h.sizes, [0.5, 0.5])
        plain = polysym.solve_polysym(h, w, renormalize=None)
        scaled = polysym.solve_polysym(h, w, renormalize=1.5)
        self.assertGreater(scaled.renormalizations, 0)
        np.testing.assert_allclose(plain.L_part, scaled.L_part, rtol=1e-12)
        np.testing.assert_allclose(plain.pi, scaled.pi, rtol=1e-12)

    def test_large_grid(self):
        n = 2000
        h = rank.CardinalityRank((n,), np.minimum(np.arange(n + 1), 1000.0))
        w = polysym.GridWorkload((n,), [0.3])
        with self.assertRaises(NumericRangeError):
            polysym.solve_polysym(h, w, renormalize=None)
        g = polysym.solve_polysym(h, w)
        self.assertGreater(g.renormalizations, 0)
        self.assertAlmostEqual(float(np.exp(g.log_pi).sum()), 1.0, places=9)
        # below 1000 active users the queues are independent M/M/1 queues
        self.assertAlmostEqual(g.L_part[0] / (n * 0.3 / 0.7), 1.0, places=6)

    def test_mean_delay(self):
        h = polysym.grid_cluster_rank(2, 3)
        w = polysym.GridWorkload(h.sizes, [0.2, 0.3])
        fast = polysym.GridWorkload(h.sizes, [0.2, 0.3], arrival=[0.4, 0.6])
        g = polysym.solve_polysym(h, w)
        g_fast = polysym.solve_polysym(h, fast)
        np.testing.assert_allclose(g.L_part, g_fast.L_part, rtol=1e-12)
        np.testing.assert_allclose(polysym.mean_delay(g, w),
                                   2 * polysym.mean_delay(g_fast, fast),
                                   rtol=1e-12)
        single = rank.CardinalityRank((1,), [0, 2])
        w1 = polysym.GridWorkload((1,), [0.5], arrival=[0.25])
        delay = polysym.mean_delay(polysym.solve_polysym(single, w1), w1)
        self.assertAlmostEqual(delay[0], (0.5 / 1.5) / 0.25, places=12)


class TestAccessTree(ScenarioTestBase):

    def test_lone_user(self):
        for rate, shared in ((2, 3), (3, 2)):
            h = polysym.access_tree_rank([rate], shared, [1])
            w = polysym.GridWorkload((1,), [0.5])
            g = polysym.solve_polysym(h, w)
            gamma = polysym.access_tree_throughput(g, w)
            self.assertAlmostEqual(gamma[0], min(rate, shared), places=12)

    def test_matches_subsets(self):
        h = polysym.access_tree_rank([2], 3, [2])
        w = polysym.GridWorkload((2,), [1])
        gamma = polysym.access_tree_throughput(polysym.solve_polysym(h, w), w)
        self.assertAlmostEqual(gamma[0], 1 / 0.6, places=12)

        h = polysym.access_tree_rank([1, 2], 3, [2, 2])
        w = polysym.GridWorkload(h.sizes, [0.3, 0.4])
        gamma = polysym.access_tree_throughput(polysym.solve_polysym(h, w), w)
        ew = w.expand()
        m = exact.metrics(exact.solve_exact(h.expand(), ew), ew)
        np.testing.assert_allclose(gamma, m.throughput[[0, 2]], rtol=1e-10)
        np.testing.assert_allclose(m.throughput[0], m.throughput[1],
                                   rtol=1e-12)

    def test_light_traffic(self):
        h = polysym.access_tree_rank([1, 2], 2.5, [3, 2])
        w = polysym.GridWorkload(h.sizes, [1e-7, 1e-7])
        gamma = polysym.access_tree_throughput(polysym.solve_polysym(h, w), w)
        np.testing.assert_allclose(gamma, [1, 2], rtol=1e-5)


class TestGridCluster(ScenarioTestBase):

    def test_values(self):
        h = polysym.grid_cluster_rank(2, 3)
        self.assertEqual(h((1, 1)), 4)
        self.assertEqual(h((3, 2)), 6)
        for a2 in range(3):
            self.assertEqual(h((0, a2)), 3 * a2)

    def test_csv(self):
        h = polysym.grid_cluster_rank(2, 3)
        w = polysym.GridWorkload(h.sizes, [0.2, 0.2])
        g = polysym.solve_polysym(h, w)
        lines = polysym.grid_csv(g).splitlines()
        self.assertEqual(lines[0], "a1,a2,pi,L1,L2")
        self.assertEqual(len(lines), 1 + 12)
        lines = polysym.part_csv(g, w).splitlines()
        self.assertEqual(lines[0], "part,size,intensity,L,delay")


if __name__ == '__main__':
    unittest.main()
