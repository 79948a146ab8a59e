import math
import unittest

import numpy as np

from polyfair import exact, oracle, rank
from polyfair.errors import (InstabilityError, SizeGuardError,
                             TruncationError)
from polyfair.helpers import members, popcount
from polyfair.tests.ScenarioTestBase import ScenarioTestBase, SLOW
from polyfair.tests.test_bounds import random_cluster_rank, workload_inside
from polyfair.tests.test_exact import mm1
from polyfair.tests.test_rank import fig1_rank, chain_rank


class TestBalance(ScenarioTestBase):

    def test_empty_state(self):
        self.assertEqual(oracle.balance(fig1_rank(), (0, 0)), 0.0)

    def test_single_queue(self):
        r, _ = mm1(capacity=3.0)
        cache = oracle.BalanceCache(r)
        for x in (1, 5, 40):
            self.assertAlmostEqual(oracle.balance(r, (x,), cache),
                                   -x * math.log(3.0), places=10)

    def test_fig1(self):
        self.assertAlmostEqual(oracle.balance(fig1_rank(), (1, 1)),
                               math.log(1.0 / 3), places=12)

    def test_residual(self):
        cache = oracle.BalanceCache(chain_rank())
        cache.get((4, 3, 5))
        self.assertEqual(len(cache), 5 * 4 * 6)
        for x in np.ndindex(5, 4, 6):
            self.assertLess(cache.residual(x), 1e-12)

    def test_bad_state(self):
        with self.assertRaises(ValueError):
            oracle.balance(fig1_rank(), (1, 2, 3))
        with self.assertRaises(ValueError):
            oracle.balance(fig1_rank(), (-1, 0))


class TestServiceRates(ScenarioTestBase):

    def test_single_queue(self):
        r, _ = mm1(capacity=2.0)
        for x in (1, 2, 10):
            np.testing.assert_allclose(oracle.service_rates(r, (x,)), [2.0],
                                       rtol=1e-12)

    def test_fig1(self):
        np.testing.assert_allclose(oracle.service_rates(fig1_rank(), (1, 1)),
                                   [1.5, 1.5], rtol=1e-12)
        np.testing.assert_allclose(oracle.service_rates(fig1_rank(), (3, 0)),
                                   [2, 0], rtol=1e-12)

    def test_capacity_set(self):
        r = chain_rank()
        mu = r.table()
        cache = oracle.BalanceCache(r)
        for x in np.ndindex(4, 4, 4):
            if not any(x):
                continue
            phi = oracle.service_rates(r, x, cache)
            active = sum(1 << i for i in range(3) if x[i] > 0)
            # Pareto efficiency
            self.assertAlmostEqual(phi.sum(), mu[active], places=10)
            for mask in range(1, 8):
                used = sum(phi[i] for i in members(mask))
                self.assertLessEqual(used, mu[mask] + 1e-10)

    def test_empty_state(self):
        with self.assertRaises(ValueError):
            oracle.service_rates(fig1_rank(), (0, 0))


class TestTruncated(ScenarioTestBase):

    def test_mm1(self):
        r, w = mm1(capacity=2.0, rho=1.0)
        t = oracle.stationary_truncated(r, w, 60)
        self.assertAlmostEqual(t.probability((0,)), 0.5, places=9)
        self.assertAlmostEqual(t.L_total[0], 1.0, places=9)
        self.assertAlmostEqual(t.log_probability((3,)), math.log(1 / 16),
                               places=9)
        self.assertEqual(t.log_probability((61,)), -math.inf)
        self.assertEqual(t.probability((61,)), 0.0)
        self.assertLess(t.tail_mass, oracle.TAIL_LIMIT)

    def test_fig1(self):
        w = exact.Workload.from_intensity([1, 1])
        t = oracle.stationary_truncated(fig1_rank(), w, 80)
        self.assertAlmostEqual(t.pi_sets[0], 0.2, delta=1e-6)
        np.testing.assert_allclose(t.L_total, [1.4, 1.4], atol=1e-4)
        self.assertAlmostEqual(t.pi.sum(), 1.0, places=12)

    def test_product_form(self):
        r = fig1_rank()
        w = exact.Workload([0.6, 0.9], [1.0, 1.0])
        t = oracle.stationary_truncated(r, w, 60)
        cache = oracle.BalanceCache(r)
        for x in np.ndindex(6, 6):
            for i in range(2):
                up = x[:i] + (x[i] + 1,) + x[i + 1:]
                phi = oracle.service_rates(r, up, cache)[i]
                lhs = w.arrival[i] * t.probability(x)
                rhs = phi / w.size[i] * t.probability(up)
                self.assertAlmostEqual(lhs / rhs, 1.0, places=8)

    def test_matches_exact(self):
        rng = np.random.default_rng(61)
        count = 200 if SLOW else 10
        max_n = 4 if SLOW else 3
        for _ in range(count):
            n = int(rng.integers(1, max_n + 1))
            r = random_cluster_rank(rng, n)
            w = workload_inside(rng, r, 0.4)
            t = oracle.stationary_truncated(r, w, 50 if n < 4 else 40)
            s = exact.solve_exact(r, w)
            np.testing.assert_allclose(t.pi_sets, s.pi, atol=1e-6)
            np.testing.assert_allclose(t.L_total, s.L_total, rtol=1e-4)

    def test_truncation_too_small(self):
        w = exact.Workload.from_intensity([1, 1])
        with self.assertRaises(TruncationError) as ctx:
            oracle.stationary_truncated(fig1_rank(), w, 3)
        self.assertEqual(ctx.exception.context['N'], 3)

    def test_guards(self):
        r = rank.RankFunction(5, func=popcount)
        with self.assertRaises(SizeGuardError):
            oracle.stationary_truncated(
                r, exact.Workload.from_intensity([0.1] * 5), 10)
        with self.assertRaises(InstabilityError) as ctx:
            oracle.stationary_truncated(
                fig1_rank(), exact.Workload.from_intensity([2, 2]), 10)
        self.assertEqual(ctx.exception.context['subset'], [0, 1])
        self.assertEqual(ctx.exception.context['margin'], -1)


class TestSimulate(ScenarioTestBase):

    def test_fig1(self):
        w = exact.Workload.from_intensity([1, 1])
        est = oracle.simulate(fig1_rank(), w, events=50000, seed=1)
        self.assertFalse(est.diverged)
        self.assertEqual(est.events, 50000)
        self.assertTrue(np.all(est.stderr > 0))
        np.testing.assert_allclose(est.mean, [1.4, 1.4], atol=0.3)

    def test_mm1(self):
        r, w = mm1(capacity=2.0, rho=1.0)
        est = oracle.simulate(r, w, events=50000, seed=2)
        self.assertAlmostEqual(est.mean[0], 1.0, delta=0.25)

    def test_reproducible(self):
        w = exact.Workload.from_intensity([1, 1])
        one = oracle.simulate(fig1_rank(), w, events=5000, seed=3)
        again = oracle.simulate(fig1_rank(), w, events=5000, seed=3)
        other = oracle.simulate(fig1_rank(), w, events=5000, seed=4)
        np.testing.assert_array_equal(one.mean, again.mean)
        self.assertFalse(np.array_equal(one.mean, other.mean))

    def test_divergence(self):
        w = exact.Workload.from_intensity([2, 2])
        est = oracle.simulate(fig1_rank(), w, events=100000, seed=5, cap=50)
        self.assertTrue(est.diverged)
        self.assertLess(est.events, 100000)

    def test_phase_rates(self):
        size = np.array([1.0, 2.5])
        probs, rates = oracle._phase_rates(size, 'hyperexponential')
        mean = (probs / rates).sum(axis=1)
        second = (2 * probs / rates ** 2).sum(axis=1)
        np.testing.assert_allclose(mean, size, rtol=1e-12)
        np.testing.assert_allclose(second / size ** 2 - 1, oracle.HYPER_SCV,
                                   rtol=1e-12)
        probs, rates = oracle._phase_rates(size, 'exponential')
        np.testing.assert_allclose(1 / rates[:, 0], size)
        with self.assertRaises(ValueError):
            oracle._phase_rates(size, 'pareto')

    @unittest.skipUnless(SLOW, "set POLYFAIR_SLOW_TESTS=1")
    def test_insensitivity(self):
        w = exact.Workload.from_intensity([1, 1])
        for distribution in ('exponential', 'hyperexponential'):
            est = oracle.simulate(fig1_rank(), w, distribution=distribution,
                                  events=1000000, seed=7)
            self.assertTrue(np.all(np.abs(est.mean - 1.4)
                                   < 3.5 * est.stderr))

    def test_csv(self):
        est = oracle.SimEstimate(np.array([1.5, 1.3]), np.array([0.1, 0.1]),
                                 100, 50.0, False)
        lines = oracle.estimate_csv(est, reference=[1.4, 1.4]).splitlines()
        self.assertEqual(lines[0], "queue,L,stderr,exact_L")
        self.assertEqual(len(lines), 3)
        lines = oracle.estimate_csv(est).splitlines()
        self.assertEqual(lines[0], "queue,L,stderr")


if __name__ == '__main__':
    unittest.main()
