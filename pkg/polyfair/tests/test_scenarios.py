import glob
import io
import json
import os
import unittest
from unittest import mock

from lxml import etree

import polyfair
from polyfair import cli, plot
from polyfair.errors import LaminarityError, ScenarioError
from polyfair.tests.ScenarioTestBase import ScenarioTestBase

# reduced sizes of the long scenarios
QUICK = {
    'fig1_simulate': {'events': 20000},
    'fig1_simulate_hyperexponential': {'events': 20000},
    'fig8_bounds': {'servers': 500, 'sizes': [50, 50], 'degrees': [5, 10],
                    'alpha_points': 5},
    'random_cluster_concentration': {'ns': [20, 40], 'trials': 5},
}

FAILING = {'crossing_tree': 3, 'unstable': 3, 'unstable_grid': 3,
           'malformed': 2}

ARTIFACTS = {
    'exact': ['queues.csv', 'subsets.csv'],
    'polysym': ['parts.csv'],
    'simulate': ['simulation.csv'],
    'concentration': ['concentration.csv'],
}


def run_cli(argv):
    with mock.patch('sys.stdout', new_callable=io.StringIO) as out:
        status = cli.main(argv)
    return status, out.getvalue()


class TestFig1Exact(ScenarioTestBase):
    _scenario = "fig1_exact"

    def test_run(self):
        out_dir = self.params['out_dir']
        status, _ = run_cli(['run', self.scenario_path(self._scenario),
                             '--out', out_dir])
        self.assertEqual(status, 0)
        queues = self.read_csv(self.params, 'queues.csv')
        self.assertEqual([row['queue'] for row in queues], ['1', '2'])
        for row in queues:
            self.assertAlmostEqual(float(row['L']), 1.4, places=12)
            self.assertAlmostEqual(float(row['throughput']), 1 / 0.6,
                                   places=12)
        summary = self.read_text(self.params, 'summary.txt')
        self.assertIn("pi(empty) = 0.2", summary)

    def test_validate(self):
        lines = polyfair.validate(self.params)
        self.assertEqual(lines[-1], "ok")
        self.assertIn("stable: margin 1 at subset {1,2}", lines)
        self.assertFalse(os.path.exists(self.params['out_dir']))
        status, _ = run_cli(['validate', self.scenario_path(self._scenario)])
        self.assertEqual(status, 0)

    def test_process(self):
        artifacts = polyfair.process(self.params)
        self.assertEqual(sorted(artifacts),
                         ['queues.csv', 'subsets.csv', 'summary.txt'])
        subsets = self.read_csv(self.params, 'subsets.csv')
        self.assertEqual(subsets[3]['subset'], "{1,2}")
        self.assertAlmostEqual(float(subsets[3]['pi']), 0.4, places=12)


class TestFailures(ScenarioTestBase):

    def test_unstable(self):
        status, out = run_cli(['run', self.scenario_path('unstable'),
                               '--out', os.path.join(self.output_dir, 'u')])
        self.assertEqual(status, 3)
        record = json.loads(out)
        self.assertEqual(record['error'], 'InstabilityError')
        self.assertEqual(record['subset'], [0, 1])
        self.assertFalse(os.path.exists(os.path.join(self.output_dir, 'u')))

    def test_unstable_grid(self):
        status, out = run_cli(['validate', self.scenario_path('unstable_grid')])
        self.assertEqual(status, 3)
        record = json.loads(out)
        self.assertEqual(record['error'], 'InstabilityError')
        self.assertEqual(record['profile'], [3, 2])
        self.assertEqual(record['margin'], -0.25)

    def test_crossing_tree(self):
        with self.assertRaises(LaminarityError):
            polyfair.process(self.load('crossing_tree'))
        status, out = run_cli(['validate', self.scenario_path('crossing_tree')])
        self.assertEqual(status, 3)
        self.assertEqual(json.loads(out)['error'], 'LaminarityError')

    def test_malformed(self):
        out_dir = os.path.join(self.output_dir, 'm')
        status, out = run_cli(['run', self.scenario_path('malformed'),
                               '--out', out_dir])
        self.assertEqual(status, 2)
        record = json.loads(out)
        self.assertEqual(record['error'], 'ScenarioError')
        self.assertEqual(record['line'], 4)
        self.assertFalse(os.path.exists(out_dir))

    def write_scenario(self, text):
        path = os.path.join(self.output_dir, 'scenario.ini')
        with open(path, 'w') as f:
            f.write(text)
        return path

    def test_unknown_field(self):
        path = self.write_scenario(
            "[model]\nkind = mm1\ncolour = blue\n\n[solver]\nname = exact\n")
        with self.assertRaises(ScenarioError) as ctx:
            polyfair.load_params(path)
        self.assertEqual(ctx.exception.context['field'], 'model.colour')
        self.assertEqual(ctx.exception.context['line'], 3)

    def test_bad_value(self):
        path = self.write_scenario(
            "[model]\nkind = explicit-rank\nn = 1\nrank =\n    1: 2\n\n"
            "[workload]\nintensity = 1, x\n\n[solver]\nname = exact\n")
        with self.assertRaises(ScenarioError) as ctx:
            polyfair.load_params(path)
        self.assertEqual(ctx.exception.context['field'], 'workload.intensity')
        self.assertEqual(ctx.exception.context['line'], 8)

    def test_missing_solver(self):
        path = self.write_scenario("[model]\nkind = cluster\n")
        with self.assertRaises(ScenarioError) as ctx:
            polyfair.load_params(path)
        self.assertEqual(ctx.exception.context['field'], 'solver.name')

    def test_solver_not_applicable(self):
        params = self.load('fig8_bounds', solver='exact')
        with self.assertRaises(ScenarioError) as ctx:
            polyfair.validate(params)
        self.assertEqual(ctx.exception.context['field'], 'solver.name')

    def test_bad_model_parameters(self):
        cases = [
            ("[model]\nkind = cardinality-rank\nform = grid-cluster\n"
             "d1 = 0\nd2 = 3\n\n[solver]\nname = polysym\n",
             'model.d1', 4),
            ("[model]\nkind = cardinality-rank\nform = mean-random\n"
             "servers = 10\nsizes = 2, 2\ndegrees = 20, 2\n\n"
             "[solver]\nname = polysym\n", 'model.degrees', 6),
            ("[model]\nkind = random-cluster\nservers = 10\n"
             "sizes = 2, 2\ndegrees = 2, 11\n\n[solver]\nname = bounds\n",
             'model.degrees', 5),
        ]
        for text, field, line in cases:
            status, out = run_cli(['validate', self.write_scenario(text)])
            self.assertEqual(status, 2, field)
            record = json.loads(out)
            self.assertEqual(record['error'], 'ScenarioError')
            self.assertEqual(record['field'], field)
            self.assertEqual(record['line'], line)

    def test_plain_value_error(self):
        with mock.patch('polyfair.validate',
                        side_effect=ValueError("no such state")):
            status, out = run_cli(['validate',
                                   self.scenario_path('fig1_exact')])
        self.assertEqual(status, 3)
        self.assertEqual(json.loads(out),
                         {'error': 'ValueError', 'message': 'no such state'})

    def test_unknown_model(self):
        path = self.write_scenario(
            "[model]\nkind = mesh\n\n[solver]\nname = exact\n")
        with self.assertRaises(ScenarioError) as ctx:
            polyfair.validate(polyfair.load_params(path))
        self.assertEqual(ctx.exception.context['field'], 'model.kind')


class TestShippedScenarios(ScenarioTestBase):

    def test_all_scenarios(self):
        paths = sorted(glob.glob(os.path.join(polyfair.scenario_dir, '*.ini')))
        self.assertGreater(len(paths), 10)
        for path in paths:
            name = os.path.splitext(os.path.basename(path))[0]
            if name in FAILING:
                continue
            params = self.load(name, **QUICK.get(name, {}))
            artifacts = polyfair.process(params)
            self.assertIn('summary.txt', artifacts, name)
            for artifact in ARTIFACTS.get(params['solver'], []):
                self.assertTrue(os.path.isfile(
                    os.path.join(params['out_dir'], artifact)),
                    "%s: %s" % (name, artifact))

    def test_failing_scenarios(self):
        for name, status in sorted(FAILING.items()):
            got, out = run_cli(['validate', self.scenario_path(name)])
            self.assertEqual(got, status, name)
            self.assertIn('"error"', out)

    def test_fig8_chart(self):
        params = self.load('fig8_bounds', **QUICK['fig8_bounds'])
        self.assertEqual(params['format'], 'csv+svg')
        polyfair.process(params)
        curve = self.read_csv(params, 'curve.csv')
        self.assertEqual(len(curve), 3 * 5 * 2)
        curves = {}
        for row in curve:
            self.assertLessEqual(float(row['lower_rate']),
                                 float(row['upper_rate']) * (1 + 1e-9))
            key = (row['epsilon'], row['part'])
            curves.setdefault(key, []).append(
                (float(row['alpha']), float(row['upper_rate'])))
        for points in curves.values():
            rates = [rate for _, rate in sorted(points)]
            for before, after in zip(rates, rates[1:]):
                self.assertLessEqual(after, before * (1 + 1e-9))
        with open(os.path.join(params['out_dir'], 'curve.svg'), 'rb') as f:
            root = etree.fromstring(f.read())
        self.assertEqual(root.tag, '{http://www.w3.org/2000/svg}svg')
        ids = set(g.get('id') for g in
                  root.iter('{http://www.w3.org/2000/svg}g')
                  if g.get('id', '').startswith(plot.GID_PREFIX))
        self.assertEqual(len(ids), 3 * 2 * 2)

    def test_bounds_deterministic(self):
        first = self.load('fig1_bounds',
                          out_dir=os.path.join(self.output_dir, 'first'))
        second = self.load('fig1_bounds',
                           out_dir=os.path.join(self.output_dir, 'second'))
        polyfair.process(first)
        polyfair.process(second)
        for name in ('L_bounds.csv', 'summary.txt'):
            self.assertEqual(self.read_text(first, name),
                             self.read_text(second, name))
        self.assertIn("inside the bounds",
                      self.read_text(first, 'summary.txt'))
        rows = self.read_csv(first, 'L_bounds.csv')
        self.assertEqual(len(rows), 4 * 2)

    def test_polysym_scenarios(self):
        params = self.load('fig1_polysym')
        polyfair.process(params)
        parts = self.read_csv(params, 'parts.csv')
        self.assertAlmostEqual(float(parts[0]['L']), 2.8, places=10)

        params = self.load('access_tree_bounds')
        polyfair.process(params)
        rows = self.read_csv(params, 'throughput_bounds.csv')
        self.assertEqual(len(rows), 2 * 2)
        for row in rows:
            self.assertLess(float(row['lower']), float(row['upper']))

    def test_tree_scenarios(self):
        grid = self.load('example2_tree_polysym')
        polyfair.process(grid)
        parts = self.read_csv(grid, 'parts.csv')
        subsets = self.load('example2_tree_polysym', solver='exact',
                            out_dir=os.path.join(self.output_dir, 'subsets'))
        polyfair.process(subsets)
        queues = self.read_csv(subsets, 'queues.csv')
        L = [float(row['L']) for row in queues]
        self.assertAlmostEqual(L[0], L[1], places=12)
        self.assertAlmostEqual(float(parts[0]['L']), L[0] + L[1], places=10)
        self.assertAlmostEqual(float(parts[1]['L']), L[2], places=10)

        links = self.load('access_tree_links')
        star = self.load('access_tree_polysym')
        polyfair.process(links)
        polyfair.process(star)
        for mine, theirs in zip(self.read_csv(links, 'parts.csv'),
                                self.read_csv(star, 'parts.csv')):
            self.assertAlmostEqual(float(mine['L']), float(theirs['L']),
                                   places=12)

    def test_chain_cluster_exact(self):
        params = self.load('chain_cluster_exact')
        polyfair.process(params)
        subsets = dict((row['subset'], row) for row in
                       self.read_csv(params, 'subsets.csv'))
        self.assertEqual(set(subsets), set(
            ["{}", "{1}", "{2}", "{3}", "{1,2}", "{1,3}", "{2,3}", "{1,2,3}"]))
        queues = self.read_csv(params, 'queues.csv')
        self.assertAlmostEqual(float(queues[0]['L']), float(queues[2]['L']),
                               places=12)
        bounds = self.load('grid_cluster_bounds')
        polyfair.process(bounds)
        rows = self.read_csv(bounds, 'L_bounds.csv')
        self.assertEqual(len(rows), 2 * 2)
        for row in rows:
            self.assertLess(float(row['lower']), float(row['upper']))

    def test_overrides(self):
        params = self.load('fig1_exact', seed=5, threads=2, format='csv+svg')
        self.assertEqual((params['seed'], params['threads'], params['format']),
                         (5, 2, 'csv+svg'))
        params = polyfair.load_params(self.scenario_path('mm1'))
        self.assertEqual(params['out_dir'],
                         os.path.splitext(self.scenario_path('mm1'))[0])
        self.assertEqual(params['events'],
                         polyfair.DEFAULT_PARAMS['events'])


if __name__ == '__main__':
    unittest.main()
