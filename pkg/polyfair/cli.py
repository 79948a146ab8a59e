#
# Command line front end: polyfair_cli validate|run <scenario>
#

import argparse
import json
import os
import sys
import unittest

import polyfair
from polyfair import helpers
from polyfair.errors import PolyfairError

description = """
Balanced fairness in polymatroid capacity sets: solves the scenario
file (an INI document with [model], [workload] and [solver] sections)
and writes CSV tables, a summary and optional SVG charts.

  validate   checks the model, the polymatroid axioms and stability
  run        solves the scenario and writes the outputs
"""


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='polyfair_cli', description=description,
        formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--version', action='version',
                        version='polyfair %s' % polyfair.__version__)
    parser.add_argument('--test', action='store_true',
                        help='run the test suite and exit')
    parser.add_argument('verb', nargs='?', choices=['validate', 'run'])
    parser.add_argument('scenario', nargs='?',
                        help='scenario file, see polyfair/scenarios')
    parser.add_argument('--out', dest='out_dir',
                        help='output directory (default: the scenario '
                             'path without its extension)')
    parser.add_argument('--seed', type=int,
                        help='seed of every random choice of the run')
    parser.add_argument('--threads', type=int,
                        help='worker threads for the parallel passes')
    parser.add_argument('--format', choices=['csv', 'csv+svg'],
                        help='write SVG charts along with the CSV tables')
    args = parser.parse_args(argv)
    if not args.test and (args.verb is None or args.scenario is None):
        parser.error("a verb (validate or run) and a scenario are required")
    return args


def run_tests():
    helpers.silence_log(True)
    suite = unittest.defaultTestLoader.discover(
        os.path.join(polyfair.module_dir, 'tests'),
        top_level_dir=os.path.dirname(polyfair.module_dir))
    result = unittest.TextTestRunner(verbosity=2).run(suite)
    return 0 if result.wasSuccessful() else 1


def main(argv=None):
    """
    Returns the exit status: 0 on success, PolyfairError.exit_status
    (with a JSON error record on stdout) on failure. Any other ValueError
    gets the same record and status 3.
    """
    args = parse_args(argv)
    if args.test:
        return run_tests()

    overrides = {'out_dir': args.out_dir, 'seed': args.seed,
                 'threads': args.threads, 'format': args.format}
    try:
        params = polyfair.load_params(args.scenario, overrides)
        if args.verb == 'validate':
            polyfair.validate(params)
        else:
            polyfair.process(params)
    except PolyfairError as e:
        return _report(e.message, e.record(), e.exit_status)
    except ValueError as e:
        return _report(str(e), {'error': e.__class__.__name__,
                                'message': str(e)},
                       PolyfairError.exit_status)
    return 0


def _report(message, record, status):
    helpers.log_stderr("Error: %s" % message)
    sys.stdout.write(json.dumps(record, sort_keys=True) + "\n")
    return status
