__version__ = "1.0.0"  # Must be a semantic version number

import importlib
import os

from polyfair import helpers
from polyfair.errors import ScenarioError

module_dir = os.path.abspath(os.path.dirname(__file__))
scenario_dir = os.path.join(module_dir, 'scenarios')

DEFAULT_PARAMS = {
    'scenario': '',
    'out_dir': '',
    'format': 'csv',  # 'csv+svg'
    'threads': 1,
    'seed': 0,

#### exact / polysym
    'grid_csv_max_cells': 100000,

#### bounds
    'epsilon': [0.1],
    'alphas': [],  # empty: evenly spaced grid inside (0, 1 - epsilon)
    'alpha_points': 50,
    'components': 3,
    'attempts': 1000,  # draws of each random intermediate rank

#### simulate
    'distribution': 'exponential',  # 'hyperexponential'
    'events': 1000000,
    'warmup': 0.2,
    'batches': 20,
    'cap': 10000,

#### concentration
    'trials': 200,
    'subsets_per_profile': 8,
    'degree_factor': 4.0,
    'server_factor': 1.0,
    'ns': [],

#### oracle
    'truncation': 60,
}


def load_params(path, overrides=None):
    """
    Reads a scenario file into the params dictionary that holds the
    whole configuration of a run. Solver options missing from the file
    take their value from DEFAULT_PARAMS; overrides (eg. command line
    flags) win over both.
    """
    from polyfair.scenario import read_scenario
    params = dict(DEFAULT_PARAMS)
    params.update(read_scenario(path))
    params['scenario'] = os.path.abspath(path)
    for key, value in (overrides or {}).items():
        if value is not None:
            params[key] = value
    if not params['out_dir']:
        params['out_dir'] = os.path.splitext(path)[0]
    return params


def import_model(params):
    """
    Loads the module of polyfair/models matching the model kind of the
    scenario, eg. 'random-cluster' -> polyfair.models.random_cluster.
    """
    from polyfair import models
    name = params['model'].replace('-', '_')
    if name not in models.__all__:
        raise ScenarioError("unknown model kind %r" % params['model'],
                            field='model.kind')
    return importlib.import_module('polyfair.models.' + name)


def import_solver(params):
    from polyfair import solvers
    name = params['solver']
    if name not in solvers.__all__:
        raise ScenarioError("unknown solver %r" % name, field='solver.name')
    return importlib.import_module('polyfair.solvers.' + name)


def build_model(params):
    model_module = import_model(params)
    if params['solver'] not in model_module.solvers:
        raise ScenarioError(
            "solver %r does not apply to model kind %r (use one of %s)"
            % (params['solver'], params['model'],
               ", ".join(model_module.solvers)),
            field='solver.name')
    return model_module, model_module.build(params)


def check_model(model):
    """
    Checks the model before solving: the polymatroid axioms when the rank
    is small enough to be checked exhaustively, the cardinality rank
    invariants when there is one, then workload stability.
    Raises on the first failed check; returns report lines.
    """
    from polyfair import rank, exact, polysym
    from polyfair.errors import InstabilityError, PolymatroidError

    lines = []
    r = model.get('rank')
    h = model.get('h')
    if r is not None and r.n <= rank.MAX_VALIDATE_N:
        lines.append(rank.require_polymatroid(r).summary())
    elif r is not None:
        lines.append("polymatroid axioms not checked (n=%d > %d)"
                     % (r.n, rank.MAX_VALIDATE_N))
    if h is not None:
        problems = h.check_invariants()
        if problems:
            raise PolymatroidError("; ".join(problems))
        lines.append("cardinality rank: h(0)=0 and h non-decreasing")

    if h is not None and model.get('grid_workload') is not None:
        check = polysym.grid_stability_margin(h, model['grid_workload'])
        where = helpers.format_profile(check.profile)
        if not check.stable:
            raise InstabilityError(
                "unstable: margin %g at profile %s" % (check.margin, where),
                profile=list(check.profile), margin=check.margin)
        lines.append("stable: margin %s at profile %s"
                     % (helpers.format_float(check.margin), where))
    elif (r is not None and model.get('workload') is not None
          and r.n <= exact.MAX_MARGIN_N):
        check = exact.stability_margin(r, model['workload'])
        where = helpers.format_subset(check.subset)
        if not check.stable:
            raise InstabilityError(
                "unstable: margin %g at subset %s" % (check.margin, where),
                subset=helpers.members(check.subset), margin=check.margin)
        lines.append("stable: margin %s at subset %s"
                     % (helpers.format_float(check.margin), where))
    return lines


def validate(params):
    """
    Static checks of a scenario: builds the model, checks the polymatroid
    axioms when the rank is small enough and the stability of the
    workload. Nothing is solved. Returns the report lines.
    """
    model_module, model = build_model(params)
    lines = model_module.describe(model)
    lines += check_model(model)
    lines.append("ok")
    for line in lines:
        helpers.log_stdout(line)
    return lines


def process(params):
    """
    Main program loop. Builds the model of the scenario, runs the
    selected solver and writes the summary table and every artifact of
    the solver to params['out_dir']. Nothing is written if any step
    fails.
    """
    from polyfair.helpers import log_stdout, log_stderr

    model_module, model = build_model(params)
    solver = import_solver(params)
    lines = model_module.describe(model)
    solved, artifacts = solver.run(params, model)
    lines += solved

    for line in lines:
        log_stdout(line)
    artifacts['summary.txt'] = "\n".join(lines) + "\n"

    written = helpers.write_artifacts(params['out_dir'], artifacts)
    log_stderr("Output written to %s" % params['out_dir'])
    log_stderr("Files: %s" % ", ".join(os.path.basename(p) for p in written))
    return artifacts
