# This little bit of magic fills the __all__ list
# with every solver name, and means that
# polyfair.import_solver() can find any module placed here
import pkgutil

__all__ = []
for p in pkgutil.iter_modules(__path__):
    if not p[1].startswith('_'):
        __all__.append(p[1])

# scenario field to point at, and what is missing, per model entry
NEEDS = {
    'rank': ('model.kind', "a rank on subsets (cardinality ranks are "
                           "expanded up to 16 queues)"),
    'workload': ('workload.intensity', "a [workload] section"),
    'h': ('model.partition', "a poly-symmetric rank"),
    'grid_workload': ('workload.intensity',
                      "the same traffic for all the queues of a part"),
    'spec': ('model.kind', "a random-cluster model"),
}


def require(params, model, keys):
    """
    Raises a ScenarioError naming the scenario field that would provide
    the first missing model entry.
    """
    from polyfair.scenario import field_error
    for key in keys:
        if model.get(key) is None:
            field, what = NEEDS[key]
            raise field_error(params, field, "solver %s needs %s"
                              % (params['solver'], what))
