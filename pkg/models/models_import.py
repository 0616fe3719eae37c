import importlib

from errors import ConfigError

# algorithm name -> (module, class, fixed keyword arguments)
ALGORITHMS = {
    'cem':       ('models.cem.cem',     'CEM',      {}),
    'cem-fixed': ('models.cem.cem',     'CEMFixed', {}),
    'cempp-sg':  ('models.cem.cem',     'CEMPPSG',  {}),
    'cempp-kde': ('models.cem.kde',     'CEMPPKDE', {}),
    'gacem-on':  ('models.gacem.gacem', 'GACEM',    {'policy': 'on'}),
    'gacem-off': ('models.gacem.gacem', 'GACEM',    {'policy': 'off'}),
}


def algorithm_names():
    return sorted(ALGORITHMS.keys())


def create_model_object(space, constraint, *args, **kwargs):
    """
    Use the algorithm name to find the matching search algorithm class

    Args:
        space      (DesignSpace)
        constraint (Constraint)
        kwargs:    run configuration, 'algo' selects the algorithm

    Returns:
        algorithm: initialized SearchAlgorithm object
    """
    algo_name = str(kwargs['algo']).lower()

    if algo_name not in ALGORITHMS:
        raise ConfigError('unknown algorithm {!r}; valid names: {}'.format(kwargs['algo'], ', '.join(algorithm_names())))

    module_name, class_name, fixed = ALGORITHMS[algo_name]
    module = importlib.import_module(module_name)

    kwargs = dict(kwargs, **fixed)
    return getattr(module, class_name)(space, constraint, *args, **kwargs)
