import inspect

from errors                 import ConfigError
from objectives             import benchmarks
from objectives.design_space import DesignSpace


def objective_names():
    return sorted(obj.name for _, obj in inspect.getmembers(benchmarks, inspect.isclass)
                  if issubclass(obj, benchmarks.Objective) and obj.name is not None)


def create_objective_object(name):
    """
    Use the objective name to find a matching Objective class

    Args:
        name (String): Objective name, case insensitive

    Returns:
        objective: initialized Objective object
    """
    members = dict(inspect.getmembers(benchmarks, inspect.isclass))

    for cls_name, cls in members.items():
        if issubclass(cls, benchmarks.Objective) and cls.name is not None and name.lower() == cls.name:
            return cls()

    raise ConfigError('unknown objective {!r}; valid names: {}'.format(name, ', '.join(objective_names())))


def create_design_space(**kwargs):
    """
    Args:
        objective (String):      Objective name, supplies default bounds
        dims      (Int):         Number of design variables
        bounds    (List/None):   [lower, upper] overriding the objective default
        grid      (Int):         Bins per dimension

    Return:
        DesignSpace
    """
    objective = create_objective_object(kwargs['objective'])
    bounds    = kwargs.get('bounds') or objective.default_bounds

    if len(bounds) != 2:
        raise ConfigError('bounds must be [lower, upper], got {}'.format(bounds))

    return DesignSpace(kwargs['dims'], bounds[0], bounds[1], kwargs.get('grid', 100))


def create_constraint(**kwargs):
    """
    Args:
        objective (String):     Objective name
        threshold (Float/None): Threshold gamma, objective default when None

    Return:
        Constraint
    """
    return benchmarks.Constraint(benchmarks.ConstraintSpec(kwargs['objective'], kwargs.get('threshold')))
