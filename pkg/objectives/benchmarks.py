"""
Closed-form benchmark functions and the constraints built on them.
Every function takes designs of shape [N, d] (or a single design [d]) in
original coordinates and returns one value per design.
"""
import numpy as np

from errors import ConfigError


class Objective(object):
    name              = None
    default_threshold = None
    default_bounds    = None

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)

        if x.ndim == 1:
            return self.evaluate(x[None, :])[0]

        return self.evaluate(x)

    def evaluate(self, x):
        raise NotImplementedError('Objective must implement evaluate on a [N, d] batch')

    def minimizer(self, dims):
        raise NotImplementedError


class Ackley(Objective):
    name              = 'ackley'
    default_threshold = 3.5
    default_bounds    = (-5., 5.)

    def evaluate(self, x):
        d   = x.shape[1]
        sq  = np.sqrt(np.sum(x ** 2, axis=1) / d)
        cos = np.sum(np.cos(2 * np.pi * x), axis=1) / d

        return -20. * np.exp(-0.2 * sq) - np.exp(cos) + 20. + np.e

    def minimizer(self, dims):
        return np.zeros(dims)


class Styblinski(Objective):
    """
    Styblinski-Tang averaged over dimensions and shifted by 50, so the
    threshold is independent of d
    """
    name              = 'styblinski'
    default_threshold = 20.
    default_bounds    = (-5., 5.)

    def evaluate(self, x):
        return np.mean(x ** 4 - 16. * x ** 2 + 5. * x, axis=1) + 50.

    def minimizer(self, dims):
        return np.full(dims, -2.903534027771178)


class Levy(Objective):
    name              = 'levy'
    default_threshold = 0.4
    default_bounds    = (-10., 10.)

    def evaluate(self, x):
        w     = 1. + (x - 1.) / 4.
        first = np.sin(np.pi * w[:, 0]) ** 2
        mid   = np.sum((w[:, :-1] - 1.) ** 2 * (1. + 10. * np.sin(np.pi * w[:, :-1] + 1.) ** 2), axis=1)
        last  = (w[:, -1] - 1.) ** 2 * (1. + np.sin(2 * np.pi * w[:, -1]) ** 2)

        return first + mid + last

    def minimizer(self, dims):
        return np.ones(dims)


class Synt(Objective):
    """
    Quartic with 2^d global minima of value 1 at (+-2, ..., +-2)
    """
    name              = 'synt'
    default_threshold = 2.
    default_bounds    = (-5., 5.)

    def evaluate(self, x):
        return np.mean(0.25 * x ** 4 - 2. * x ** 2 + 5., axis=1)

    def minimizer(self, dims):
        return np.full(dims, 2.)


def eval(fn, x):
    """
    Args:
        fn (String/Objective): Objective name or object
        x  (Array, shape [N, d] or [d]): Designs

    Return:
        Objective value(s)
    """
    from objectives.loading_function import create_objective_object

    if isinstance(fn, str):
        fn = create_objective_object(fn)

    return fn(x)


class ConstraintSpec(object):
    """satisfied(x) <=> f(x) - threshold <= 0"""

    def __init__(self, objective, threshold=None):
        from objectives.loading_function import create_objective_object

        self.objective = create_objective_object(objective) if isinstance(objective, str) else objective
        self.threshold = float(self.objective.default_threshold if threshold is None else threshold)

    def __repr__(self):
        return 'ConstraintSpec({}, threshold={})'.format(self.objective.name, self.threshold)

    def __call__(self, x):
        return constraint_value(self, x)


def constraint_value(spec, x):
    return spec.objective(x) - spec.threshold


def max_aggregate(constraints, x):
    """
    Combine several constraints into one: max_i f_i(x) <= 0
    """
    if len(constraints) == 0:
        raise ConfigError('max_aggregate needs at least one constraint')

    values = [c(x) if callable(c) else c for c in constraints]
    return np.max(np.stack([np.asarray(v, dtype=np.float64) for v in values]), axis=0)


class Constraint(object):
    """One or more ConstraintSpecs combined with max_aggregate"""

    def __init__(self, specs):
        if isinstance(specs, ConstraintSpec):
            specs = [specs]

        if len(specs) == 0:
            raise ConfigError('a constraint needs at least one ConstraintSpec')

        self.specs = list(specs)

    @property
    def objective(self):
        return self.specs[0].objective

    def __call__(self, x):
        if len(self.specs) == 1:
            return constraint_value(self.specs[0], x)

        return max_aggregate(self.specs, x)


def satisfying_fraction(spec, space):
    """
    Exact fraction of grid points with constraint value <= 0, by enumeration

    Args:
        spec  (ConstraintSpec/Constraint)
        space (DesignSpace)

    Return:
        Fraction in [0, 1]
    """
    designs = space.index_to_design(space.enumerate_indices())
    return float(np.mean(spec(designs) <= 0))
