import time
import numpy as np

from errors                     import ConfigError, TrainingFault
from metrics                    import RunRecord, accuracy, entropy_per_dim, top_k_average
from models.gacem.replay_buffer import ReplayBuffer


def stream(seed, tag):
    """Independent numpy generator for one stochastic stream of a seeded run"""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(tag)]))


def derived_seed(seed, *tags):
    return int(np.random.SeedSequence([int(seed)] + [int(t) for t in tags]).generate_state(1)[0] & 0x7fffffff)


class SearchAlgorithm(object):
    """
    Base class of the search algorithms. An algorithm fits its search
    distribution to evaluated designs (update) and proposes new grid
    designs (propose); it is also the sampler scored by the metrics.
    """
    name = None

    def __init__(self, space, constraint, **kwargs):
        """
        Args:
            space      (DesignSpace): Grid the search runs on
            constraint (Constraint):  Constraint being satisfied
            seed       (Int):         Seed of the run

        Return:
            None
        """
        self.space      = space
        self.constraint = constraint
        self.seed       = int(kwargs.get('seed', 0))
        self.last_batch = None

    def observe(self, indices, values, iteration):
        """Latest evaluated batch, duplicates included"""
        self.last_batch = (np.asarray(indices), np.asarray(values, dtype=np.float64), iteration)

    def update(self, buffer, iteration):
        raise NotImplementedError('Algorithm must implement update')

    def propose(self, n, buffer, iteration):
        raise NotImplementedError('Algorithm must implement propose and return grid indices [n, d]')

    def sample(self, n, seed):
        raise NotImplementedError('Algorithm must implement sample')

    def state_dict(self):
        raise NotImplementedError

    def load_state_dict(self, state):
        raise NotImplementedError


def evaluate_designs(constraint, space, indices):
    """
    Constraint values of grid designs; a non-finite value aborts the run
    """
    values = np.asarray(constraint(space.index_to_design(indices)), dtype=np.float64)

    if not np.all(np.isfinite(values)):
        raise TrainingFault('constraint evaluation returned a non-finite value')

    return values


def initial_population(space, n, rng):
    """
    n distinct grid designs drawn uniformly at random
    """
    if n > space.size():
        raise ConfigError('n_init={} exceeds the {} points of the grid'.format(n, space.size()))

    chosen, keys = [], set()

    while len(chosen) < n:
        for idx in space.random_indices(n - len(chosen), rng):
            key = tuple(int(i) for i in idx)
            if key not in keys:
                keys.add(key)
                chosen.append(key)

    return np.asarray(chosen, dtype=np.int64)


def search_loop(searcher, space, constraint, **kwargs):
    """
    Initial random population, then max_iterations rounds of update / propose / evaluate

    Args:
        searcher       (SearchAlgorithm)
        space          (DesignSpace)
        constraint     (Constraint)
        n_init         (Int): Initial uniform samples
        n_s            (Int): Samples evaluated per iteration
        iters          (Int): Maximum number of iterations
        seed           (Int): Seed of the run
        record_samples (Int): Samples used for per-iteration accuracy and entropy
        top_k          (Int): Size of the top-k average

    Yields:
        (RunRecord, ReplayBuffer) after the initial population and after every iteration
    """
    n_init         = int(kwargs.get('n_init', 50))
    n_s            = int(kwargs.get('n_s', 25))
    iters          = int(kwargs.get('iters', 60))
    seed           = int(kwargs.get('seed', 0))
    record_samples = int(kwargs.get('record_samples', 500))
    top_k          = int(kwargs.get('top_k', 20))

    start  = time.time()
    buffer = ReplayBuffer(space)

    indices = initial_population(space, n_init, stream(seed, 0))
    values  = evaluate_designs(constraint, space, indices)
    evals   = len(values)

    buffer.extend(indices, values, 0)
    searcher.observe(indices, values, 0)

    def record(iteration):
        metric_seed = derived_seed(seed, 1, iteration)
        return RunRecord(iteration        = iteration,
                         evals            = evals,
                         satisfying_count = buffer.satisfying_count(),
                         top20_avg        = top_k_average(buffer, top_k),
                         accuracy_pct     = accuracy(searcher, constraint, space, record_samples, metric_seed),
                         entropy_per_dim  = entropy_per_dim(searcher, record_samples, metric_seed),
                         seconds          = time.time() - start)

    yield record(0), buffer

    for iteration in range(1, iters + 1):
        searcher.update(buffer, iteration)

        indices = searcher.propose(n_s, buffer, iteration)
        values  = evaluate_designs(constraint, space, indices)
        evals  += len(values)

        buffer.extend(indices, values, iteration)
        searcher.observe(indices, values, iteration)

        yield record(iteration), buffer

    # END FOR
