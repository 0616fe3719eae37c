"""
CEM++ with a kernel density estimate of the buffer elites.
"""
import numpy as np

from scipy.special import logsumexp
from scipy.stats   import norm

from errors                     import ContractError
from models.cem.cem             import CemConfig, interval_log_mass, select_elites
from models.abstract_optimizers import SearchAlgorithm, stream

BANDWIDTH_FLOOR = 1e-3


class KdeModel(object):
    """Gaussian product kernels centered on the support points"""

    def __init__(self, points, bandwidth):
        self.points    = np.atleast_2d(np.asarray(points, dtype=np.float64))
        self.bandwidth = np.asarray(bandwidth, dtype=np.float64)

    @property
    def dims(self):
        return self.points.shape[1]


def scott_factor(n, d):
    return float(n) ** (-1. / (d + 4))


def kde_fit(points):
    """
    Diagonal bandwidth h_j = n^(-1/(d+4)) * std_j (Scott's rule), floored

    Args:
        points (Array, shape [n, d])

    Return:
        KdeModel
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))

    if points.size == 0:
        raise ContractError('kde_fit needs at least one point')

    n, d = points.shape
    std  = np.std(points, axis=0, ddof=1) if n > 1 else np.zeros(d)

    return KdeModel(points, np.maximum(scott_factor(n, d) * std, BANDWIDTH_FLOOR))


def kde_logpdf(model, x):
    """
    log of the average kernel density at x

    Args:
        model (KdeModel)
        x     (Array, shape [d] or [m, d])
    """
    x      = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x      = np.atleast_2d(x)

    log_k = norm.logpdf(x[:, None, :], loc=model.points[None, :, :], scale=model.bandwidth).sum(axis=2)
    out   = logsumexp(log_k, axis=1) - np.log(len(model.points))

    return out[0] if single else out


def kde_sample(model, n, seed):
    """
    A uniformly chosen support point plus kernel noise, per sample
    """
    rng  = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pick = rng.integers(0, len(model.points), size=n)

    return model.points[pick] + rng.normal(size=(n, model.dims)) * model.bandwidth


def kde_log_prob_discrete(model, space, x_norm):
    """
    Exact log pmf on the grid of kde samples clamped to [-1, 1]: each
    kernel factorizes over dimensions, so bin masses multiply
    """
    x_norm = np.atleast_2d(np.asarray(x_norm, dtype=np.float64))
    idx    = space.normalized_to_index(x_norm)

    log_k = np.zeros((len(x_norm), len(model.points)))
    for j in range(space.dims):
        log_k += interval_log_mass(space, idx[:, j][:, None], model.points[None, :, j], model.bandwidth[j])

    return logsumexp(log_k, axis=1) - np.log(len(model.points))


class CEMPPKDE(SearchAlgorithm):
    name = 'cempp-kde'

    def __init__(self, space, constraint, **kwargs):
        super(CEMPPKDE, self).__init__(space, constraint, **kwargs)

        self.cem_config = CemConfig(elite_pct=kwargs.get('elite_pct', 40.), iters=kwargs.get('iters', 60))
        self.kde        = None
        self.rng        = stream(self.seed, 2)

    def update(self, buffer, iteration):
        self.kde = kde_fit(select_elites(buffer.normalized, buffer.values, self.cem_config.elite_pct))

    def _draw(self, n, rng):
        if self.kde is None:
            return self.space.random_indices(n, rng)

        return self.space.normalized_to_index(np.clip(kde_sample(self.kde, n, rng), -1., 1.))

    def propose(self, n, buffer, iteration):
        return self._draw(n, self.rng)

    def sample(self, n, seed):
        return self.space.index_to_normalized(self._draw(n, np.random.default_rng(seed)))

    def log_prob_discrete(self, x_norm):
        if self.kde is None:
            return np.full(len(np.atleast_2d(x_norm)), -self.space.dims * np.log(self.space.grid))

        return kde_log_prob_discrete(self.kde, self.space, x_norm)

    def state_dict(self):
        if self.kde is None:
            return dict()

        return dict(points=self.kde.points, bandwidth=self.kde.bandwidth)

    def load_state_dict(self, state):
        self.kde = KdeModel(np.asarray(state['points']), np.asarray(state['bandwidth'])) if 'points' in state else None
