"""
Gaussian cross-entropy method baselines.

All three variants search in the normalized space [-1, 1]^d; samples are
clamped to the boundary and snapped to the grid before evaluation.

    cem        adaptive covariance plus a decaying diagonal jitter
    cem-fixed  mean update only, covariance held at sigma^2 I
    cempp-sg   elites taken from the whole replay buffer
"""
import math
import numpy as np

from scipy.special import ndtr

from errors                     import ConfigError, ContractError
from models.abstract_optimizers import SearchAlgorithm, stream

TINY_MASS = 1e-300


class GaussianSearchDist(object):
    def __init__(self, mean, cov):
        """
        Args:
            mean (Array, shape [d])
            cov  (Array, shape [d, d]): Symmetric positive semi-definite

        Return:
            None
        """
        self.mean = np.asarray(mean, dtype=np.float64)
        self.cov  = np.asarray(cov, dtype=np.float64)

        if not np.allclose(self.cov, self.cov.T, atol=1e-12, rtol=0):
            raise ContractError('covariance must be symmetric')

    def __repr__(self):
        return 'GaussianSearchDist(mean={}, cov={})'.format(self.mean.tolist(), self.cov.tolist())


class CemConfig(object):
    def __init__(self, elite_pct=40., sigma_cem=0.05, sigma_init=0.5, sigma_end=0.01, weighting='equal', iters=60):
        """
        Args:
            elite_pct  (Float):  Percentile of samples kept as elites
            sigma_cem  (Float):  Standard deviation of the fixed-variance variant, in design units
            sigma_init (Float):  Jitter at the first iteration
            sigma_end  (Float):  Jitter at the last iteration
            weighting  (String): 'equal' or 'rank'
            iters      (Int):    Length of the jitter schedule
        """
        if not 0 < elite_pct <= 100:
            raise ConfigError('elite_pct must be in (0, 100], got {}'.format(elite_pct))

        if not sigma_init >= sigma_end >= 0:
            raise ConfigError('need sigma_init >= sigma_end >= 0')

        if weighting not in ('equal', 'rank'):
            raise ConfigError('weighting must be equal or rank, got {!r}'.format(weighting))

        self.elite_pct  = float(elite_pct)
        self.sigma_cem  = float(sigma_cem)
        self.sigma_init = float(sigma_init)
        self.sigma_end  = float(sigma_end)
        self.weighting  = weighting
        self.iters      = int(iters)

    def jitter(self, iteration):
        """Linear schedule sigma_init -> sigma_end over iterations 1..iters"""
        if self.iters <= 1:
            return self.sigma_init

        t = min(max(iteration - 1, 0), self.iters - 1) / float(self.iters - 1)
        return self.sigma_init + (self.sigma_end - self.sigma_init) * t


def elite_count(n, q):
    """floor(q n / 100) with at least one elite; 40% of 25 keeps 10"""
    return max(1, int(math.floor(q * n / 100. + 1e-9)))


def select_elites(samples, f_values, q):
    """
    Args:
        samples  (Array, shape [n, d])
        f_values (Array, shape [n]): Constraint values, lower is better
        q        (Float):            Elite percentile

    Return:
        The elite samples, best first; ties keep their original order
    """
    samples  = np.asarray(samples, dtype=np.float64)
    f_values = np.asarray(f_values, dtype=np.float64)

    if len(samples) == 0:
        raise ContractError('select_elites needs a nonempty population')

    order = np.argsort(f_values, kind='stable')[:elite_count(len(samples), q)]
    return samples[order]


def elite_weights(n, weighting='equal'):
    if weighting == 'equal':
        return np.full(n, 1. / n)

    # log-rank weights, elites ordered best first
    w = np.log(n + 0.5) - np.log(np.arange(1, n + 1))
    return w / np.sum(w)


def _check_weights(weights):
    weights = np.asarray(weights, dtype=np.float64)

    if np.any(weights < 0) or abs(np.sum(weights) - 1.) > 1e-9:
        raise ContractError('elite weights must be nonnegative and sum to 1')

    return weights


def cem_update(dist, elites, weights, sigma_t):
    """
    mean = sum w_i x_i, cov = sum w_i (x_i - mean)(x_i - mean)^T + sigma_t^2 I
    """
    elites  = np.atleast_2d(np.asarray(elites, dtype=np.float64))
    weights = _check_weights(weights)

    mean = weights @ elites
    diff = elites - mean
    cov  = (weights[:, None] * diff).T @ diff + sigma_t ** 2 * np.eye(elites.shape[1])

    return GaussianSearchDist(mean, (cov + cov.T) / 2.)


def cem_fixed_variance_update(dist, elites, weights, fixed_sigma=0.05):
    """
    mean = sum w_i x_i, cov = diag(fixed_sigma^2); fixed_sigma is a scalar or one value per dimension
    """
    elites  = np.atleast_2d(np.asarray(elites, dtype=np.float64))
    weights = _check_weights(weights)
    scale   = np.broadcast_to(np.asarray(fixed_sigma, dtype=np.float64), (elites.shape[1],))

    return GaussianSearchDist(weights @ elites, np.diag(scale ** 2))


def cempp_update(buffer, q):
    """
    Refit on the elites of the whole buffer with equal weights and no jitter

    Args:
        buffer (ReplayBuffer/(Array, Array)): Buffer, or (normalized designs, values)
        q      (Float):                       Elite percentile
    """
    x, f = (buffer.normalized, buffer.values) if hasattr(buffer, 'normalized') else buffer

    if len(f) == 0:
        raise ContractError('cempp_update needs a nonempty buffer')

    elites = select_elites(x, f, q)
    return cem_update(None, elites, elite_weights(len(elites)), 0.)


def interval_log_mass(space, idx, mean, std):
    """
    log P(bin idx) for a 1D Gaussian whose mass outside [-1, 1] is folded
    into the boundary bins (samples are clamped there)
    """
    lo = space.index_to_normalized(idx) - space.delta / 2.
    hi = lo + space.delta
    lo = np.where(idx == 0, -np.inf, lo)
    hi = np.where(idx == space.grid - 1, np.inf, hi)

    std  = np.maximum(std, 1e-12)
    z_lo = (lo - mean) / std
    z_hi = (hi - mean) / std

    mass = np.where(z_lo > 0, ndtr(-z_lo) - ndtr(-z_hi), ndtr(z_hi) - ndtr(z_lo))
    return np.log(np.maximum(mass, TINY_MASS))


def gaussian_log_prob_discrete(dist, space, x_norm):
    """
    Discrete log pmf of a Gaussian on the grid, factorized into 1D
    conditionals p(x_i | x_<i) read off the Cholesky factor
    """
    x_norm = np.atleast_2d(np.asarray(x_norm, dtype=np.float64))
    idx    = space.normalized_to_index(x_norm)
    d      = x_norm.shape[1]

    L = np.linalg.cholesky(dist.cov + 1e-12 * np.eye(d))
    z = np.zeros_like(x_norm)
    out = np.zeros(len(x_norm))

    for i in range(d):
        cond_mean = dist.mean[i] + z[:, :i] @ L[i, :i]
        out      += interval_log_mass(space, idx[:, i], cond_mean, L[i, i])
        z[:, i]   = (x_norm[:, i] - cond_mean) / L[i, i]

    return out


class GaussianCEM(SearchAlgorithm):
    """
    Shared sampling and scoring of the Gaussian baselines
    """

    def __init__(self, space, constraint, **kwargs):
        super(GaussianCEM, self).__init__(space, constraint, **kwargs)

        self.cem_config = CemConfig(elite_pct  = kwargs.get('elite_pct', 40.),
                                    sigma_cem  = kwargs.get('sigma_cem', 0.05),
                                    sigma_init = kwargs.get('sigma_init', 0.5),
                                    sigma_end  = kwargs.get('sigma_end', 0.01),
                                    weighting  = kwargs.get('weighting', 'equal'),
                                    iters      = kwargs.get('iters', 60))

        # moment match of the uniform distribution on [-1, 1]^d
        self.dist = GaussianSearchDist(np.zeros(space.dims), np.eye(space.dims) / 3.)
        self.rng  = stream(self.seed, 2)

    def _elites_of_last_batch(self):
        indices, values, _ = self.last_batch
        elites = select_elites(self.space.index_to_normalized(indices), values, self.cem_config.elite_pct)

        return elites, elite_weights(len(elites), self.cem_config.weighting)

    def _draw(self, n, rng):
        x = rng.multivariate_normal(self.dist.mean, self.dist.cov, size=n, method='eigh')
        return self.space.normalized_to_index(np.clip(x, -1., 1.))

    def propose(self, n, buffer, iteration):
        return self._draw(n, self.rng)

    def sample(self, n, seed):
        return self.space.index_to_normalized(self._draw(n, np.random.default_rng(seed)))

    def log_prob_discrete(self, x_norm):
        return gaussian_log_prob_discrete(self.dist, self.space, x_norm)

    def state_dict(self):
        return dict(mean=self.dist.mean, cov=self.dist.cov)

    def load_state_dict(self, state):
        self.dist = GaussianSearchDist(np.asarray(state['mean']), np.asarray(state['cov']))


class CEM(GaussianCEM):
    name = 'cem'

    def update(self, buffer, iteration):
        elites, weights = self._elites_of_last_batch()
        self.dist = cem_update(self.dist, elites, weights, self.cem_config.jitter(iteration))


class CEMFixed(GaussianCEM):
    name = 'cem-fixed'

    def update(self, buffer, iteration):
        elites, weights = self._elites_of_last_batch()
        self.dist = cem_fixed_variance_update(self.dist, elites, weights, self.fixed_sigma)

    @property
    def fixed_sigma(self):
        """sigma_cem is given in design units"""
        return self.space.length_to_normalized(self.cem_config.sigma_cem)


class CEMPPSG(GaussianCEM):
    name = 'cempp-sg'

    def update(self, buffer, iteration):
        self.dist = cempp_update(buffer, self.cem_config.elite_pct)
