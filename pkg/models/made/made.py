"""
Masked autoregressive mixture-density network.

Every conditional p(x_i | x_<i) is a K-component Gaussian mixture on the
normalized axis [-1, 1]. For grid designs the mixture is integrated over
each of the N bins of that dimension and renormalized, giving a discrete
pmf per dimension; the joint pmf is the product of the conditionals.
"""
import math
import collections
import numpy as np
import torch

import torch.nn as nn

from errors                       import ConfigError, ContractError, DomainError
from models.made.made_utils       import diffcore as dc
from models.made.made_utils.diffcore import MaskedLinear, DTYPE

SIGMA_MIN   = 1e-4
SIGMA_MAX   = 2.0
TINY_MASS   = 1e-300
CHUNK_CELLS = 2 * 10 ** 6


class ModelConfig(object):
    def __init__(self, dims, num_mixtures=40, hidden_sizes=(100, 100, 100), fixed_sigma=None, first_unit_hidden=(100,), grid=100):
        """
        Args:
            dims              (Int):        Number of design variables d
            num_mixtures      (Int):        Gaussian components K per conditional
            hidden_sizes      (List):       Units of the masked hidden layers
            fixed_sigma       (Float/None): When set, every component uses this scale
            first_unit_hidden (List):       Hidden units of the extra network feeding dimension 1
            grid              (Int):        Bins N per dimension

        Return:
            None
        """
        if int(dims) < 1:
            raise ConfigError('dims must be >= 1, got {}'.format(dims))

        if int(num_mixtures) < 1:
            raise ConfigError('num_mixtures must be >= 1, got {}'.format(num_mixtures))

        if any(int(h) < 1 for h in list(hidden_sizes) + list(first_unit_hidden)):
            raise ConfigError('hidden sizes must be >= 1')

        if fixed_sigma is not None and float(fixed_sigma) <= 0:
            raise ConfigError('fixed_sigma must be positive, got {}'.format(fixed_sigma))

        if int(grid) < 1:
            raise ConfigError('grid must be >= 1, got {}'.format(grid))

        self.dims              = int(dims)
        self.num_mixtures      = int(num_mixtures)
        self.hidden_sizes      = [int(h) for h in hidden_sizes]
        self.fixed_sigma       = None if fixed_sigma is None else float(fixed_sigma)
        self.first_unit_hidden = [int(h) for h in first_unit_hidden]
        self.grid              = int(grid)

    @property
    def params_per_dim(self):
        # fixed variance: heads emit only logits and means
        return (2 if self.fixed_sigma is not None else 3) * self.num_mixtures

    def to_dict(self):
        return dict(dims=self.dims, num_mixtures=self.num_mixtures, hidden_sizes=list(self.hidden_sizes),
                    fixed_sigma=self.fixed_sigma, first_unit_hidden=list(self.first_unit_hidden), grid=self.grid)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class GridMap(object):
    """
    N uniform bins of width delta = 2/N covering [-1, 1]
    """

    def __init__(self, n_bins):
        self.n_bins  = int(n_bins)
        self.delta   = 2. / self.n_bins
        self.edges   = torch.linspace(-1., 1., self.n_bins + 1, dtype=DTYPE)
        self.centers = -1. + (torch.arange(self.n_bins, dtype=DTYPE) + 0.5) * self.delta

    def index_of(self, x, tol=1e-6):
        """
        Bin index of on-grid normalized values

        Args:
            x (Tensor, shape [*]): Values expected at bin centers

        Return:
            LongTensor of bin indices
        """
        pos = (x + 1.) / self.delta - 0.5
        idx = torch.round(pos)

        if bool((torch.abs(pos - idx) > tol).any()) or bool((idx < 0).any()) or bool((idx > self.n_bins - 1).any()):
            raise ContractError('design does not lie on the {}-bin grid'.format(self.n_bins))

        return idx.long()


class MaskSet(object):
    """
    Autoregressive masks for natural ordering 1..d.

    Hidden unit degrees cycle over 1..max(d-1, 1); hidden masks connect
    degree(out) >= degree(in), the output mask connects dimension i to
    hidden units of degree < i.
    """

    def __init__(self, masks, degrees, output_degrees):
        self.masks          = masks
        self.degrees        = degrees
        self.output_degrees = output_degrees

    def __len__(self):
        return len(self.masks)

    def connectivity(self):
        """Boolean [d*P, d] matrix: True where an output can see an input"""
        conn = self.masks[0].astype(np.int64)

        for mask in self.masks[1:]:
            conn = (mask.astype(np.int64) @ conn > 0).astype(np.int64)

        return conn > 0


def build_masks(config):
    d = config.dims
    if d < 1:
        raise ConfigError('cannot build masks for d={}'.format(d))

    top     = max(d - 1, 1)
    degrees = [np.arange(1, d + 1)]

    for h in config.hidden_sizes:
        degrees.append(np.arange(h) % top + 1)

    masks = []
    for l in range(1, len(degrees)):
        masks.append(degrees[l][:, None] >= degrees[l - 1][None, :])

    output_degrees = np.repeat(np.arange(1, d + 1), config.params_per_dim)
    masks.append(output_degrees[:, None] > degrees[-1][None, :])

    return MaskSet(masks, degrees, output_degrees)


class MixtureParams(collections.namedtuple('MixtureParams', ['logits', 'mu', 'sigma'])):
    """Per-dimension mixture parameters, each of shape [B, d, K]"""

    @property
    def weights(self):
        return dc.softmax(self.logits, dim=-1)


class MADE(nn.Module):
    """
    Masked autoencoder with Gaussian-mixture conditionals and an extra
    network feeding the (otherwise bias-only) first dimension.
    """

    def __init__(self, config):
        """
        Args:
            config (ModelConfig/Dict): Model hyperparameters

        Return:
            None
        """
        super(MADE, self).__init__()

        if isinstance(config, dict):
            config = ModelConfig.from_dict(config)

        self.config   = config
        self.grid_map = GridMap(config.grid)
        self.ordering = list(range(config.dims))
        self.mask_set = build_masks(config)

        d, P  = config.dims, config.params_per_dim
        sizes = [d] + config.hidden_sizes + [d * P]

        self.layers = nn.ModuleList([MaskedLinear(sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)])
        for layer, mask in zip(self.layers, self.mask_set.masks):
            layer.set_mask(mask)

        fu_sizes = [1] + config.first_unit_hidden + [P]
        self.first_unit = nn.ModuleList([MaskedLinear(fu_sizes[i], fu_sizes[i + 1]) for i in range(len(fu_sizes) - 1)])

        self.__init_heads()

    def __init_heads(self):
        K    = self.config.num_mixtures
        d, P = self.config.dims, self.config.params_per_dim
        out  = self.layers[-1]

        with torch.no_grad():
            weight = out.weight.view(d, P, -1)
            bias   = out.bias.view(d, P)

            # logits start flat so every conditional begins with uniform mixture weights
            weight[:, :K].zero_()
            weight[:, K:].mul_(0.1)

            bias[:, K:2 * K] = torch.linspace(-1., 1., K, dtype=DTYPE) if K > 1 else 0.
            if self.config.fixed_sigma is None:
                bias[:, 2 * K:] = math.log(min(max(2. / K, SIGMA_MIN), SIGMA_MAX))

            self.first_unit[-1].weight.zero_()
            self.first_unit[-1].bias.zero_()

    @property
    def dims(self):
        return self.config.dims

    def _as_input(self, x):
        x = torch.as_tensor(x, dtype=DTYPE)
        if x.dim() == 1:
            x = x[None, :]

        if x.shape[-1] != self.dims:
            raise ContractError('expected designs with {} coordinates, got {}'.format(self.dims, x.shape[-1]))

        return x

    def forward(self, x):
        """
        Args:
            x (Tensor, shape [B, d]): Normalized designs in [-1, 1]

        Return:
            MixtureParams with tensors of shape [B, d, K]
        """
        x = self._as_input(x)

        if bool((torch.abs(x) > 1. + 1e-9).any()):
            raise DomainError('model inputs must lie in [-1, 1]')

        B, d, K = x.shape[0], self.dims, self.config.num_mixtures

        h = x
        for layer in self.layers[:-1]:
            h = dc.tanh(layer(h))

        out = self.layers[-1](h).view(B, d, -1)

        u = torch.ones(B, 1, dtype=DTYPE)
        for layer in self.first_unit[:-1]:
            u = dc.tanh(layer(u))
        u = self.first_unit[-1](u)

        out = torch.cat([(out[:, 0, :] + u)[:, None, :], out[:, 1:, :]], dim=1)

        logits = out[..., :K]
        mu     = out[..., K:2 * K]

        if self.config.fixed_sigma is not None:
            sigma = torch.full_like(mu, self.config.fixed_sigma)
        else:
            log_sigma = torch.clamp(out[..., 2 * K:3 * K], math.log(SIGMA_MIN), math.log(SIGMA_MAX))
            sigma     = dc.exp(log_sigma)

        return MixtureParams(logits, mu, sigma)

    def bin_log_pmf(self, logits, mu, sigma):
        """
        Normalized log pmf over the N bins from CDF differences at the bin edges

        Args:
            logits, mu, sigma (Tensor, shape [..., K])

        Return:
            Tensor of shape [..., N]
        """
        edges = self.grid_map.edges
        z     = (edges - mu[..., None]) / sigma[..., None]
        lo    = z[..., :-1]
        hi    = z[..., 1:]

        # upper tail computed from the complementary side to avoid 1 - 1 cancellation
        mass = torch.where(lo > 0, dc.gaussian_cdf(-lo) - dc.gaussian_cdf(-hi), dc.gaussian_cdf(hi) - dc.gaussian_cdf(lo))

        log_mass = dc.log(torch.clamp(mass, min=TINY_MASS))
        log_bins = dc.log_sum_exp(dc.log_softmax(logits, dim=-1)[..., None] + log_mass, dim=-2)

        return log_bins - dc.log_sum_exp(log_bins, dim=-1, keepdim=True)

    def _chunk(self):
        cells = self.dims * self.config.num_mixtures * (self.config.grid + 1)
        return max(1, CHUNK_CELLS // cells)

    def conditional_log_pmf(self, x):
        """
        Log pmf of every dimension's conditional given the preceding coordinates of x

        Return:
            Tensor of shape [B, d, N]
        """
        params = self.forward(x)
        return self.bin_log_pmf(params.logits, params.mu, params.sigma)

    def log_prob_discrete(self, x):
        """
        Args:
            x (Tensor, shape [B, d]): Normalized grid designs

        Return:
            Tensor, shape [B]: log p(x) summed over the d conditionals
        """
        x   = self._as_input(x)
        idx = self.grid_map.index_of(x)

        if not torch.is_grad_enabled() and x.shape[0] > self._chunk():
            step = self._chunk()
            return torch.cat([self.log_prob_discrete(x[i:i + step]) for i in range(0, x.shape[0], step)])

        log_pmf = self.conditional_log_pmf(x)
        return torch.gather(log_pmf, 2, idx[..., None])[..., 0].sum(dim=1)

    def log_prob_continuous(self, x):
        """
        Log density of the raw mixture conditionals, for continuous design variables
        """
        x      = self._as_input(x)
        params = self.forward(x)
        comp   = dc.log_softmax(params.logits, dim=-1) + dc.gaussian_log_pdf(x[..., None], params.mu, params.sigma)

        return dc.log_sum_exp(comp, dim=-1).sum(dim=1)

    def sample(self, n, rng_seed):
        """
        Ancestral sampling, one dimension at a time

        Args:
            n        (Int): Number of designs
            rng_seed (Int): Seed of the categorical draws

        Return:
            Tensor, shape [n, d]: normalized grid designs
        """
        if int(n) < 1:
            raise ContractError('sample needs n >= 1')

        gen     = torch.Generator().manual_seed(int(rng_seed))
        n       = int(n)
        step    = max(1, self._chunk() * self.dims)
        centers = self.grid_map.centers
        x       = torch.zeros(n, self.dims, dtype=DTYPE)

        with torch.no_grad():
            for i in range(self.dims):
                for start in range(0, n, step):
                    part    = x[start:start + step]
                    params  = self.forward(part)
                    log_pmf = self.bin_log_pmf(params.logits[:, i], params.mu[:, i], params.sigma[:, i])
                    idx     = torch.multinomial(torch.exp(log_pmf), 1, generator=gen)[:, 0]

                    x[start:start + step, i] = centers[idx]

                # END FOR
            # END FOR

        return x

    def entropy_estimate(self, n, rng_seed):
        """
        Monte Carlo entropy of the discrete distribution in nats, divided by d
        """
        x = self.sample(n, rng_seed)

        with torch.no_grad():
            log_p = self.log_prob_discrete(x)

        return float(-log_p.mean() / self.dims)
