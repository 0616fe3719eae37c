"""
Generalized autoregressive CEM.

A MADE mixture-density model p_theta is trained with the entropy-regularized
REINFORCE estimator on designs from the replay buffer (off-policy) or from
the latest batch (on-policy). New designs are sampled from p_theta and are
never evaluated twice.
"""
import numpy as np
import torch

import torch.optim as optim

from errors                     import ConfigError, ContractError, TrainingFault
from losses                     import Losses, WeightState, grad_estimate_off_policy, grad_estimate_on_policy
from models.made.made           import MADE, ModelConfig
from models.made.made_utils.diffcore import DTYPE
from models.abstract_optimizers import SearchAlgorithm, search_loop, stream
from models.gacem.replay_buffer import ReplayBuffer

MAX_RESAMPLE = 100


def _adam(model, lr):
    return optim.Adam(model.parameters(), lr=lr, betas=(0.9, 0.999), eps=1e-8)


def _minibatches(n, batch_size, rng, batches=None):
    if batches is not None:
        return [rng.choice(n, size=min(batch_size, n), replace=False) for _ in range(batches)]

    perm = rng.permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def fit_buffer_dist(model, buffer, n_e, b_s, lr=5e-3, rng=None, optimizer=None, batches=None):
    """
    Maximum-likelihood fit of the buffer distribution p_theta'

    Args:
        model     (MADE):                    theta' model, updated in place
        buffer    (ReplayBuffer/Array):      Buffer, or normalized designs [n, d]
        n_e       (Int):                     Epochs over the buffer
        b_s       (Int):                     Minibatch size
        lr        (Float):                   Learning rate when no optimizer is given
        rng       (Generator):               Minibatch order
        optimizer (torch.optim.Optimizer):   Optimizer state kept across calls
        batches   (Int/None):                Minibatches per epoch drawn at random, a full sweep when None

    Return:
        The updated model
    """
    x = buffer.normalized if hasattr(buffer, 'normalized') else np.asarray(buffer, dtype=np.float64)

    if len(x) == 0:
        raise ContractError('fit_buffer_dist needs a nonempty buffer')

    x         = torch.as_tensor(x, dtype=DTYPE)
    rng       = rng if rng is not None else np.random.default_rng(0)
    optimizer = optimizer if optimizer is not None else _adam(model, lr)
    nll       = Losses(loss_type='nll')

    for epoch in range(n_e):
        for batch in _minibatches(len(x), b_s, rng, batches):
            optimizer.zero_grad()
            loss = nll.loss(model, x[batch])

            if not torch.isfinite(loss):
                raise TrainingFault('non-finite likelihood while fitting the buffer distribution')

            loss.backward()
            optimizer.step()

        # END FOR
    # END FOR

    return model


class GACEM(SearchAlgorithm):

    def __init__(self, space, constraint, model=None, **kwargs):
        """
        Args:
            space             (DesignSpace)
            constraint        (Constraint)
            model             (MADE/None):      Pre-built p_theta, a fresh one when None
            policy            (String):         'on' or 'off'
            beta              (Float):          Entropy coefficient
            n_e               (Int):            Epochs per iteration
            batches_per_epoch (Int):            Minibatches drawn per epoch
            batch_size        (Int):            Minibatch size b_s
            lr                (Float):          Learning rate
            rho               (Float):          Rank fraction of the weight threshold
            ratio             (String):         Importance ratio mode: off, clipped, exact
            clip              ([Float, Float]): Clipped ratio bounds
            nr_mix            (Int):            Mixture components K
            hidden            (List):           Hidden layer sizes
            first_unit_hidden (List):           Hidden sizes of the first-dimension network
            fixed_sigma       (Int):            1 to fix every mixture scale to sigma_gacem
            sigma_gacem       (Float):          Fixed mixture scale
            seed              (Int)

        Return:
            None
        """
        super(GACEM, self).__init__(space, constraint, **kwargs)

        self.policy            = kwargs.get('policy', 'off')
        self.beta              = float(kwargs.get('beta', 0.01))
        self.n_e               = int(kwargs.get('n_e', 10))
        self.batches_per_epoch = int(kwargs.get('batches_per_epoch', 4))
        self.batch_size        = int(kwargs.get('batch_size', 16))
        self.lr                = float(kwargs.get('lr', 5e-3))
        self.ratio_mode        = kwargs.get('ratio', 'off')
        self.clip              = tuple(kwargs.get('clip', (0.1, 10.)))

        if self.policy not in ('on', 'off'):
            raise ConfigError('policy must be on or off, got {!r}'.format(self.policy))

        if self.ratio_mode not in ('off', 'clipped', 'exact'):
            raise ConfigError('ratio must be off, clipped or exact, got {!r}'.format(self.ratio_mode))

        if min(self.n_e, self.batch_size, self.batches_per_epoch) < 1 or self.lr <= 0:
            raise ConfigError('n_e, batch_size and batches_per_epoch must be positive and lr > 0')

        if not 0 < self.clip[0] <= 1 <= self.clip[1]:
            raise ConfigError('clip bounds must satisfy 0 < lo <= 1 <= hi, got {}'.format(self.clip))

        fixed = kwargs.get('fixed_sigma', 1)
        self.model_config = ModelConfig(dims              = space.dims,
                                        num_mixtures      = kwargs.get('nr_mix', 40),
                                        hidden_sizes      = kwargs.get('hidden', [100, 100, 100]),
                                        fixed_sigma       = kwargs.get('sigma_gacem', 0.05) if fixed else None,
                                        first_unit_hidden = kwargs.get('first_unit_hidden', [100]),
                                        grid              = space.grid)

        torch.manual_seed(self.seed)

        self.model     = model if model is not None else MADE(self.model_config)
        self.optimizer = _adam(self.model, self.lr)

        # theta' only matters when the ratio is used
        use_buffer_model = self.policy == 'off' and self.ratio_mode != 'off'
        self.buffer_model     = MADE(self.model_config) if use_buffer_model else None
        self.buffer_optimizer = _adam(self.buffer_model, self.lr) if use_buffer_model else None

        self.weight_state = WeightState(kwargs.get('rho', 0.4))
        # negative factors stop pushing a design once it is no likelier than under the uniform pmf
        self.floor = -space.dims * np.log(space.grid)
        self.rng = stream(self.seed, 3)

    @property
    def name(self):
        return 'gacem-' + self.policy

    def _training_population(self, buffer):
        if self.policy == 'off':
            return buffer

        indices, f, iteration = self.last_batch
        population = ReplayBuffer(self.space)
        population.extend(indices, f, iteration)

        return population

    def update(self, buffer, iteration):
        """
        n_e epochs of batches_per_epoch minibatches drawn from the training
        population, weighted by the threshold of this iteration
        """
        population = self._training_population(buffer)
        self.weight_state.update(population.values)

        for epoch in range(self.n_e):
            if self.buffer_model is not None:
                fit_buffer_dist(self.buffer_model, buffer, 1, self.batch_size, rng=self.rng,
                                optimizer=self.buffer_optimizer, batches=self.batches_per_epoch)

            for step in range(self.batches_per_epoch):
                x, f = population.sample_batch(self.batch_size, self.rng)
                x, w = torch.as_tensor(x, dtype=DTYPE), self.weight_state.weights(f)

                if self.policy == 'off':
                    grads = grad_estimate_off_policy(self.model, x, w, self.beta, self.buffer_model, self.ratio_mode,
                                                     self.clip, floor=self.floor)
                else:
                    grads = grad_estimate_on_policy(self.model, x, w, self.beta, floor=self.floor)

                if not all(bool(torch.isfinite(g).all()) for g in grads):
                    raise TrainingFault('non-finite gradient at iteration {}'.format(iteration))

                self.optimizer.zero_grad()
                for param, grad in zip(self.model.parameters(), grads):
                    param.grad = -grad

                self.optimizer.step()

            # END FOR
        # END FOR

    def propose(self, n, buffer, iteration):
        """
        n designs from p_theta that are neither in the buffer nor repeated in the batch
        """
        seen   = buffer.keys()
        chosen = []
        last   = None

        for attempt in range(MAX_RESAMPLE):
            x   = self.model.sample(n - len(chosen), int(self.rng.integers(2 ** 31)))
            idx = self.space.normalized_to_index(x.numpy())

            for row in idx:
                key  = tuple(int(i) for i in row)
                last = key

                if key not in seen and len(chosen) < n:
                    seen.add(key)
                    chosen.append(key)

            if len(chosen) == n:
                break

        # END FOR

        while len(chosen) < n:
            key = self._nearest_unseen(last, seen)
            seen.add(key)
            chosen.append(key)

        return np.asarray(chosen, dtype=np.int64)

    def _nearest_unseen(self, base, seen):
        """
        Most probable unseen grid point reached by moving one coordinate of base
        """
        base = np.asarray(base, dtype=np.int64)

        for radius in range(1, self.space.grid):
            candidates = []
            for j in range(self.space.dims):
                for step in (-radius, radius):
                    cand     = base.copy()
                    cand[j] += step

                    if 0 <= cand[j] < self.space.grid and tuple(int(i) for i in cand) not in seen:
                        candidates.append(cand)

            if candidates:
                candidates = np.asarray(candidates)
                with torch.no_grad():
                    log_p = self.model.log_prob_discrete(self.space.index_to_normalized(candidates))

                return tuple(int(i) for i in candidates[int(torch.argmax(log_p))])

        # END FOR

        raise TrainingFault('no unseen design left near {}'.format(base.tolist()))

    def sample(self, n, seed):
        return self.model.sample(n, seed)

    def log_prob_discrete(self, x_norm):
        return self.model.log_prob_discrete(x_norm)

    def state_dict(self):
        state = dict(model=self.model.state_dict(), optimizer=self.optimizer.state_dict(),
                     weight_state=self.weight_state.state_dict(), model_config=self.model_config.to_dict())

        if self.buffer_model is not None:
            state['buffer_model'] = self.buffer_model.state_dict()

        return state

    def load_state_dict(self, state):
        self.model.load_state_dict(state['model'])
        self.weight_state.load_state_dict(state['weight_state'])

        if 'optimizer' in state:
            self.optimizer.load_state_dict(state['optimizer'])

        if self.buffer_model is not None and 'buffer_model' in state:
            self.buffer_model.load_state_dict(state['buffer_model'])


def run(config, space, constraint, model=None):
    """
    Train GACEM for config['iters'] iterations

    Args:
        config     (Dict):        Run configuration (see config_default_example.yaml)
        space      (DesignSpace)
        constraint (Constraint)
        model      (MADE/None):   Initial p_theta

    Returns:
        (algorithm, generator of (RunRecord, ReplayBuffer))
    """
    algo = GACEM(space, constraint, model=model, **config)
    return algo, search_loop(algo, space, constraint, **config)
