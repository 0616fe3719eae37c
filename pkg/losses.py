import math
import numpy as np
import torch

from errors                          import ConfigError, ContractError, TrainingFault
from models.made.made_utils.diffcore import Tape, backward, DTYPE


def compute_weight(f_x, f_bar):
    """
    Shaped reward of a constraint value relative to the rank threshold f_bar

    Args:
        f_x   (Float/Array): Constraint values, satisfied when <= 0
        f_bar (Float):       Current rank threshold

    Return:
        1 when satisfied, exp(-|f|/|f - f_bar|) between 0 and f_bar,
        -exp(-1/|f - f_bar|) above f_bar, 0 at f_bar
    """
    f      = np.asarray(f_x, dtype=np.float64)
    scalar = f.ndim == 0
    f      = np.atleast_1d(f)
    f_bar  = float(f_bar)
    w      = np.zeros_like(f)

    with np.errstate(divide='ignore', over='ignore', invalid='ignore'):
        sat = f <= 0
        mid = (f > 0) & (f < f_bar)
        bad = (f > 0) & (f > f_bar)

        w[sat] = 1.
        w[mid] = np.exp(-np.abs(f[mid]) / np.abs(f[mid] - f_bar))
        w[bad] = -np.exp(-1. / np.abs(f[bad] - f_bar))

    return float(w[0]) if scalar else w


def rank_threshold(f_values, rho, previous=None):
    """
    The ceil(rho * n)-th smallest value, never looser than the previous threshold

    Args:
        f_values (Array):      Constraint values of the population
        rho      (Float):      Rank fraction in (0, 1]
        previous (Float/None): Threshold of the previous iteration

    Return:
        New threshold
    """
    f = np.asarray(f_values, dtype=np.float64).ravel()

    if f.size == 0:
        raise ContractError('rank_threshold needs a nonempty population')

    k     = min(max(int(math.ceil(rho * f.size - 1e-12)), 1), f.size)
    value = float(np.partition(f, k - 1)[k - 1])

    if previous is not None and np.isfinite(previous):
        value = min(value, float(previous))

    return value


class WeightState(object):
    """
    Rank fraction and the monotone threshold it produces across iterations
    """

    def __init__(self, rho=0.4):
        if not 0 < rho <= 1:
            raise ConfigError('rho must be in (0, 1], got {}'.format(rho))

        self.rho   = float(rho)
        self.f_bar = float('inf')

    def update(self, f_values):
        self.f_bar = rank_threshold(f_values, self.rho, self.f_bar)
        return self.f_bar

    def weights(self, f_values):
        return compute_weight(f_values, self.f_bar)

    def state_dict(self):
        return dict(rho=self.rho, f_bar=self.f_bar)

    def load_state_dict(self, state):
        self.rho   = state['rho']
        self.f_bar = state['f_bar']


def importance_ratio(log_p, log_p_buffer, mode='off', clip=(0.1, 10.)):
    """
    p_theta(x) / p_theta'(x), held constant during differentiation

    Args:
        log_p        (Tensor, shape [B]): log p_theta(x)
        log_p_buffer (Tensor, shape [B]): log p_theta'(x), unused when mode is off
        mode         (String):            'off', 'clipped' or 'exact'
        clip         ([Float, Float]):    Bounds used by the clipped mode

    Return:
        Tensor, shape [B]
    """
    if mode == 'off':
        return torch.ones_like(log_p).detach()

    ratio = torch.exp(log_p.detach() - log_p_buffer.detach())

    if mode == 'exact':
        if not bool(torch.isfinite(ratio).all()):
            raise TrainingFault('importance ratio is not finite; buffer distribution assigns zero mass to a sample')

        return ratio

    elif mode == 'clipped':
        lo, hi = clip
        return torch.clamp(ratio, lo, hi)

    raise ConfigError('unknown importance ratio mode {!r}; valid modes: off, clipped, exact'.format(mode))


def _reinforce_surrogate(log_p, weights, beta, ratio=None, floor=None):
    """
    Scalar whose gradient is mean(ratio * (w - beta (1 + log p)) * grad log p)

    Args:
        log_p   (Tensor, shape [B]):    log p_theta(x), differentiable
        weights (Array, shape [B]):     w(x) of each design
        beta    (Float):                Entropy coefficient
        ratio   (Tensor/None):          Importance ratio, held constant
        floor   (Float/None):           Designs with a negative factor stop contributing once log p_theta(x) <= floor

    Return:
        Scalar tensor to ascend
    """
    weights = torch.as_tensor(weights, dtype=DTYPE)
    w_tilde = weights - beta * (1. + log_p.detach())

    if ratio is not None:
        w_tilde = w_tilde * ratio

    if floor is not None:
        active  = (w_tilde >= 0) | (log_p.detach() > floor)
        w_tilde = w_tilde * active.to(DTYPE)

    return torch.mean(w_tilde * log_p)


def grad_estimate_on_policy(model, samples, weights, beta, floor=None):
    """
    Args:
        model   (MADE):                 Current distribution p_theta
        samples (Tensor, shape [B, d]): Designs drawn from p_theta
        weights (Array, shape [B]):     w(x) of each design
        beta    (Float):                Entropy coefficient
        floor   (Float/None):           Log-probability below which negative factors are dropped

    Return:
        List of gradient tensors (ascent direction), aligned with model.parameters()
    """
    tape = Tape.from_module(model)

    with tape:
        loss = Reinforce(beta=beta, floor=floor).loss(model, samples, weights)

    return [-g for g in backward(tape, loss)]


def grad_estimate_off_policy(model, batch, weights, beta, buffer_model=None, ratio_mode='off', clip=(0.1, 10.), floor=None):
    """
    Importance-weighted estimator for designs drawn from the replay buffer

    Args:
        model        (MADE):                 Current distribution p_theta
        batch        (Tensor, shape [B, d]): Buffer designs
        weights      (Array, shape [B]):     w(x) of each design
        beta         (Float):                Entropy coefficient
        buffer_model (MADE/None):            p_theta' fitted to the buffer
        ratio_mode   (String):               'off', 'clipped' or 'exact'
        clip         ([Float, Float]):       Bounds of the clipped ratio
        floor        (Float/None):           Log-probability below which negative factors are dropped

    Return:
        List of gradient tensors (ascent direction), aligned with model.parameters()
    """
    tape = Tape.from_module(model)

    with tape:
        loss = Reinforce(beta=beta, ratio=ratio_mode, clip=clip, floor=floor).loss(model, batch, weights, buffer_model)

    return [-g for g in backward(tape, loss)]


class Losses(object):
    def __init__(self, *args, **kwargs):
        """
        Class used to initialize and handle the training losses of the density models

        Args:
            loss_type (String): 'reinforce' (search distribution) or 'nll' (buffer fit)

        Return:
            Loss object
        """
        self.loss_type   = kwargs['loss_type']
        self.loss_object = None

        if self.loss_type == 'reinforce':
            self.loss_object = Reinforce(*args, **kwargs)

        elif self.loss_type == 'nll':
            self.loss_object = NLL(*args, **kwargs)

        else:
            raise ConfigError('invalid loss type {!r}'.format(self.loss_type))

    def loss(self, model, x, *args, **kwargs):
        """
        Function that calculates the loss to minimize for the selected loss type

        Args:
            model (MADE):                 Distribution being trained
            x     (Tensor, shape [B, d]): Normalized grid designs

        Returns:
            Scalar tensor
        """
        return self.loss_object.loss(model, x, *args, **kwargs)


class Reinforce(object):
    def __init__(self, *args, **kwargs):
        """
        Negated entropy-regularized REINFORCE surrogate. Samples from the
        latest batch use ratio 'off'; replay-buffer samples may be
        importance weighted against p_theta'.

        Args:
            beta  (Float):          Entropy coefficient
            ratio (String):         'off', 'clipped' or 'exact'
            clip  ([Float, Float]): Bounds of the clipped ratio
            floor (Float/None):     Log-probability below which negative factors are dropped
        """
        self.beta       = float(kwargs['beta'])
        self.ratio_mode = kwargs.get('ratio', 'off')
        self.clip       = tuple(kwargs.get('clip', (0.1, 10.)))
        self.floor      = kwargs.get('floor', None)

    def loss(self, model, x, weights, buffer_model=None):
        log_p = model.log_prob_discrete(x)

        if self.ratio_mode == 'off':
            log_p_buffer = log_p
        else:
            with torch.no_grad():
                log_p_buffer = buffer_model.log_prob_discrete(x)

        ratio = importance_ratio(log_p, log_p_buffer, self.ratio_mode, self.clip)

        return -_reinforce_surrogate(log_p, weights, self.beta, ratio, self.floor)


class NLL(object):
    """Mean negative log-likelihood of buffer designs"""

    def __init__(self, *args, **kwargs):
        pass

    def loss(self, model, x):
        return -torch.mean(model.log_prob_discrete(x))
