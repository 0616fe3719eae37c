"""
Reverse-mode differentiation helpers used by the density model.

Graphs are built by torch autograd on every forward pass (define-by-run).
A Tape collects the parameters and primitive records of one pass so that
backward() can return a gradient for every registered parameter.
"""
import math
import torch

import torch.nn            as nn
import torch.nn.functional as F

from errors import ContractError, DimensionError, DomainError

DTYPE      = torch.float64
LOG_SQRT2PI = 0.5 * math.log(2 * math.pi)

_ACTIVE_TAPES = []


class Tape(object):
    """
    Ordered record of the primitive operations of one forward pass
    """

    def __init__(self, parameters=None):
        """
        Args:
            parameters (Iterable): Tensors (requires_grad=True) to differentiate against

        Return:
            None
        """
        self.records = []
        self._params = []
        self._ids    = set()

        if parameters is not None:
            for param in parameters:
                self.register(param)

    @classmethod
    def from_module(cls, module):
        return cls([p for p in module.parameters() if p.requires_grad])

    def register(self, param):
        if id(param) not in self._ids:
            self._ids.add(id(param))
            self._params.append(param)

    def parameters(self):
        return list(self._params)

    def record(self, op_name, inputs, output):
        self.records.append((op_name, inputs, output))

    def __enter__(self):
        _ACTIVE_TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPES.remove(self)
        return False


def active_tape():
    return _ACTIVE_TAPES[-1] if _ACTIVE_TAPES else None


def _record(op_name, inputs, output, params=()):
    tape = active_tape()

    if tape is not None:
        for param in params:
            if param is not None and param.requires_grad:
                tape.register(param)

        tape.record(op_name, inputs, output)

    return output


def backward(tape, output, retain_graph=False):
    """
    Gradient of a scalar output with respect to every parameter on the tape

    Args:
        tape         (Tape):   Tape holding the parameters to differentiate against
        output       (Tensor): Scalar produced by a forward pass
        retain_graph (Bool):   Keep the graph alive for a second call

    Return:
        List of gradients aligned with tape.parameters(); unused parameters get zeros
    """
    if output.numel() != 1:
        raise ContractError('backward needs a scalar output, got shape {}'.format(tuple(output.shape)))

    params = tape.parameters()
    grads  = torch.autograd.grad(output.reshape(()), params, retain_graph=retain_graph, allow_unused=True)

    return [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]


class MaskedLinear(nn.Linear):
    """A Linear layer whose effective weight is weight * mask."""

    def __init__(self, in_features, out_features, bias=True):
        super(MaskedLinear, self).__init__(in_features, out_features, bias=bias, dtype=DTYPE)
        self.register_buffer('mask', torch.ones(out_features, in_features, dtype=DTYPE))

    def reset_parameters(self):
        bound = 1. / math.sqrt(self.in_features)
        nn.init.uniform_(self.weight, -bound, bound)

        if self.bias is not None:
            nn.init.zeros_(self.bias)

    def set_mask(self, mask):
        self.mask.data.copy_(torch.as_tensor(mask, dtype=DTYPE))

    def forward(self, x):
        return forward_masked_linear(x, self)


def forward_masked_linear(x, layer):
    """
    Args:
        x     (Tensor, shape [N, in] or [in]): Input batch
        layer (MaskedLinear)

    Return:
        (weight * mask) x + bias
    """
    if x.shape[-1] != layer.in_features:
        raise DimensionError('input has {} features, layer expects {}'.format(x.shape[-1], layer.in_features))

    out = F.linear(x, layer.weight * layer.mask, layer.bias)
    return _record('masked_linear', (x,), out, (layer.weight, layer.bias))


def _as_tensor(value):
    if isinstance(value, torch.Tensor):
        return value
    return torch.as_tensor(value, dtype=DTYPE)


def tanh(x):
    return _record('tanh', (x,), torch.tanh(x))


def exp(x):
    return _record('exp', (x,), torch.exp(x))


def log(x):
    x = _as_tensor(x)
    if bool((x < 0).any()):
        raise DomainError('log of a negative value')

    return _record('log', (x,), torch.log(x))


def log_sum_exp(v, dim=-1, keepdim=False):
    """
    max(v) + log(sum(exp(v - max(v)))) along dim; finite for |v| up to float64 range
    """
    v = _as_tensor(v)
    m = torch.max(v, dim=dim, keepdim=True).values.detach()
    m = torch.where(torch.isfinite(m), m, torch.zeros_like(m))

    out = m + torch.log(torch.sum(torch.exp(v - m), dim=dim, keepdim=True))

    if not keepdim:
        out = out.squeeze(dim)

    return _record('log_sum_exp', (v,), out)


def log_softmax(v, dim=-1):
    v = _as_tensor(v)
    return _record('log_softmax', (v,), v - log_sum_exp(v, dim=dim, keepdim=True))


def softmax(v, dim=-1):
    return _record('softmax', (v,), torch.exp(log_softmax(v, dim=dim)))


def gaussian_log_pdf(x, mu, sigma):
    """
    log N(x; mu, sigma) = -log(sigma sqrt(2 pi)) - (x - mu)^2 / (2 sigma^2)
    """
    x, mu, sigma = _as_tensor(x), _as_tensor(mu), _as_tensor(sigma)

    if bool((sigma <= 0).any()):
        raise DomainError('gaussian_log_pdf needs sigma > 0')

    out = -torch.log(sigma) - LOG_SQRT2PI - (x - mu) ** 2 / (2 * sigma ** 2)
    return _record('gaussian_log_pdf', (x, mu, sigma), out)


def gaussian_cdf(z):
    """
    Standard normal CDF, written with erfc so both tails keep full precision
    """
    z = _as_tensor(z)
    return _record('gaussian_cdf', (z,), 0.5 * torch.erfc(-z / math.sqrt(2.)))
