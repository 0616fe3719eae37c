import math
import numpy as np
import pytest
import torch

from errors                          import ContractError, DimensionError, DomainError
from models.made.made_utils          import diffcore as dc
from models.made.made_utils.diffcore import MaskedLinear, Tape, backward, forward_masked_linear, DTYPE


def test_masked_linear_identity():
    layer = MaskedLinear(2, 2)
    with torch.no_grad():
        layer.weight.copy_(torch.eye(2, dtype=DTYPE))

    out = forward_masked_linear(torch.tensor([1., 2.], dtype=DTYPE), layer)
    assert torch.equal(out, torch.tensor([1., 2.], dtype=DTYPE))


def test_masked_linear_all_zero_mask_returns_bias():
    layer = MaskedLinear(3, 2)
    layer.set_mask(np.zeros((2, 3)))
    with torch.no_grad():
        layer.bias.copy_(torch.tensor([0.5, -1.5], dtype=DTYPE))

    for _ in range(3):
        out = layer(torch.randn(3, dtype=DTYPE) * 10)
        assert torch.equal(out, torch.tensor([0.5, -1.5], dtype=DTYPE))


def test_masked_linear_matches_dense_product():
    torch.manual_seed(3)
    layer = MaskedLinear(3, 2)
    mask  = np.array([[1, 0, 1], [0, 1, 1]])
    layer.set_mask(mask)
    with torch.no_grad():
        layer.bias.normal_()

    x        = torch.randn(4, 3, dtype=DTYPE)
    w        = layer.weight.detach().numpy() * mask
    expected = x.numpy() @ w.T + layer.bias.detach().numpy()

    np.testing.assert_allclose(layer(x).detach().numpy(), expected, rtol=0, atol=1e-12)


def test_masked_linear_shape_mismatch():
    with pytest.raises(DimensionError):
        MaskedLinear(3, 2)(torch.zeros(4, dtype=DTYPE))


def test_backward_square():
    w    = torch.tensor(3., dtype=DTYPE, requires_grad=True)
    tape = Tape([w])

    with tape:
        out = w * w

    assert backward(tape, out)[0].item() == pytest.approx(6.)


def test_backward_rejects_non_scalar():
    w = torch.ones(3, dtype=DTYPE, requires_grad=True)

    with pytest.raises(ContractError):
        backward(Tape([w]), w * 2)


def test_backward_masked_weights_get_zero_gradient():
    torch.manual_seed(0)
    mask  = np.array([[1, 0, 1], [0, 1, 0]])
    layer = MaskedLinear(3, 2)
    layer.set_mask(mask)

    for _ in range(5):
        tape = Tape.from_module(layer)
        with tape:
            out = torch.sum(dc.tanh(layer(torch.randn(8, 3, dtype=DTYPE))) ** 2)

        grad_w = backward(tape, out)[0]
        assert torch.all(grad_w[torch.as_tensor(mask) == 0] == 0)


def test_backward_unused_parameter_gets_zeros():
    a    = torch.tensor(1., dtype=DTYPE, requires_grad=True)
    b    = torch.tensor(2., dtype=DTYPE, requires_grad=True)
    tape = Tape([a, b])

    with tape:
        out = 3 * a

    grads = backward(tape, out)
    assert grads[0].item() == 3. and grads[1].item() == 0.


def test_tape_records_primitives():
    layer = MaskedLinear(2, 2)
    tape  = Tape()

    with tape:
        dc.tanh(layer(torch.zeros(2, dtype=DTYPE)))

    assert [r[0] for r in tape.records] == ['masked_linear', 'tanh']
    assert len(tape.parameters()) == 2
    assert dc.active_tape() is None


def test_three_hidden_layer_network_matches_finite_differences():
    torch.manual_seed(11)
    sizes  = [3, 5, 5, 5, 1]
    layers = [MaskedLinear(sizes[i], sizes[i + 1]) for i in range(4)]
    for layer in layers:
        with torch.no_grad():
            layer.bias.normal_(std=0.3)

    x = torch.randn(6, 3, dtype=DTYPE)

    def loss():
        h = x
        for layer in layers[:-1]:
            h = dc.tanh(layer(h))
        return torch.sum(layers[-1](h))

    tape = Tape([p for layer in layers for p in layer.parameters()])
    with tape:
        out = loss()
    grads = backward(tape, out)

    step = 1e-5
    for param, grad in zip(tape.parameters(), grads):
        flat_p, flat_g = param.data.view(-1), grad.view(-1)

        for i in range(flat_p.numel()):
            orig = flat_p[i].item()
            with torch.no_grad():
                flat_p[i] = orig + step
                up = loss().item()
                flat_p[i] = orig - step
                down = loss().item()
                flat_p[i] = orig

            numeric = (up - down) / (2 * step)
            assert abs(flat_g[i].item() - numeric) <= 1e-4 * max(abs(numeric), 1e-4)

        # END FOR


def test_gaussian_log_pdf_values():
    assert dc.gaussian_log_pdf(0., 0., 1.).item() == pytest.approx(-0.918939, abs=1e-6)

    peak = dc.gaussian_log_pdf(0.3, 0.3, 0.7).item()
    assert dc.gaussian_log_pdf(1.0, 0.3, 0.7).item() == pytest.approx(peak - 0.5, abs=1e-12)

    expected = -math.log(0.05) - 0.5 * math.log(2 * math.pi) - 1. / (2 * 0.05 ** 2)
    assert dc.gaussian_log_pdf(1., 0., 0.05).item() == pytest.approx(expected, abs=1e-10)


def test_gaussian_log_pdf_rejects_nonpositive_sigma():
    with pytest.raises(DomainError):
        dc.gaussian_log_pdf(0., 0., 0.)


def test_gaussian_cdf_values():
    assert dc.gaussian_cdf(0.).item() == 0.5
    assert dc.gaussian_cdf(1.96).item() == pytest.approx(0.97500, abs=1e-5)
    assert dc.gaussian_cdf(40.).item() == 1.
    assert dc.gaussian_cdf(-40.).item() == 0.

    z = torch.linspace(-6, 6, 101, dtype=DTYPE)
    assert torch.all(torch.diff(dc.gaussian_cdf(z)) >= 0)


def test_gaussian_cdf_derivative_is_normal_pdf():
    z = torch.linspace(-4, 4, 17, dtype=DTYPE, requires_grad=True)
    (grad,) = torch.autograd.grad(dc.gaussian_cdf(z).sum(), z)

    pdf = torch.exp(-z.detach() ** 2 / 2) / math.sqrt(2 * math.pi)
    assert torch.allclose(grad, pdf, atol=1e-14)


def test_log_sum_exp_structure_and_overflow():
    v = torch.tensor([700., 699., -700.], dtype=DTYPE)
    m = torch.max(v)

    expected = m + torch.log(torch.sum(torch.exp(v - m)))
    out      = dc.log_sum_exp(v)

    assert torch.isfinite(out)
    assert out.item() == pytest.approx(expected.item(), abs=1e-12)
    assert dc.log_sum_exp(-v).item() == pytest.approx(torch.logsumexp(-v, 0).item())


def test_log_sum_exp_all_minus_infinity():
    v = torch.full((3,), -float('inf'), dtype=DTYPE)
    assert dc.log_sum_exp(v).item() == -float('inf')


def test_log_rejects_negative():
    with pytest.raises(DomainError):
        dc.log(torch.tensor([-1.], dtype=DTYPE))


def test_softmax_sums_to_one():
    v = torch.randn(5, 7, dtype=DTYPE) * 50
    assert torch.allclose(dc.softmax(v, dim=-1).sum(-1), torch.ones(5, dtype=DTYPE), atol=1e-12)
    assert torch.allclose(dc.log_softmax(v, dim=-1), torch.log_softmax(v, dim=-1), atol=1e-12)


@pytest.mark.parametrize('name', ['tanh', 'exp', 'log', 'log_sum_exp', 'log_softmax', 'softmax', 'gaussian_cdf', 'gaussian_log_pdf'])
def test_primitive_gradients_match_finite_differences(name):
    torch.manual_seed(5)

    for _ in range(10):
        x = torch.randn(10, dtype=DTYPE)

        if name == 'log':
            args = (torch.rand(10, dtype=DTYPE) + 0.1,)
        elif name == 'gaussian_log_pdf':
            args = (x, torch.randn(10, dtype=DTYPE), torch.rand(10, dtype=DTYPE) + 0.2)
        else:
            args = (x,)

        args = tuple(a.requires_grad_() for a in args)
        assert torch.autograd.gradcheck(getattr(dc, name), args, eps=1e-6, atol=1e-8, rtol=1e-4)

    # END FOR
