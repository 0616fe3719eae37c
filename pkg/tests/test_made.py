import math
import numpy as np
import pytest
import torch

from scipy.stats import norm

from errors                          import ConfigError, ContractError, DomainError
from models.made.made                import MADE, ModelConfig, GridMap, build_masks
from models.made.made_utils.diffcore import Tape, backward, DTYPE


def grid_points(grid, dims):
    centers = GridMap(grid).centers
    mesh    = torch.meshgrid(*([centers] * dims), indexing='ij')
    return torch.stack([m.reshape(-1) for m in mesh], dim=1)


def perturb(model, std, seed):
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for p in model.parameters():
            p.add_(torch.randn(p.shape, generator=gen, dtype=DTYPE) * std)


def test_config_validation():
    with pytest.raises(ConfigError):
        ModelConfig(dims=0)

    with pytest.raises(ConfigError):
        ModelConfig(dims=2, fixed_sigma=-0.1)

    assert ModelConfig(dims=2, num_mixtures=40).params_per_dim == 120
    assert ModelConfig(dims=2, num_mixtures=40, fixed_sigma=0.05).params_per_dim == 80


def test_masks_are_autoregressive():
    config = ModelConfig(dims=3, num_mixtures=2, hidden_sizes=[4, 4], first_unit_hidden=[2], grid=10)
    conn   = build_masks(config).connectivity()
    P      = config.params_per_dim

    for i in range(3):
        block = conn[i * P:(i + 1) * P]

        assert not block[:, i:].any()
        assert block[:, :i].all()

    # END FOR


def test_masks_single_dimension_are_empty():
    config = ModelConfig(dims=1, num_mixtures=2, hidden_sizes=[4], grid=10)
    assert not build_masks(config).connectivity().any()


def test_masks_are_deterministic():
    config = ModelConfig(dims=4, num_mixtures=3, hidden_sizes=[7, 5], grid=10)
    first, second = build_masks(config), build_masks(config)

    for a, b in zip(first.masks, second.masks):
        assert np.array_equal(a, b)


def test_forward_shapes_and_fixed_sigma():
    torch.manual_seed(0)
    model  = MADE(ModelConfig(dims=3, num_mixtures=4, hidden_sizes=[8], fixed_sigma=0.05, grid=10))
    params = model(torch.zeros(5, 3, dtype=DTYPE))

    assert params.logits.shape == params.mu.shape == params.sigma.shape == (5, 3, 4)
    assert torch.all(params.sigma == 0.05)
    assert torch.allclose(params.weights.sum(-1), torch.ones(5, 3, dtype=DTYPE))


def test_forward_rejects_out_of_range_inputs(tiny_model):
    with pytest.raises(DomainError):
        tiny_model(torch.tensor([[1.5, 0.]], dtype=DTYPE))

    with pytest.raises(ContractError):
        tiny_model(torch.zeros(2, 3, dtype=DTYPE))


def test_conditionals_only_depend_on_preceding_coordinates():
    torch.manual_seed(2)
    model = MADE(ModelConfig(dims=3, num_mixtures=3, hidden_sizes=[8, 8], first_unit_hidden=[4], grid=10))
    perturb(model, 0.3, 2)

    x    = grid_points(10, 3)[::37]
    base = model(x)

    for j in range(3):
        moved       = x.clone()
        moved[:, j] = -moved[:, j]
        out         = model(moved)

        for field in ('logits', 'mu', 'sigma'):
            before, after = getattr(base, field), getattr(out, field)

            assert torch.allclose(before[:, :j + 1], after[:, :j + 1], rtol=0, atol=1e-14)

            if j < 2:
                assert not torch.allclose(before[:, j + 1:], after[:, j + 1:])

        # END FOR
    # END FOR


def test_conditional_pmfs_are_normalized(tiny_model):
    log_pmf = tiny_model.conditional_log_pmf(grid_points(10, 2))

    assert log_pmf.shape == (100, 2, 10)
    assert torch.allclose(torch.exp(log_pmf).sum(-1), torch.ones(100, 2, dtype=DTYPE), atol=1e-12)


def test_joint_pmf_sums_to_one(tiny_model):
    perturb(tiny_model, 0.5, 7)

    with torch.no_grad():
        total = torch.exp(tiny_model.log_prob_discrete(grid_points(10, 2))).sum()

    assert total.item() == pytest.approx(1., abs=1e-9)


def test_narrow_fixed_sigma_pmf_is_normalized():
    torch.manual_seed(0)
    model = MADE(ModelConfig(dims=2, num_mixtures=40, hidden_sizes=[16], fixed_sigma=0.05, grid=100))

    with torch.no_grad():
        log_p = model.log_prob_discrete(grid_points(100, 2))

    assert torch.all(torch.isfinite(log_p))
    assert torch.exp(log_p).sum().item() == pytest.approx(1., abs=1e-9)


def test_log_prob_discrete_rejects_off_grid(tiny_model):
    with pytest.raises(ContractError):
        tiny_model.log_prob_discrete(torch.tensor([[0.05, 0.1]], dtype=DTYPE))


def test_log_prob_continuous_matches_mixture_density():
    torch.manual_seed(4)
    model = MADE(ModelConfig(dims=1, num_mixtures=3, hidden_sizes=[6], first_unit_hidden=[4], grid=10))
    perturb(model, 0.2, 4)

    x      = torch.linspace(-0.95, 0.95, 7, dtype=DTYPE)[:, None]
    params = model(x)

    w        = params.weights[:, 0].detach().numpy()
    dens     = norm.pdf(x.numpy(), params.mu[:, 0].detach().numpy(), params.sigma[:, 0].detach().numpy())
    expected = np.log(np.sum(w * dens, axis=1))

    np.testing.assert_allclose(model.log_prob_continuous(x).detach().numpy(), expected, rtol=1e-10)


@pytest.mark.parametrize('seed', range(20))
def test_log_prob_discrete_gradient_matches_finite_differences(seed, tiny_config):
    torch.manual_seed(seed)
    model = MADE(tiny_config)
    perturb(model, 0.1, seed)

    x = grid_points(10, 2)[torch.randperm(100)[:12]]

    def loss():
        return model.log_prob_discrete(x).sum()

    tape = Tape.from_module(model)
    with tape:
        out = loss()
    grads = backward(tape, out)

    picker = np.random.default_rng(seed)
    step   = 1e-5

    for param, grad in zip(tape.parameters(), grads):
        flat_p, flat_g = param.data.view(-1), grad.view(-1)

        for i in picker.choice(flat_p.numel(), size=min(5, flat_p.numel()), replace=False):
            orig = flat_p[i].item()
            with torch.no_grad():
                flat_p[i] = orig + step
                up = loss().item()
                flat_p[i] = orig - step
                down = loss().item()
                flat_p[i] = orig

            numeric = (up - down) / (2 * step)
            assert abs(flat_g[i].item() - numeric) <= 1e-3 * max(abs(numeric), 1e-3)

        # END FOR
    # END FOR


def test_sample_is_on_grid_and_deterministic(tiny_model):
    a = tiny_model.sample(200, 5)
    b = tiny_model.sample(200, 5)
    c = tiny_model.sample(200, 6)

    assert a.shape == (200, 2)
    assert torch.equal(a, b)
    assert not torch.equal(a, c)

    GridMap(10).index_of(a)


def test_sample_histogram_matches_exact_pmf():
    torch.manual_seed(8)
    model = MADE(ModelConfig(dims=1, num_mixtures=3, hidden_sizes=[6], first_unit_hidden=[4], grid=10))
    perturb(model, 0.5, 8)

    centers = GridMap(10).centers[:, None]
    with torch.no_grad():
        pmf = torch.exp(model.log_prob_discrete(centers)).numpy()

    idx  = GridMap(10).index_of(model.sample(50000, 3)[:, 0]).numpy()
    hist = np.bincount(idx, minlength=10) / 50000.

    assert 0.5 * np.abs(hist - pmf).sum() < 0.02


def test_entropy_estimate_within_bounds(tiny_model):
    h = tiny_model.entropy_estimate(2000, 0)

    assert 0. <= h <= math.log(10) + 0.05
    assert h == tiny_model.entropy_estimate(2000, 0)


def test_sample_rejects_empty_request(tiny_model):
    with pytest.raises(ContractError):
        tiny_model.sample(0, 0)


def flat_model(dims, sigma, mu=0.):
    """Single-component model whose conditionals ignore the preceding coordinates"""
    model = MADE(ModelConfig(dims=dims, num_mixtures=1, hidden_sizes=[4], first_unit_hidden=[2], fixed_sigma=sigma, grid=100))

    with torch.no_grad():
        model.layers[-1].weight.zero_()
        model.layers[-1].bias.view(dims, 2)[:, 1] = mu

    return model


@pytest.mark.parametrize('dims', [1, 2])
def test_entropy_estimate_of_uniform_model(dims):
    assert flat_model(dims, 100.).entropy_estimate(2000, 0) == pytest.approx(math.log(100), abs=1e-3)


def test_entropy_estimate_of_point_mass():
    model = flat_model(1, 1e-4, mu=GridMap(100).centers[50].item())
    assert model.entropy_estimate(500, 0) == pytest.approx(0., abs=1e-9)


def test_wide_single_component_is_near_flat():
    with torch.no_grad():
        pmf = torch.exp(flat_model(1, 10.).log_prob_discrete(GridMap(100).centers[:, None])).numpy()

    assert pmf.sum() == pytest.approx(1., abs=1e-9)
    assert np.abs(100. * pmf - 1.).max() < 0.01


def test_narrow_single_component_fills_one_bin():
    centers = GridMap(100).centers

    with torch.no_grad():
        pmf = torch.exp(flat_model(1, 1e-4, mu=centers[37].item()).log_prob_discrete(centers[:, None])).numpy()

    assert int(np.argmax(pmf)) == 37
    assert pmf[37] == pytest.approx(1., abs=1e-12)


def test_independent_dimensions_add_their_entropies():
    torch.manual_seed(9)
    model = MADE(ModelConfig(dims=2, num_mixtures=3, hidden_sizes=[6], first_unit_hidden=[4], grid=10))

    with torch.no_grad():
        model.layers[-1].weight.zero_()
        model.layers[-1].bias.add_(torch.randn(model.layers[-1].bias.shape, generator=torch.Generator().manual_seed(9), dtype=DTYPE))

        x        = grid_points(10, 2)
        log_p    = model.log_prob_discrete(x)
        log_cond = model.conditional_log_pmf(x[:1])[0]

    joint     = float(-(torch.exp(log_p) * log_p).sum())
    marginals = float(-(torch.exp(log_cond) * log_cond).sum())

    assert joint == pytest.approx(marginals, abs=1e-10)
    assert 2. * model.entropy_estimate(20000, 1) == pytest.approx(joint, abs=0.05)


def test_fresh_model_has_uniform_mixture_weights(tiny_model):
    x = torch.as_tensor(np.random.default_rng(2).uniform(-1, 1, size=(16, 2)), dtype=DTYPE)

    with torch.no_grad():
        weights = tiny_model.forward(x).weights

    assert torch.allclose(weights, torch.full_like(weights, 1. / 3), rtol=0, atol=1e-15)


def test_batched_forward_matches_single_rows(tiny_model):
    perturb(tiny_model, 0.4, 10)
    x = torch.as_tensor(np.random.default_rng(3).uniform(-1, 1, size=(8, 2)), dtype=DTYPE)

    with torch.no_grad():
        batched = tiny_model.forward(x)

        for i in range(len(x)):
            single = tiny_model.forward(x[i:i + 1])

            for a, b in zip(batched, single):
                assert torch.allclose(a[i:i + 1], b, rtol=0, atol=1e-12)

        # END FOR
