import numpy as np
import pytest
import torch

from objectives                  import create_design_space, create_constraint
from models.made.made            import MADE, ModelConfig


@pytest.fixture
def synt2d():
    """(space, constraint) of the 2D Synt problem on the default 100-bin grid"""
    return create_design_space(objective='synt', dims=2), create_constraint(objective='synt')


@pytest.fixture
def ackley2d():
    return create_design_space(objective='ackley', dims=2), create_constraint(objective='ackley')


@pytest.fixture
def tiny_config():
    return ModelConfig(dims=2, num_mixtures=3, hidden_sizes=[6, 6], first_unit_hidden=[4], grid=10)


@pytest.fixture
def tiny_model(tiny_config):
    torch.manual_seed(0)
    return MADE(tiny_config)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def fast_run_config(**overrides):
    """Small-budget run configuration for end-to-end tests"""
    from parse_args import Parse

    args = dict(Parse(['run']).defaults)
    args.update(iters=2, n_init=20, n_s=10, n_e=1, nr_mix=5, hidden=[16, 16], first_unit_hidden=[8],
                record_samples=100, eval_samples=200, final_samples=50, debug=0)
    args.update(overrides)

    return args
