import math
import numpy as np
import pytest

from errors                     import ContractError
from objectives.design_space    import DesignSpace
from models.cem.kde             import (BANDWIDTH_FLOOR, CEMPPKDE, kde_fit, kde_log_prob_discrete, kde_logpdf,
                                        kde_sample, scott_factor)
from models.abstract_optimizers import search_loop
from metrics                    import entropy_per_dim


def test_scott_factor():
    assert scott_factor(100, 2) == pytest.approx(0.46416, abs=1e-5)


def test_bandwidth_follows_scott_rule():
    points = np.random.default_rng(0).normal(size=(100, 2)) * [0.2, 0.5]
    model  = kde_fit(points)

    np.testing.assert_allclose(model.bandwidth, scott_factor(100, 2) * points.std(axis=0, ddof=1))


def test_symmetric_points_give_symmetric_density():
    model = kde_fit([[0.3, -0.2], [-0.3, 0.2]])
    x     = np.random.default_rng(1).uniform(-1, 1, size=(25, 2))

    np.testing.assert_allclose(kde_logpdf(model, x), kde_logpdf(model, -x), rtol=1e-12)


def test_single_point_uses_floor():
    model   = kde_fit([[0.25, -0.5]])
    samples = kde_sample(model, 200, 0)

    np.testing.assert_array_equal(model.bandwidth, [BANDWIDTH_FLOOR, BANDWIDTH_FLOOR])
    assert np.mean(np.abs(samples - [0.25, -0.5])) < 3 * BANDWIDTH_FLOOR
    assert np.max(np.abs(samples - [0.25, -0.5])) < 7 * BANDWIDTH_FLOOR


def test_logpdf_integrates_to_one():
    model = kde_fit(np.random.default_rng(2).uniform(-0.5, 0.5, size=(5, 2)))
    axis  = np.arange(-3, 3, 0.02) + 0.01
    x1, x2 = np.meshgrid(axis, axis)

    total = np.exp(kde_logpdf(model, np.stack([x1.ravel(), x2.ravel()], axis=1))).sum() * 0.02 ** 2
    assert total == pytest.approx(1., abs=0.02)


def test_logpdf_of_single_design_is_scalar():
    model = kde_fit([[0.], [1.]])
    assert np.ndim(kde_logpdf(model, [0.5])) == 0


def test_fit_rejects_empty():
    with pytest.raises(ContractError):
        kde_fit(np.zeros((0, 2)))


def test_sample_is_deterministic():
    model = kde_fit(np.random.default_rng(3).normal(size=(10, 2)))
    np.testing.assert_array_equal(kde_sample(model, 20, 4), kde_sample(model, 20, 4))


def test_discrete_pmf_is_normalized():
    space = DesignSpace(2, -1, 1, grid=25)
    model = kde_fit(np.random.default_rng(4).uniform(-0.9, 0.9, size=(8, 2)))
    idx   = space.enumerate_indices()

    total = np.exp(kde_log_prob_discrete(model, space, space.index_to_normalized(idx))).sum()
    assert total == pytest.approx(1., abs=1e-9)


def test_cempp_kde_run(synt2d):
    space, constraint = synt2d
    algo    = CEMPPKDE(space, constraint, seed=2)

    assert entropy_per_dim(algo, 1000, 0) == pytest.approx(math.log(100), abs=1e-9)

    records = [r for r, _ in search_loop(algo, space, constraint, iters=3, seed=2, record_samples=200)]

    assert [r.evals for r in records] == [50, 75, 100, 125]
    assert algo.kde is not None
    assert space.is_on_grid(algo.sample(10, 0))

    other = CEMPPKDE(space, constraint, seed=9)
    other.load_state_dict(algo.state_dict())
    np.testing.assert_array_equal(other.sample(10, 0), algo.sample(10, 0))
