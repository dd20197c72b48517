import math

import numpy as np
import pytest

from bmwdesign.propensity import (
    FitConfig,
    PropensityFit,
    fit_logistic,
    penalized_gradient,
    penalized_loglik,
    predict_scores,
)

from oracles import logistic_grid_oracle

# (x, labels, frozen oracle (b0, b1)) -- computed with oracles.logistic_grid_oracle
TINY_DATASETS = [
    ([0, 0, 1, 1], [0, 1, 0, 1], (0.0, 0.0)),
    ([0, 0.25, 0.5, 0.75, 1, 0.6], [0, 1, 0, 1, 1, 0], (-1.7594685128514511, 3.3769511894056254)),
    ([0, 0.1, 0.4, 0.5, 0.9, 1], [1, 0, 0, 1, 0, 1], (-0.11681349439159147, 0.24169949997538437)),
    ([0, 0.2, 0.4, 0.6, 0.8, 1, 0.3, 0.7], [0, 0, 1, 0, 1, 1, 1, 0], (-1.4366949687950448, 2.8733899375900407)),
    ([0, 0.3, 0.5, 0.7, 1, 0.2], [0, 1, 1, 0, 1, 0], (-1.4249655318510688, 3.2297500859996697)),
]


def _fit(b0, b):
    b = np.atleast_1d(np.asarray(b, dtype=float))
    return PropensityFit(b0, b, np.array([]), True, 0, 0.0, 1e-6)


def test_zero_coefficients_give_half():
    x = np.random.default_rng(0).random((10, 3))
    assert np.all(predict_scores(_fit(0.0, [0, 0, 0]), x) == 0.5)


def test_predict_examples():
    assert predict_scores(_fit(0.0, [1.0]), np.array([[0.0]]))[0] == 0.5
    assert predict_scores(_fit(0.0, [1.0]), np.array([[40.0]]))[0] == 1 - 1e-12
    out = predict_scores(_fit(math.log(3), [0.0]), np.array([[0.0], [7.0], [-3.0]]))
    np.testing.assert_allclose(out, 0.75, rtol=1e-15)


def test_predict_dimension_mismatch():
    with pytest.raises(ValueError):
        predict_scores(_fit(0.0, [1.0, 2.0]), np.zeros((3, 3)))


def test_identical_features_give_half():
    x = np.full((8, 2), 0.3)
    fit = fit_logistic(x, [0, 1] * 4)
    assert fit.converged
    np.testing.assert_allclose(fit.coefficients, 0.0, atol=1e-6)
    np.testing.assert_allclose(fit.scores, 0.5, atol=1e-6)


def test_no_features_is_intercept_only():
    fit = fit_logistic(np.zeros((6, 0)), [0, 1, 0, 1, 1, 0])
    assert fit.coefficients.size == 0 and fit.intercept == 0.0
    assert np.all(fit.scores == 0.5)


@pytest.mark.parametrize("x, y, expected", TINY_DATASETS)
def test_matches_frozen_oracle(x, y, expected):
    fit = fit_logistic(np.array(x, dtype=float), np.array(y), FitConfig(ridge=1e-6))
    assert fit.converged
    assert abs(fit.intercept - expected[0]) < 1e-3
    assert abs(fit.coefficients[0] - expected[1]) < 1e-3


def test_oracle_reproduces_frozen_value():
    x, y, expected = TINY_DATASETS[1]
    b0, b1 = logistic_grid_oracle(x, y)
    assert abs(b0 - expected[0]) < 1e-9 and abs(b1 - expected[1]) < 1e-9


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(42)
    x = rng.random((20, 3))
    y = (rng.random(20) < 0.5).astype(float)
    h = 1e-5
    for _ in range(50):
        theta = rng.normal(scale=2.0, size=4)
        g = penalized_gradient(theta, x, y, 0.1)
        fd = np.empty(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd[k] = (penalized_loglik(theta + e, x, y, 0.1) - penalized_loglik(theta - e, x, y, 0.1)) / (2 * h)
        assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-8) < 1e-4


def test_converged_fit_is_stationary_and_improves_on_zero():
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = rng.random((28, 6))
        y = rng.permutation([0] * 14 + [1] * 14)
        fit = fit_logistic(x, y)
        assert fit.converged
        assert fit.final_gradient_norm <= 1e-6
        assert np.linalg.norm(penalized_gradient(fit.theta, x, y, fit.ridge_lambda)) <= 1e-6
        assert penalized_loglik(fit.theta, x, y, fit.ridge_lambda) >= penalized_loglik(
            np.zeros(7), x, y, fit.ridge_lambda
        )
        assert np.all((fit.scores > 0) & (fit.scores < 1))


def test_permutation_invariance():
    rng = np.random.default_rng(5)
    x = rng.random((20, 3))
    y = rng.permutation([0] * 10 + [1] * 10)
    perm = rng.permutation(20)
    a, b = fit_logistic(x, y), fit_logistic(x[perm], y[perm])
    np.testing.assert_allclose(a.theta, b.theta, atol=1e-7)


def test_mean_score_half_under_random_labels():
    rng = np.random.default_rng(9)
    x = rng.random((28, 6))
    means = [fit_logistic(x, rng.permutation([0] * 14 + [1] * 14)).scores.mean() for _ in range(100)]
    assert abs(np.mean(means) - 0.5) < 0.05


def test_separable_data_is_flagged_not_raised():
    x = np.array([[0.0], [0.1], [0.9], [1.0]])
    fit = fit_logistic(x, [0, 0, 1, 1], FitConfig(ridge=1e-6, max_iter=5))
    assert not fit.converged
    assert fit.iterations == 5
    assert np.all((fit.scores >= 1e-12) & (fit.scores <= 1 - 1e-12))


def test_separable_data_converges_with_ridge():
    fit = fit_logistic(np.array([[0.0], [0.1], [0.9], [1.0]]), [0, 0, 1, 1])
    assert fit.converged and fit.coefficients[0] > 10


def test_label_validation():
    with pytest.raises(ValueError):
        fit_logistic(np.zeros((4, 1)), [0, 1, 2, 1])
    with pytest.raises(ValueError):
        fit_logistic(np.zeros((4, 1)), [0, 1, 1])
