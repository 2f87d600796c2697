import math

import numpy as np
import pytest

from mobidfl.errors import ConfigError, ContractViolation, NumericalError
from mobidfl.learning import (
    ModelSpec,
    OptimizerState,
    evaluate,
    init_model,
    local_update,
    loss_and_gradient,
    sgd_step,
)

SPECS = [ModelSpec("logistic", 5, 4), ModelSpec("mlp", 5, 4, hidden=6)]


def central_difference(spec, theta, X, y):
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        h = 1e-5 * (1 + abs(theta[k]))
        up, down = theta.copy(), theta.copy()
        up[k] += h
        down[k] -= h
        grad[k] = (loss_and_gradient(spec, up, X, y)[0] - loss_and_gradient(spec, down, X, y)[0]) / (2 * h)
    return grad


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_gradient_matches_finite_differences(spec):
    rng = np.random.default_rng(0)
    for _ in range(10):
        theta = rng.normal(scale=0.7, size=spec.size)
        X = rng.normal(size=(int(rng.integers(1, 12)), spec.n_features))
        y = rng.integers(0, spec.n_classes, size=X.shape[0])
        _, g = loss_and_gradient(spec, theta, X, y)
        fd = central_difference(spec, theta, X, y)
        assert np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-12) < 1e-4


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_zero_model_loss_is_log_num_classes(spec):
    X = np.random.default_rng(1).normal(size=(9, spec.n_features))
    y = np.arange(9) % spec.n_classes
    loss, _ = loss_and_gradient(spec, np.zeros(spec.size), X, y)
    assert loss == pytest.approx(math.log(spec.n_classes), rel=1e-12)


def test_gradient_vanishes_at_separable_minimum():
    # 1-D, two classes, one sample each at x=-1 (class 0) and x=+1 (class 1).
    # The logit gap is 2*w*x + 2*b; with w large the loss tends to 0 and so does the gradient.
    spec = ModelSpec("logistic", 1, 2)
    X = np.array([[-1.0], [1.0]])
    y = np.array([0, 1])
    theta = np.array([-10.0, 10.0, 0.0, 0.0])  # W rows (class 0, class 1), then biases
    _, g = loss_and_gradient(spec, theta, X, y)
    # per-sample error probability is 1/(1+e^20) ~ 2e-9
    assert np.linalg.norm(g) < 1e-6


def test_empty_batch_and_wrong_width_rejected():
    spec = SPECS[0]
    with pytest.raises(ContractViolation):
        loss_and_gradient(spec, np.zeros(spec.size), np.zeros((0, 5)), np.zeros(0, dtype=int))
    with pytest.raises(ContractViolation):
        loss_and_gradient(spec, np.zeros(spec.size), np.zeros((2, 3)), np.zeros(2, dtype=int))


def test_non_finite_raises():
    spec = SPECS[0]
    theta = np.full(spec.size, np.nan)
    with pytest.raises(NumericalError):
        loss_and_gradient(spec, theta, np.ones((2, 5)), np.array([0, 1]))


def test_zero_learning_rate_keeps_model():
    spec = SPECS[1]
    rng = np.random.default_rng(2)
    theta = init_model(spec, rng)
    X, y = rng.normal(size=(6, 5)), rng.integers(0, 4, size=6)
    new, _, _ = local_update(spec, theta, OptimizerState(0.0, 0.9, 5e-4), X, y)
    assert np.array_equal(new, theta)


def test_plain_step_without_momentum_or_decay():
    spec = SPECS[0]
    rng = np.random.default_rng(3)
    theta = rng.normal(size=spec.size)
    X, y = rng.normal(size=(6, 5)), rng.integers(0, 4, size=6)
    _, g = loss_and_gradient(spec, theta, X, y)
    new, _, _ = local_update(spec, theta, OptimizerState(0.3), X, y)
    assert np.array_equal(new, theta - 0.3 * g)


def test_quadratic_toy_step():
    x, c = np.array([0.0]), np.array([1.0])
    new, _ = sgd_step(x, x - c, OptimizerState(0.1))
    assert new.tolist() == [0.1]


def test_momentum_and_weight_decay():
    x = np.array([1.0, 2.0])
    opt = OptimizerState(0.5, momentum=0.9, weight_decay=0.1)
    mask = np.array([1.0, 0.0])
    x1, opt = sgd_step(x, np.array([1.0, 1.0]), opt, mask)
    # m = g + wd*x*mask = [1.1, 1.0]
    assert np.allclose(x1, [1.0 - 0.55, 2.0 - 0.5], rtol=0, atol=1e-15)
    x2, opt = sgd_step(x1, np.array([0.0, 0.0]), opt, mask)
    m2 = 0.9 * np.array([1.1, 1.0]) + np.array([0.1 * x1[0], 0.0])
    assert np.allclose(x2, x1 - 0.5 * m2, rtol=0, atol=1e-15)


def test_weight_mask_excludes_biases():
    spec = SPECS[1]
    parts = spec.unpack(spec.weight_mask())
    assert parts["W1"].min() == 1 and parts["W2"].min() == 1
    assert parts["b1"].max() == 0 and parts["b2"].max() == 0


def test_evaluate_examples():
    spec = ModelSpec("logistic", 3, 10)
    X = np.random.default_rng(4).normal(size=(100, 3))
    y = np.arange(100) % 10
    assert evaluate(spec, np.zeros(spec.size), X, y) == 0.1
    always0 = np.zeros(spec.size)
    spec.unpack(always0)["b"][0] = 1.0
    assert evaluate(spec, always0, X, y) == 0.1


def test_memorizing_model_scores_perfectly():
    spec = ModelSpec("logistic", 4, 4)
    X = np.eye(4) * 3
    y = np.arange(4)
    theta = np.zeros(spec.size)
    spec.unpack(theta)["W"][...] = np.eye(4)
    assert evaluate(spec, theta, X, y) == 1.0


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_init_model(spec):
    a = init_model(spec, np.random.default_rng(7))
    b = init_model(spec, np.random.default_rng(7))
    assert a.tobytes() == b.tobytes()
    parts = spec.unpack(a)
    for name, shape in spec.layers:
        if name.startswith("b"):
            assert not parts[name].any()
        else:
            assert np.abs(parts[name]).max() <= 1 / math.sqrt(shape[1])


def test_loss_decreases_for_small_steps():
    from mobidfl.data import synth_blobs

    data = synth_blobs(10, 20, 20, 1.0, np.random.default_rng(0))
    spec = ModelSpec("logistic", data.dim, 10)
    rng = np.random.default_rng(1)
    for _ in range(100):
        theta = rng.normal(size=spec.size)
        before, _ = loss_and_gradient(spec, theta, data.features, data.labels)
        new, _, _ = local_update(spec, theta, OptimizerState(0.01), data.features, data.labels)
        after, _ = loss_and_gradient(spec, new, data.features, data.labels)
        assert after <= before


def test_bad_spec():
    with pytest.raises(ConfigError):
        ModelSpec("cnn", 3, 2)
    with pytest.raises(ConfigError):
        ModelSpec("mlp", 3, 2, hidden=0)
