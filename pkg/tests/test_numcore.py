import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from auglik import numcore
from auglik.errors import ContractError, NumericInputError
from auglik.numcore import MlpModel

from oracles import mp_log_softmax, straight_line_forward


def test_log_softmax_uniform():
    assert numcore.log_softmax([0.0, 0.0], 0) == pytest.approx(-math.log(2), abs=1e-15)


def test_log_softmax_confident():
    v = numcore.log_softmax([100.0, -100.0], 0)
    assert -1e-80 < v <= 0.0


def test_log_softmax_three_classes_matches_high_precision():
    ref = mp_log_softmax([1, 2, 3], 2)
    assert ref == pytest.approx(-0.407606, abs=1e-6)
    assert numcore.log_softmax([1.0, 2.0, 3.0], 2) == pytest.approx(ref, rel=1e-14)


def test_log_softmax_errors():
    with pytest.raises(ContractError):
        numcore.log_softmax([0.0, 1.0], 2)
    with pytest.raises(ContractError):
        numcore.log_softmax([0.0, 1.0], -1)
    with pytest.raises(ContractError):
        numcore.log_softmax([0.0], 0)
    with pytest.raises(NumericInputError):
        numcore.log_softmax([np.nan, 1.0], 0)
    with pytest.raises(NumericInputError):
        numcore.log_softmax([np.inf, 1.0], 0)


logit_vectors = arrays(np.float64, st.integers(2, 8), elements=st.floats(-300, 300))


@given(logit_vectors)
def test_log_softmax_normalizes(logits):
    total = sum(math.exp(numcore.log_softmax(logits, y)) for y in range(logits.size))
    assert abs(total - 1.0) < 1e-12


@given(logit_vectors, st.floats(-50, 50))
def test_log_softmax_shift_invariance(logits, c):
    for y in range(logits.size):
        a = numcore.log_softmax(logits, y)
        b = numcore.log_softmax(logits + c, y)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@given(logit_vectors)
def test_log_softmax_nonpositive(logits):
    assert all(numcore.log_softmax(logits, y) <= 0.0 for y in range(logits.size))


def test_model_validation():
    with pytest.raises(ContractError):
        MlpModel((3,))
    with pytest.raises(ContractError):
        MlpModel((3, 1))
    with pytest.raises(ContractError):
        MlpModel((3, 2), activation="sigmoid")


def test_param_layout_is_bijection():
    model = MlpModel((3, 5, 4, 2))
    seen = set()
    for j in range(model.n_params):
        coord = model.index_of(j)
        assert coord not in seen
        seen.add(coord)
    assert len(seen) == model.n_params == 3 * 5 + 5 + 5 * 4 + 4 + 4 * 2 + 2


def test_init_ranges():
    model = MlpModel((6, 10, 3))
    w = model.init_params(np.random.default_rng(0))
    (W0, b0), (W1, b1) = model.unpack(w)
    assert np.all(b0 == 0) and np.all(b1 == 0)
    assert np.max(np.abs(W0)) <= math.sqrt(6 / 16)
    assert np.max(np.abs(W1)) <= math.sqrt(6 / 13)


def test_forward_zero_weights():
    model = MlpModel((4, 7, 3), bias=False)
    X = np.random.default_rng(1).normal(size=(5, 4))
    assert np.all(numcore.forward_logits(model, np.zeros(model.n_params), X) == 0.0)


def test_forward_identity_layer():
    model = MlpModel((3, 3), bias=True)
    w = np.concatenate([np.eye(3).ravel(), np.zeros(3)])
    X = np.random.default_rng(2).normal(size=(4, 3))
    np.testing.assert_array_equal(numcore.forward_logits(model, w, X), X)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("activation", ["relu", "tanh"])
def test_forward_matches_straight_line(seed, activation):
    rng = np.random.default_rng(seed)
    model = MlpModel((5, 8, 6, 3), activation, bias=bool(seed % 2))
    w = rng.normal(size=model.n_params)
    X = rng.normal(size=(4, 5))
    got = numcore.forward_logits(model, w, X)
    for i in range(4):
        ref = np.array(straight_line_forward(model.layer_widths, activation, model.bias, w, X[i]))
        np.testing.assert_allclose(got[i], ref, rtol=1e-12, atol=1e-12 * np.max(np.abs(ref)))


def test_forward_shape_errors():
    model = MlpModel((3, 2))
    with pytest.raises(ContractError):
        numcore.forward_logits(model, np.zeros(model.n_params), np.zeros((2, 4)))
    with pytest.raises(ContractError):
        numcore.forward_logits(model, np.zeros(model.n_params + 1), np.zeros((2, 3)))


def test_forward_is_pure():
    rng = np.random.default_rng(3)
    model = MlpModel((4, 16, 3))
    w = rng.normal(size=model.n_params)
    X = rng.normal(size=(10, 4))
    a = numcore.forward_logits(model, w, X)
    b = numcore.forward_logits(model, w.copy(), X.copy())
    assert a.tobytes() == b.tobytes()


def _label_objective(labels):
    labels = np.asarray(labels)

    def objective(logits):
        lsm = numcore.log_softmax_rows(logits)
        onehot = np.eye(logits.shape[1])[labels]
        return lsm[np.arange(len(labels)), labels].sum(), onehot - np.exp(lsm)

    return objective


def test_grad_linear_model_analytic():
    rng = np.random.default_rng(4)
    model = MlpModel((3, 4), bias=True)
    w = rng.normal(size=model.n_params)
    x = rng.normal(size=(1, 3))
    y = 2
    _, g = numcore.grad_objective(model, w, x, _label_objective([y]))
    logits = numcore.forward_logits(model, w, x)[0]
    delta = np.eye(4)[y] - np.exp(logits - np.log(np.sum(np.exp(logits))))
    expected = np.concatenate([np.outer(x[0], delta).ravel(), delta])
    np.testing.assert_allclose(g, expected, rtol=1e-13, atol=1e-15)


def test_grad_zero_at_symmetric_saddle():
    model = MlpModel((3, 5, 2), bias=False)
    X = np.random.default_rng(5).normal(size=(4, 3))
    X = np.vstack([X, X])
    y = [0] * 4 + [1] * 4
    _, g = numcore.grad_objective(model, np.zeros(model.n_params), X, _label_objective(y))
    assert np.all(g == 0.0)


@pytest.mark.parametrize("seed", range(10))
def test_grad_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    depth = seed % 4
    model = MlpModel((4, *[16] * depth, 3), ("relu", "tanh")[seed % 2], bool(seed % 3))
    w = rng.normal(0, 0.7, size=model.n_params)
    X = rng.normal(size=(6, 4))
    y = rng.integers(3, size=6)
    obj = _label_objective(y)
    _, g = numcore.grad_objective(model, w, X, obj)
    fd = numcore.finite_difference_gradient(lambda v: numcore.objective_value(model, v, X, obj), w)
    assert numcore.max_relative_error(g, fd) < 1e-5
    assert numcore.max_relative_error(fd, g) < 1e-5


def test_relu_kink_subgradient_is_zero():
    model = MlpModel((1, 1, 2), bias=False)
    # hidden pre-activation is exactly 0 for x = 0
    w = np.array([1.0, 1.0, -1.0])
    _, g = numcore.grad_objective(model, w, np.zeros((1, 1)), _label_objective([0]))
    assert np.all(g == 0.0)


def test_fd_constant_objective():
    w = np.random.default_rng(6).normal(size=7)
    np.testing.assert_array_equal(numcore.finite_difference_gradient(lambda v: 3.0, w), np.zeros(7))


@settings(max_examples=30)
@given(arrays(np.float64, st.integers(1, 10), elements=st.floats(-3, 3)))
def test_fd_quadratic(w):
    g = numcore.finite_difference_gradient(lambda v: 0.5 * float(v @ v), w)
    np.testing.assert_allclose(g, w, rtol=0, atol=1e-8)


def test_fd_step_rule():
    w = np.array([0.0, -2.0, 10.0])
    np.testing.assert_allclose(numcore.fd_step(w), [1e-5, 3e-5, 1.1e-4])
