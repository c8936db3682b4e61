"""Unit tests for the tape, ops, special functions and Adam."""

import math

import numpy as np
import pytest

from src.autograd import ops
from src.autograd.gradcheck import check_gradients
from src.autograd.optim import Adam, AdamState, adam_step, clip_grad_norm
from src.autograd.special import special_digamma, special_log_gamma, special_trigamma
from src.autograd.tensor import Tape, Tensor
from src.utils.exceptions import (
    ArgumentError,
    ContractError,
    DegenerateRowError,
    DimensionError,
    DomainError,
    NumericError,
)


def test_matmul_identity():
    """Test identity times M returns M."""
    m = np.array([[1.0, 2.0], [3.0, 4.0]])
    out = ops.matmul(Tensor(np.eye(2)), Tensor(m))
    np.testing.assert_array_equal(out.data, m)


def test_matmul_scalar_product():
    """Test 1x1 product."""
    assert ops.matmul(Tensor([[2.0]]), Tensor([[3.0]])).data.tolist() == [[6.0]]


def test_matmul_shape_mismatch():
    """Test incompatible shapes raise DimensionError."""
    with pytest.raises(DimensionError):
        ops.matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((2, 3))))


def test_matmul_gradient_matches_finite_differences(rng):
    """Test matmul gradients against central differences."""
    a = Tensor(rng.normal(size=(4, 3)), requires_grad=True, name="a")
    b = Tensor(rng.normal(size=(3, 2)), requires_grad=True, name="b")
    weights = Tensor(rng.normal(size=(4, 2)))

    result = check_gradients(
        lambda: ops.sum_all(ops.mul(a @ b, weights)), {"a": a, "b": b}, tolerance=1e-6
    )

    assert result.passed, result.per_param


def test_relu_and_leaky_relu_values():
    """Test elementwise activations on hand values."""
    assert ops.relu(Tensor([[-1.0, 0.0, 2.0]])).data.tolist() == [[0.0, 0.0, 2.0]]
    assert ops.leaky_relu(Tensor([[-1.0]]), 0.2).data[0, 0] == pytest.approx(-0.2)
    assert ops.activation(Tensor([[-1.0]]), "leaky_relu", slope=0.2).data[0, 0] == pytest.approx(-0.2)


def test_relu_gradient_at_zero_is_zero():
    """Test relu takes the left derivative at exactly 0."""
    x = Tensor([[0.0, 1.0]], requires_grad=True, name="x")
    with Tape() as tape:
        loss = ops.sum_all(ops.relu(x))
    grads = tape.backward(loss, {"x": x})
    assert grads["x"].tolist() == [[0.0, 1.0]]


def test_log_of_nonpositive_raises():
    """Test log domain check."""
    with pytest.raises(DomainError):
        ops.log(Tensor([[0.0]]))


def test_unknown_activation():
    """Test unknown activation kind."""
    with pytest.raises(ArgumentError):
        ops.activation(Tensor([[1.0]]), "softplus")


def test_row_softmax_equal_logits():
    """Test equal logits give a uniform row."""
    out = ops.row_softmax(Tensor([[0.0, 0.0, 0.0]]))
    np.testing.assert_allclose(out.data, [[1 / 3, 1 / 3, 1 / 3]])


def test_row_softmax_single_entry():
    """Test a one-entry row is exactly 1."""
    assert ops.row_softmax(Tensor([[5.0]])).data.tolist() == [[1.0]]


def test_row_softmax_matches_direct_formula():
    """Test row [1,2,3] against exp / sum(exp)."""
    out = ops.row_softmax(Tensor([[1.0, 2.0, 3.0]])).data[0]
    expected = np.exp([1.0, 2.0, 3.0]) / np.exp([1.0, 2.0, 3.0]).sum()
    np.testing.assert_allclose(out, expected, rtol=1e-12)
    assert out.sum() == pytest.approx(1.0)


def test_row_softmax_mask_zeroes_entries():
    """Test masked entries come back as exact zeros."""
    mask = np.array([[True, False, True]])
    out = ops.row_softmax(Tensor([[1.0, 100.0, 1.0]]), mask).data
    assert out[0, 1] == 0.0
    np.testing.assert_allclose(out[0, [0, 2]], [0.5, 0.5])


def test_row_softmax_fully_masked_row():
    """Test a row with nothing left raises DegenerateRowError."""
    with pytest.raises(DegenerateRowError):
        ops.row_softmax(Tensor([[1.0, 2.0]]), np.array([[False, False]]))


def test_sum_pool():
    """Test column sums and the single-row identity."""
    assert ops.sum_pool(Tensor([[1.0, 2.0], [3.0, 4.0]])).data.tolist() == [[4.0, 6.0]]
    assert ops.sum_pool(Tensor([[7.0, 8.0]])).data.tolist() == [[7.0, 8.0]]


def test_backward_of_sum_is_ones():
    """Test d sum(W) / dW = ones."""
    W = Tensor(np.arange(4.0).reshape(2, 2), requires_grad=True, name="W")
    with Tape() as tape:
        loss = ops.sum_all(W)
    grads = tape.backward(loss, {"W": W})
    np.testing.assert_array_equal(grads["W"], np.ones((2, 2)))


def test_backward_unreached_parameter_gets_zeros():
    """Test a parameter the loss does not use gets a zero gradient."""
    W = Tensor(np.ones((2, 2)), requires_grad=True, name="W")
    x = Tensor([[3.0]], requires_grad=True, name="x")
    with Tape() as tape:
        loss = ops.scale(x, 2.0)
    grads = tape.backward(loss, {"W": W, "x": x})
    np.testing.assert_array_equal(grads["W"], np.zeros((2, 2)))
    assert grads["x"][0, 0] == 2.0


def test_backward_accumulates_shared_inputs():
    """Test gradients add up when a tensor feeds several ops."""
    x = Tensor([[2.0]], requires_grad=True, name="x")
    with Tape() as tape:
        loss = ops.mul(x, x) + x
    assert tape.backward(loss, [x])["0"][0, 0] == pytest.approx(5.0)


def test_backward_needs_scalar_loss():
    """Test a non-scalar loss is rejected."""
    x = Tensor(np.ones((2, 2)), requires_grad=True)
    with Tape() as tape:
        y = ops.scale(x, 2.0)
    with pytest.raises(ContractError):
        tape.backward(y, [x])


def test_ops_outside_tape_are_not_recorded():
    """Test forward evaluation without an active tape."""
    x = Tensor([[1.0]], requires_grad=True)
    y = ops.scale(x, 3.0)
    assert y.requires_grad is False
    assert y.data[0, 0] == 3.0


def test_debug_numerics_flags_non_finite():
    """Test the NaN check after each op."""
    with pytest.raises(NumericError):
        ops.exp(Tensor([[1000.0]]))


def test_broadcast_add_gradient():
    """Test a 1 x d bias broadcast over rows sums its gradient back."""
    x = Tensor(np.ones((3, 2)), requires_grad=True, name="x")
    b = Tensor(np.zeros((1, 2)), requires_grad=True, name="b")
    with Tape() as tape:
        loss = ops.sum_all(x + b)
    grads = tape.backward(loss, {"x": x, "b": b})
    np.testing.assert_array_equal(grads["b"], [[3.0, 3.0]])


def test_scatter_symmetric_places_both_orientations():
    """Test one value per undirected edge lands at (i, j) and (j, i)."""
    values = Tensor([[0.3], [0.7]])
    out = ops.scatter_symmetric(values, np.array([0, 1]), np.array([1, 2]), 3).data
    assert out[0, 1] == out[1, 0] == 0.3
    assert out[1, 2] == out[2, 1] == 0.7
    assert out[0, 2] == 0.0


def test_special_functions():
    """Test log-gamma closed forms and digamma/trigamma reference values."""
    assert special_log_gamma(1.0) == pytest.approx(0.0, abs=1e-15)
    assert special_log_gamma(5.0) == pytest.approx(math.log(24.0), rel=1e-12)
    assert special_digamma(1.0) == pytest.approx(-0.5772156649015329, rel=1e-12)
    assert special_trigamma(1.0) == pytest.approx(math.pi**2 / 6, rel=1e-12)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan")])
def test_special_functions_domain(x):
    """Test non-positive and NaN inputs are rejected."""
    with pytest.raises(DomainError):
        special_log_gamma(x)


def test_log_gamma_op_matches_scalar():
    """Test the tape op agrees with the scalar function."""
    out = ops.log_gamma(Tensor([[0.5, 3.0]])).data[0]
    assert out[1] == pytest.approx(math.log(2.0))
    assert out[0] == pytest.approx(special_log_gamma(0.5))


def test_adam_zero_gradient_keeps_params():
    """Test a zero gradient leaves params unchanged and decays the moments."""
    p = Tensor([[1.0, -2.0]], requires_grad=True, name="p")
    state = AdamState(m={"p": np.array([[0.5, 0.5]])}, v={"p": np.array([[0.1, 0.1]])}, step=3)
    m_before = state.m["p"].copy()

    adam_step({"p": p}, {"p": np.zeros((1, 2))}, state, lr=0.1)

    assert state.step == 4
    np.testing.assert_allclose(state.m["p"], 0.9 * m_before)
    assert np.all(np.abs(state.v["p"]) < 0.1)
    # zero gradient moves params only through the decaying moments
    assert np.all(np.abs(p.data - [[1.0, -2.0]]) < 0.2)


def test_adam_fresh_zero_gradient_is_noop():
    """Test zero moments plus zero gradient leaves params bitwise unchanged."""
    p = Tensor([[1.0, -2.0]], requires_grad=True, name="p")
    adam_step({"p": p}, {"p": np.zeros((1, 2))}, AdamState(), lr=0.1)
    assert p.data.tolist() == [[1.0, -2.0]]


def test_adam_first_step_moves_by_lr():
    """Test the bias-corrected first step is lr * sign(grad)."""
    p = Tensor([[0.0, 0.0]], requires_grad=True, name="p")
    opt = Adam({"p": p}, lr=0.01)
    opt.step({"p": np.array([[3.0, -0.5]])})
    np.testing.assert_allclose(p.data, [[-0.01, 0.01]], rtol=1e-6)


def test_adam_two_step_trace():
    """Test two steps against a scalar evaluation of the bias-corrected update."""
    p = Tensor([[1.0]], requires_grad=True, name="p")
    opt = Adam({"p": p}, lr=0.1)
    expected, m, v = 1.0, 0.0, 0.0
    for t, g in enumerate((0.5, -1.0), start=1):
        opt.step({"p": np.array([[g]])})
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        expected -= 0.1 * (m / (1 - 0.9**t)) / (math.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert p.data[0, 0] == pytest.approx(expected, abs=1e-12)
        if t == 1:
            assert p.data[0, 0] == pytest.approx(0.900000002, abs=1e-9)
    assert p.data[0, 0] == pytest.approx(0.93661036, abs=1e-6)


def test_adam_rejects_bad_inputs():
    """Test learning-rate and shape validation."""
    p = Tensor([[0.0]], requires_grad=True, name="p")
    with pytest.raises(ArgumentError):
        Adam({"p": p}, lr=0.0)
    with pytest.raises(DimensionError):
        adam_step({"p": p}, {"p": np.zeros((2, 2))}, AdamState(), lr=0.1)


def test_adam_state_round_trip():
    """Test optimizer moments survive state_arrays/load_state_arrays."""
    p = Tensor([[1.0]], requires_grad=True, name="p")
    opt = Adam({"p": p}, lr=0.01)
    opt.step({"p": np.array([[1.0]])})

    other = Adam({"p": Tensor([[1.0]], requires_grad=True, name="p")}, lr=0.01)
    other.load_state_arrays(opt.state_arrays())

    assert other.state.step == 1
    np.testing.assert_array_equal(other.state.m["p"], opt.state.m["p"])


def test_clip_grad_norm():
    """Test global-norm clipping rescales only above the limit."""
    grads = {"a": np.array([3.0]), "b": np.array([4.0])}
    clipped, norm = clip_grad_norm(grads, 1.0)
    assert norm == pytest.approx(5.0)
    np.testing.assert_allclose(clipped["a"], [0.6])
    unchanged, _ = clip_grad_norm(grads, 10.0)
    np.testing.assert_array_equal(unchanged["b"], [4.0])
