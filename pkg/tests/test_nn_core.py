"""Unit tests for dcc.nn_core: network shapes, forward and backward passes,
spectral normalization and the Adam optimizer.

See license and disclaimer at the top level directory of this project.

"""

import math

import numpy as np
import pytest
import scipy.special

import dcc
import dcc.nn_core
from dcc.nn_core import DenseNet, Layer, AdamState


def _zero_net(d=2, width=4):
    return DenseNet([Layer(np.zeros((width, d)), np.zeros(width)),
                     Layer(np.zeros((1, width)), np.zeros(1))])


def _activation_masks(net, inputs):
    _, cache = dcc.nn_core.forward_pass(net, inputs)
    return [z > 0.0 for _, z in cache[:-1]]


def test_net_shape():
    """
    Test depth and width of the synthetic and PIMA networks
    """
    # Setup
    # Exercise
    # Verify
    assert dcc.nn_core.net_shape(2, 1190, 2.0) == (11, 42)
    assert dcc.nn_core.net_shape(2, 2, 2.0) == (1, 8)
    assert dcc.nn_core.net_shape(8, 350, 12.0) == (9, 17)
    with pytest.raises(dcc.ShapeError):
        dcc.nn_core.net_shape(2, 1, 2.0)
    # Cleanup -- not needed
# end test_net_shape


def test_build_net_layout():
    """
    Test layer shapes of a built network
    """
    # Setup
    # Exercise
    net = dcc.nn_core.build_net(2, 1190, 2.0, seed=0)
    # Verify
    assert net.depth == 11
    assert net.width == 42
    assert net.layers[0].weights.shape == (42, 2)
    assert net.layers[-1].weights.shape == (1, 42)
    assert all((ly.biases == 0.0).all() for ly in net.layers)
    assert len(net.parameters()) == 24
    # Cleanup -- not needed
# end test_build_net_layout


def test_zero_network_outputs_log2():
    """
    Test the softplus output of an all-zero network
    """
    # Setup
    net = _zero_net()
    # Exercise
    out = dcc.nn_core.forward(net, [0.3, 0.7])
    # Verify
    assert out == pytest.approx(math.log(2.0), rel=1e-15)
    # Cleanup -- not needed
# end test_zero_network_outputs_log2


def test_outputs_are_positive():
    """
    Test outputs are positive and finite on many random inputs
    """
    # Setup
    net = dcc.nn_core.build_net(3, 100, 2.0, seed=1)
    inputs = np.random.default_rng(0).random((100000, 3))
    # Exercise
    out = dcc.nn_core.forward(net, inputs)
    # Verify
    assert out.shape == (100000,)
    assert (out > 0.0).all()
    assert np.isfinite(out).all()
    # Cleanup -- not needed
# end test_outputs_are_positive


def test_backward_single_layer():
    """
    Test the gradient of softplus(w.x + b) against its closed form
    """
    # Setup
    w = np.array([[0.4, -0.3]])
    b = np.array([0.1])
    net = DenseNet([Layer(w, b)])
    x = np.array([[0.2, 0.9], [0.5, 0.5]])
    upstream = np.array([1.0, -2.0])
    s = scipy.special.expit(x @ w[0] + b[0])
    # Exercise
    dw, db = dcc.nn_core.backward(net, x, upstream)
    # Verify
    assert dw[0] == pytest.approx(((upstream * s)[:, None] * x).sum(axis=0))
    assert db == pytest.approx([(upstream * s).sum()])
    # Cleanup -- not needed
# end test_backward_single_layer


@pytest.mark.parametrize("d, n_y, r", [
    (2, 8, 2.0),
    # synthetic: 42 units, 11 hidden layers
    (2, 1190, 2.0),
    # PIMA fit splits of both classes
    (8, 297, 12.0),
    (8, 160, 12.0),
])
def test_backward_matches_finite_differences(d, n_y, r):
    """
    Test reverse-mode gradients against central differences on random
    parameters, skipping perturbations that switch a ReLU
    """
    # Setup
    rng = np.random.default_rng(42)
    net = dcc.nn_core.build_net(d, n_y, r, seed=3)
    for layer in net.layers:
        layer.biases = rng.normal(scale=0.1, size=layer.biases.shape)
    x = rng.random((10, d))
    upstream = rng.normal(size=10)
    params = net.parameters()
    step = 1e-5
    # Exercise
    grads = dcc.nn_core.backward(net, x, upstream)
    _, cache = dcc.nn_core.forward_pass(net, x)
    cached = dcc.nn_core.backward(net, x, upstream, dcc.nn_core.expand_cache(
        x, dcc.nn_core.compact_cache(cache)))
    # Verify
    for g, h in zip(grads, cached):
        assert np.array_equal(g, h)
    checked = 0
    for _ in range(64):
        k = int(rng.integers(len(params)))
        idx = tuple(int(rng.integers(n)) for n in params[k].shape)
        original = params[k][idx]
        params[k][idx] = original + step
        masks_plus = _activation_masks(net, x)
        plus = upstream @ dcc.nn_core.forward(net, x)
        params[k][idx] = original - step
        masks_minus = _activation_masks(net, x)
        minus = upstream @ dcc.nn_core.forward(net, x)
        params[k][idx] = original
        if any((a != b).any() for a, b in zip(masks_plus, masks_minus)):
            continue
        numeric = (plus - minus) / (2.0 * step)
        analytic = grads[k][idx]
        assert abs(numeric - analytic) <= \
            1e-4 * max(abs(numeric), abs(analytic), 1e-3)
        checked += 1
    assert checked >= 48
    # Cleanup -- not needed
# end test_backward_matches_finite_differences


def test_backward_shapes():
    """
    Test zero upstream gradients give zero gradients and mismatched shapes
    are rejected
    """
    # Setup
    net = dcc.nn_core.build_net(2, 16, 2.0, seed=0)
    x = np.random.default_rng(0).random((5, 2))
    # Exercise
    grads = dcc.nn_core.backward(net, x, np.zeros(5))
    # Verify
    assert all((g == 0.0).all() for g in grads)
    assert [g.shape for g in grads] == [p.shape for p in net.parameters()]
    with pytest.raises(dcc.ShapeError):
        dcc.nn_core.backward(net, x, np.zeros(4))
    with pytest.raises(dcc.ShapeError):
        dcc.nn_core.forward(net, np.zeros((5, 3)))
    # Cleanup -- not needed
# end test_backward_shapes


def test_spectral_normalize_identity_and_diagonal():
    """
    Test an orthonormal matrix is kept and a diagonal one is rescaled by its
    largest entry
    """
    # Setup
    identity = DenseNet([Layer(np.eye(3), np.zeros(3))])
    diagonal = DenseNet([Layer(np.diag([3.0, 1.0]), np.zeros(2))])
    # Exercise
    dcc.nn_core.spectral_normalize(identity, 5)
    dcc.nn_core.spectral_normalize(diagonal, 50)
    # Verify
    assert np.allclose(identity.layers[0].weights, np.eye(3), atol=1e-12)
    assert np.allclose(diagonal.layers[0].weights,
                       np.diag([1.0, 1.0 / 3.0]), atol=1e-6)
    with pytest.raises(ValueError):
        dcc.nn_core.spectral_normalize(identity, 0)
    # Cleanup -- not needed
# end test_spectral_normalize_identity_and_diagonal


def test_spectral_normalize_bounds_operator_norm():
    """
    Test the operator norm of every layer against an SVD and the projection
    being a fixed point
    """
    # Setup
    net = dcc.nn_core.build_net(2, 500, 2.0, seed=5)
    for layer in net.layers:
        layer.weights = layer.weights * 3.0
    # Exercise
    dcc.nn_core.spectral_normalize(net, 200)
    before = [ly.weights.copy() for ly in net.layers]
    dcc.nn_core.spectral_normalize(net, 200)
    # Verify
    for layer, w in zip(net.layers, before):
        assert np.linalg.norm(layer.weights, 2) <= 1.0 + 1e-3
        assert np.allclose(layer.weights, w, atol=1e-6)
    # Cleanup -- not needed
# end test_spectral_normalize_bounds_operator_norm


def test_version_counter():
    """
    Test every parameter update bumps the network version
    """
    # Setup
    net = dcc.nn_core.build_net(2, 16, 2.0, seed=0)
    state = AdamState(net)
    grads = [np.ones_like(p) for p in net.parameters()]
    # Exercise
    v0 = net.version
    dcc.nn_core.spectral_normalize(net, 1)
    v1 = net.version
    dcc.nn_core.adam_step(net, grads, state)
    # Verify
    assert v0 < v1 < net.version
    # Cleanup -- not needed
# end test_version_counter


def test_adam_first_step():
    """
    Test the first Adam step moves every parameter by about lr against its
    gradient
    """
    # Setup
    net = dcc.nn_core.build_net(2, 16, 2.0, seed=0)
    state = AdamState(net, lr=1e-3)
    rng = np.random.default_rng(0)
    grads = [np.sign(rng.normal(size=p.shape)) * rng.uniform(1e-3, 1.0,
                                                             p.shape)
             for p in net.parameters()]
    before = [p.copy() for p in net.parameters()]
    # Exercise
    dcc.nn_core.adam_step(net, grads, state)
    # Verify
    for p, b, g in zip(net.parameters(), before, grads):
        delta = p - b
        assert (np.abs(delta) >= 0.99e-3).all()
        assert (np.abs(delta) <= 1e-3 * (1.0 + 1e-12)).all()
        assert (np.sign(delta) == -np.sign(g)).all()
    # Cleanup -- not needed
# end test_adam_first_step


def test_adam_zero_gradient_and_shapes():
    """
    Test a zero gradient leaves the parameters unchanged and mismatched
    gradients are rejected
    """
    # Setup
    net = dcc.nn_core.build_net(2, 16, 2.0, seed=0)
    state = AdamState(net)
    before = [p.copy() for p in net.parameters()]
    # Exercise
    dcc.nn_core.adam_step(net, [np.zeros_like(p) for p in before], state)
    # Verify
    for p, b in zip(net.parameters(), before):
        assert np.array_equal(p, b)
    with pytest.raises(dcc.ShapeError):
        dcc.nn_core.adam_step(net, [np.zeros(3)], state)
    # Cleanup -- not needed
# end test_adam_zero_gradient_and_shapes


def test_build_is_deterministic_and_dict_parity():
    """
    Test networks only depend on their seed and survive a dict round trip
    """
    # Setup
    x = np.random.default_rng(0).random((50, 2))
    # Exercise
    first = dcc.nn_core.build_net(2, 100, 2.0, seed=9)
    second = dcc.nn_core.build_net(2, 100, 2.0, seed=9)
    other = dcc.nn_core.build_net(2, 100, 2.0, seed=10)
    rebuilt = DenseNet.from_dict(first.to_dict())
    # Verify
    assert first.to_dict() == second.to_dict()
    assert first.to_dict() != other.to_dict()
    assert np.array_equal(dcc.nn_core.forward(first, x),
                          dcc.nn_core.forward(rebuilt, x))
    assert rebuilt.version == first.version
    # Cleanup -- not needed
# end test_build_is_deterministic_and_dict_parity
