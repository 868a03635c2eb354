""" Dense network core of the dcc package: deep copula classifier toolkit

This submodule implements the small positive feed-forward network used as an
unnormalized copula density: ReLU hidden layers, a softplus output, exact
reverse-mode gradients, spectral normalization by power iteration and the
Adam optimizer.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from typing import List, Tuple

from dcc.core import ShapeError, make_rng, round_half_up

import logging
import math
import numpy as np
import scipy.special


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Power iterations applied when a network is built
BUILD_SPECTRAL_ITERS = 30

#: Power iterations applied after every optimizer step
STEP_SPECTRAL_ITERS = 1

#: Smallest hidden width
MIN_WIDTH = 8

#: Default width constant
WIDTH_CONST = 4.0


class Layer:
    """
    Affine layer with the persistent power iteration vectors of its weights.

    Attributes:
        weights (np.ndarray): (n_out, n_in) weight matrix.
        biases (np.ndarray): n_out biases.
        u (np.ndarray): left singular vector estimate (n_out).
        v (np.ndarray): right singular vector estimate (n_in).
    """

    def __init__(self, weights, biases, u=None, v=None):
        self.weights = np.array(weights, dtype=float)
        self.biases = np.array(biases, dtype=float)
        n_out, n_in = self.weights.shape
        self.u = np.ones(n_out) / math.sqrt(n_out) if u is None \
            else np.array(u, dtype=float)
        self.v = np.ones(n_in) / math.sqrt(n_in) if v is None \
            else np.array(v, dtype=float)


class DenseNet:
    """
    ReLU network with a single softplus output.

    Every change of the parameters must go through :meth:`touch`, which
    increments :attr:`version`. Cached quantities derived from the parameters
    (the copula normalizer) compare against it.

    Attributes:
        layers (List[Layer]): hidden layers followed by the output layer.
        version (int): parameter version counter.
    """

    def __init__(self, layers: List[Layer]):
        self.layers = layers
        self.version = 0

    @property
    def n_inputs(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def depth(self) -> int:
        """Number of hidden layers"""
        return len(self.layers) - 1

    @property
    def width(self) -> int:
        return self.layers[0].weights.shape[0]

    def parameters(self) -> List[np.ndarray]:
        """Returns weights and biases, layer by layer"""
        params = []
        for layer in self.layers:
            params.extend([layer.weights, layer.biases])
        return params

    def touch(self):
        self.version += 1

    def to_dict(self) -> dict:
        return {"version": self.version,
                "layers": [{"shape": list(ly.weights.shape),
                            "weights": ly.weights.ravel().tolist(),
                            "biases": ly.biases.tolist(),
                            "u": ly.u.tolist(),
                            "v": ly.v.tolist()} for ly in self.layers]}

    @classmethod
    def from_dict(cls, doc: dict) -> "DenseNet":
        layers = [Layer(np.array(ly["weights"]).reshape(ly["shape"]),
                        ly["biases"], ly["u"], ly["v"])
                  for ly in doc["layers"]]
        net = cls(layers)
        net.version = doc["version"]
        return net


class AdamState:
    """
    Moment accumulators of the Adam optimizer.

    Attributes:
        m (List[np.ndarray]): first moments, one per parameter.
        v (List[np.ndarray]): second moments, one per parameter.
        t (int): step count.
        lr (float): learning rate.
        beta1 (float): first moment decay.
        beta2 (float): second moment decay.
        eps (float): denominator offset.
    """

    def __init__(self, net: DenseNet, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.m = [np.zeros_like(p) for p in net.parameters()]
        self.v = [np.zeros_like(p) for p in net.parameters()]
        self.t = 0
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps


# Construction ================================================================

def net_shape(d: int, n_y: int, r: float,
              width_const: float = WIDTH_CONST) -> Tuple[int, int]:
    """Returns (depth, width) of the network for `n_y` training samples

    Depth is ceil(log2 n_y) and width max(8, round(width_const *
    n_y^(d / (2r + d)))).
    """
    if n_y < 2:
        raise ShapeError(f"at least 2 samples are needed, got n_y={n_y}")
    depth = (int(n_y) - 1).bit_length()
    width = max(MIN_WIDTH,
                round_half_up(width_const * n_y ** (d / (2.0 * r + d))))
    return depth, width


def build_net(d: int, n_y: int, r: float, width_const: float = WIDTH_CONST,
              seed: int = 0) -> DenseNet:
    """Builds a He-uniform initialized positive network

    Args:
        d (int): Input dimension
        n_y (int): Number of training samples of the class
        r (float): Smoothness used by the width exponent
        width_const (float, optional): Width constant. Defaults to 4.
        seed (int, optional): Initialization seed. Defaults to 0.

    Raises:
        ShapeError: If `n_y` < 2

    Returns:
        DenseNet: Network with zero biases, spectrally normalized with 30
        power iterations
    """
    depth, width = net_shape(d, n_y, r, width_const)
    rng = make_rng(seed)
    sizes = [d] + [width] * depth + [1]
    layers = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / n_in)
        weights = rng.uniform(-limit, limit, (n_out, n_in))
        u = rng.standard_normal(n_out)
        layers.append(Layer(weights, np.zeros(n_out), u / np.linalg.norm(u)))
    net = DenseNet(layers)
    spectral_normalize(net, BUILD_SPECTRAL_ITERS)
    logger.debug(f"nn_core,seed={seed},Built net d={d} depth={depth} "
                 f"width={width}")
    return net


# Forward and backward passes =================================================

def softplus(z):
    return np.logaddexp(0.0, z)


def forward_pass(net: DenseNet, inputs) -> Tuple[np.ndarray, list]:
    """Evaluates the network on a batch and keeps the intermediate values

    Args:
        net (DenseNet): Network
        inputs: (n, d) matrix of inputs

    Returns:
        Tuple[np.ndarray, list]: n positive outputs and the cache of
        (layer input, pre-activation) pairs used by :func:`backward`
    """
    a = np.atleast_2d(np.asarray(inputs, dtype=float))
    if a.shape[1] != net.n_inputs:
        raise ShapeError(
            f"inputs have {a.shape[1]} columns, network expects "
            f"{net.n_inputs}")
    cache = []
    for layer in net.layers[:-1]:
        z = a @ layer.weights.T + layer.biases
        cache.append((a, z))
        a = np.maximum(z, 0.0)
    out_layer = net.layers[-1]
    z = a @ out_layer.weights.T + out_layer.biases
    cache.append((a, z))
    return softplus(z[:, 0]), cache


def compact_cache(cache: list) -> List[np.ndarray]:
    """Pre-activations of a :func:`forward_pass` cache; the layer inputs
    are recovered from them by :func:`expand_cache`"""
    return [z for _, z in cache]


def expand_cache(inputs, zs: List[np.ndarray]) -> list:
    """Rebuilds the (layer input, pre-activation) cache of `inputs` from
    the pre-activations kept by :func:`compact_cache`"""
    a = np.atleast_2d(np.asarray(inputs, dtype=float))
    cache = []
    for z in zs[:-1]:
        cache.append((a, z))
        a = np.maximum(z, 0.0)
    cache.append((a, zs[-1]))
    return cache


def forward(net: DenseNet, u):
    """Positive network output for a d-vector or an (n, d) batch"""
    out, _ = forward_pass(net, u)
    if np.ndim(u) == 1:
        return float(out[0])
    return out


def backward(net: DenseNet, inputs, upstream, cache: list = None) \
        -> List[np.ndarray]:
    """Reverse-mode gradient of sum_i upstream_i * forward(inputs_i)

    Args:
        net (DenseNet): Network
        inputs: (n, d) matrix of inputs
        upstream: n upstream gradients, one per output
        cache (list, optional): Cache returned by :func:`forward_pass` for
            the same inputs. Recomputed when not given.

    Raises:
        ShapeError: If inputs and upstream gradients disagree

    Returns:
        List[np.ndarray]: Gradients in the order of
        :meth:`DenseNet.parameters`
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    upstream = np.asarray(upstream, dtype=float).reshape(-1)
    if upstream.shape[0] != inputs.shape[0]:
        raise ShapeError(
            f"{upstream.shape[0]} upstream gradients for {inputs.shape[0]} "
            f"inputs")
    if cache is None:
        _, cache = forward_pass(net, inputs)
    elif cache[0][0].shape[0] != inputs.shape[0]:
        raise ShapeError("cache does not match the inputs")

    grads = []
    a, z = cache[-1]
    dz = (upstream * scipy.special.expit(z[:, 0]))[:, None]
    for k in range(len(net.layers) - 1, -1, -1):
        a, z = cache[k]
        if k < len(net.layers) - 1:
            dz = da * (z > 0.0)
        grads.append(dz.sum(axis=0))
        grads.append(dz.T @ a)
        da = dz @ net.layers[k].weights
    grads.reverse()
    return grads


# Spectral normalization ======================================================

def spectral_normalize(net: DenseNet, n_iters: int) -> DenseNet:
    """Projects every weight matrix to an operator norm of at most 1

    The top singular value is estimated by `n_iters` power iterations,
    warm-started from the vectors kept by each layer. Weights are divided by
    the estimate when it exceeds 1.

    Args:
        net (DenseNet): Network, modified in place
        n_iters (int): Power iterations per layer, at least 1

    Returns:
        DenseNet: The same network
    """
    if n_iters < 1:
        raise ValueError(f"n_iters must be at least 1, got {n_iters}")
    for layer in net.layers:
        w = layer.weights
        u, v = layer.u, layer.v
        for _ in range(n_iters):
            wv = w.T @ u
            norm = np.linalg.norm(wv)
            if norm == 0.0:
                break
            v = wv / norm
            wu = w @ v
            norm = np.linalg.norm(wu)
            if norm == 0.0:
                break
            u = wu / norm
        layer.u, layer.v = u, v
        sigma = float(u @ w @ v)
        if sigma > 1.0:
            layer.weights = w / sigma
    net.touch()
    return net


# Optimizer ===================================================================

def adam_step(net: DenseNet, grads: List[np.ndarray], state: AdamState,
              lr: float = None) -> Tuple[DenseNet, AdamState]:
    """Applies one bias-corrected Adam update (descent on `grads`)

    Args:
        net (DenseNet): Network, modified in place
        grads (List[np.ndarray]): Gradients of the loss to minimize
        state (AdamState): Moments, modified in place
        lr (float, optional): Learning rate. Defaults to `state.lr`.

    Raises:
        ShapeError: If gradients and moments have different shapes

    Returns:
        Tuple[DenseNet, AdamState]: The updated network and state
    """
    if lr is None:
        lr = state.lr
    if len(grads) != len(state.m) or any(
            g.shape != m.shape for g, m in zip(grads, state.m)):
        raise ShapeError("gradients do not match the optimizer state")
    state.t += 1
    c1 = 1.0 - state.beta1 ** state.t
    c2 = 1.0 - state.beta2 ** state.t
    for k, g in enumerate(grads):
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g
        step = lr * (state.m[k] / c1) / (np.sqrt(state.v[k] / c2) + state.eps)
        layer = net.layers[k // 2]
        if k % 2 == 0:
            layer.weights = layer.weights - step
        else:
            layer.biases = layer.biases - step
    net.touch()
    return net, state
