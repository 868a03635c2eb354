""" Neural copula density of the dcc package: deep copula classifier toolkit

This submodule turns a positive network into a copula density on the unit
cube. It provides the deterministic integration point sets (tensor grid and
Sobol sequence), the normalizer estimate, the binned uniform-marginal penalty
and the penalized maximum likelihood training loop.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from enum import Enum
from typing import Tuple

from dcc.core import EPS, GRID_MAX_POINTS, SOBOL_MAX_DIM, NormalizerError, \
    StaleNormalizerError, PenaltyBinError, ShapeError, TrainingError, make_rng
from dcc.nn_core import DenseNet, AdamState, forward_pass, backward, \
    compact_cache, expand_cache, \
    spectral_normalize, adam_step, BUILD_SPECTRAL_ITERS, STEP_SPECTRAL_ITERS

import logging
import math
import warnings
import numpy as np
import pandas as pd
import scipy.stats.qmc


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Default number of penalty bins per axis
PENALTY_BINS = 16

#: Default penalty weight
PENALTY_WEIGHT = 0.1

#: Number of normalizer points evaluated at once
CHUNK_SIZE = 8192


class NormalizerKind(Enum):
    GRID = "grid"
    SOBOL = "sobol"


# Point sets ==================================================================

def grid_points(d: int, resolution: int) -> np.ndarray:
    """Cell centers (i + 0.5) / R of the R^d tensor grid

    Raises:
        NormalizerError: If the grid has more than 2^24 points
    """
    if resolution < 1:
        raise NormalizerError(f"grid resolution must be positive, got "
                              f"{resolution}")
    if resolution ** d > GRID_MAX_POINTS:
        raise NormalizerError(
            f"grid of {resolution}^{d} points exceeds {GRID_MAX_POINTS}")
    axis = (np.arange(resolution) + 0.5) / resolution
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def sobol_points(d: int, m: int, skip_zero: bool = True) -> np.ndarray:
    """First `m` points of the unscrambled Sobol sequence

    Direction numbers are the Joe-Kuo ones shipped with scipy.

    Args:
        d (int): Dimension
        m (int): Number of points
        skip_zero (bool, optional): Start at index 1, so that the first
            point is (0.5, ..., 0.5). Defaults to True.

    Raises:
        NormalizerError: If `d` is not supported by the direction numbers

    Returns:
        np.ndarray: (m, d) points in [0, 1)^d
    """
    if d < 1 or d > SOBOL_MAX_DIM:
        raise NormalizerError(
            f"Sobol dimension {d} outside 1..{SOBOL_MAX_DIM}")
    sampler = scipy.stats.qmc.Sobol(d, scramble=False)
    with warnings.catch_warnings():
        # Balance warning for counts that are not powers of 2
        warnings.simplefilter("ignore", UserWarning)
        if skip_zero:
            sampler.fast_forward(1)
        return sampler.random(m)


class Normalizer:
    """
    Integration point set on the unit cube and its cached estimate.

    Attributes:
        kind (NormalizerKind): grid or sobol.
        size (int): grid resolution per axis or number of Sobol points.
        d (int): dimension.
        points (np.ndarray): (M, d) point set.
        z_hat (float): cached normalizer estimate, None before the first
            refresh.
        z_version (int): network version `z_hat` corresponds to.
    """

    def __init__(self, kind, size: int, d: int):
        self.kind = NormalizerKind(kind)
        self.size = int(size)
        self.d = d
        if self.kind == NormalizerKind.GRID:
            self.points = grid_points(d, self.size)
        else:
            self.points = sobol_points(d, self.size, skip_zero=True)
        self.z_hat = None
        self.z_version = -1

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "size": self.size, "d": self.d}


def assign_bins(points: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin index of every coordinate over B equal-width bins of [0, 1]"""
    return np.minimum(np.floor(points * n_bins), n_bins - 1).astype(int)


def bin_marginals(values: np.ndarray, bins: np.ndarray,
                  n_bins: int) -> Tuple[np.ndarray, np.ndarray]:
    """Mean of `values` per (axis, bin)

    Args:
        values (np.ndarray): M density values at the points
        bins (np.ndarray): (M, d) bin indices from :func:`assign_bins`
        n_bins (int): Number of bins B

    Raises:
        PenaltyBinError: If a bin holds no point

    Returns:
        Tuple[np.ndarray, np.ndarray]: (d, B) binned marginals and (d, B)
        point counts
    """
    d = bins.shape[1]
    sums = np.zeros((d, n_bins))
    counts = np.zeros((d, n_bins))
    for i in range(d):
        sums[i] = np.bincount(bins[:, i], weights=values, minlength=n_bins)
        counts[i] = np.bincount(bins[:, i], minlength=n_bins)
    if (counts == 0).any():
        i, b = np.argwhere(counts == 0)[0]
        raise PenaltyBinError(
            f"penalty bin {b} of axis {i} holds no normalizer point; "
            f"increase the points or reduce the bins")
    return sums / counts, counts


def penalty_from_values(values, bins: np.ndarray, n_bins: int) -> float:
    """Binned uniform-marginal penalty sum_i (1/B) sum_b (G_ib - 1)^2"""
    marginals, _ = bin_marginals(np.asarray(values, dtype=float), bins,
                                 n_bins)
    return float(((marginals - 1.0) ** 2).sum() / n_bins)


# Copula network ==============================================================

class CopulaNet:
    """
    Positive network normalized into a copula density.

    Attributes:
        net (DenseNet): unnormalized density.
        normalizer (Normalizer): integration points and cached estimate.
        penalty_weight (float): lambda >= 0.
        penalty_bins (int): B > 0.
        eps (float): density floor.
        chunk_size (int): normalizer points evaluated at once.
        bins (np.ndarray): (M, d) penalty bin of every normalizer point.
        counts (np.ndarray): (d, B) points per bin.
    """

    def __init__(self, net: DenseNet, normalizer: Normalizer,
                 penalty_weight: float = PENALTY_WEIGHT,
                 penalty_bins: int = PENALTY_BINS, eps: float = EPS,
                 chunk_size: int = CHUNK_SIZE):
        if normalizer.d != net.n_inputs:
            raise ShapeError(
                f"normalizer dimension {normalizer.d} does not match "
                f"network inputs {net.n_inputs}")
        if penalty_weight < 0.0:
            raise ValueError(f"penalty weight must be nonnegative, got "
                             f"{penalty_weight}")
        self.net = net
        self.normalizer = normalizer
        self.penalty_weight = float(penalty_weight)
        self.penalty_bins = int(penalty_bins)
        self.eps = eps
        self.chunk_size = chunk_size
        self.bins = assign_bins(normalizer.points, self.penalty_bins)
        _, self.counts = bin_marginals(
            np.zeros(normalizer.points.shape[0]), self.bins,
            self.penalty_bins)
        self._values = None

    def point_values(self, keep_caches: bool = False):
        """Network outputs at the normalizer points, chunk by chunk

        Args:
            keep_caches (bool, optional): Also return the compact forward
                cache of every chunk, for a backward pass without a second
                forward pass. Defaults to False.

        Returns:
            np.ndarray or Tuple[np.ndarray, list]: M outputs, and the
            chunk caches when `keep_caches` is set
        """
        points = self.normalizer.points
        out = np.empty(points.shape[0])
        caches = []
        for start in range(0, points.shape[0], self.chunk_size):
            out[start:start + self.chunk_size], cache = forward_pass(
                self.net, points[start:start + self.chunk_size])
            if keep_caches:
                caches.append(compact_cache(cache))
        if keep_caches:
            return out, caches
        return out

    def check_fresh(self):
        if self.normalizer.z_version != self.net.version:
            raise StaleNormalizerError(
                f"normalizer computed for parameter version "
                f"{self.normalizer.z_version}, network is at version "
                f"{self.net.version}")

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict(),
                "normalizer": self.normalizer.to_dict(),
                "z_hat": self.normalizer.z_hat,
                "penalty_weight": self.penalty_weight,
                "penalty_bins": self.penalty_bins,
                "eps": self.eps}

    @classmethod
    def from_dict(cls, doc: dict) -> "CopulaNet":
        net = DenseNet.from_dict(doc["net"])
        n_doc = doc["normalizer"]
        normalizer = Normalizer(n_doc["kind"], n_doc["size"], n_doc["d"])
        c = cls(net, normalizer, doc["penalty_weight"], doc["penalty_bins"],
                doc["eps"])
        if doc["z_hat"] is not None:
            normalizer.z_hat = doc["z_hat"]
            normalizer.z_version = net.version
        return c


def estimate_normalizer(c: CopulaNet) -> float:
    """Refreshes Z = mean of the network over the normalizer points

    Returns:
        float: The new estimate, also cached with the current version
    """
    values = c.point_values()
    z_hat = float(values.mean())
    c._values = values
    c.normalizer.z_hat = z_hat
    c.normalizer.z_version = c.net.version
    return z_hat


def density(c: CopulaNet, u):
    """Normalized copula density max(NN(u) / Z, eps)

    Args:
        c (CopulaNet): Copula with a fresh normalizer
        u: d-vector or (n, d) batch in the unit cube

    Raises:
        StaleNormalizerError: If the parameters changed since the last
            normalizer refresh

    Returns:
        float or np.ndarray: Densities, at least `eps`
    """
    c.check_fresh()
    out, _ = forward_pass(c.net, u)
    dens = np.maximum(out / c.normalizer.z_hat, c.eps)
    if np.ndim(u) == 1:
        return float(dens[0])
    return dens


def marginal_uniformity_penalty(c: CopulaNet, raw: bool = False) -> float:
    """Binned penalty on the deviation of the marginals from uniformity

    Every axis of the normalizer point set is cut in B equal-width bins; the
    marginal of a bin is the mean normalized density of its points.

    Args:
        c (CopulaNet): Copula with a fresh normalizer
        raw (bool, optional): Return the value before the multiplication by
            the penalty weight. Defaults to False.

    Raises:
        StaleNormalizerError: If the normalizer is stale
        PenaltyBinError: If a bin holds no point

    Returns:
        float: Nonnegative penalty
    """
    c.check_fresh()
    values = c._values if c._values is not None else c.point_values()
    p = penalty_from_values(values / c.normalizer.z_hat, c.bins,
                            c.penalty_bins)
    return p if raw else c.penalty_weight * p


def probe_grid(c: CopulaNet, resolution: int) -> pd.DataFrame:
    """Copula density on the cell centers of a 2-d grid (u1, u2, density)"""
    if c.net.n_inputs != 2:
        raise ShapeError("the copula probe is only defined for d=2")
    points = grid_points(2, resolution)
    return pd.DataFrame({"u1": points[:, 0], "u2": points[:, 1],
                         "density": density(c, points)})


# Training ====================================================================

def _normalizer_gradient(c: CopulaNet, values: np.ndarray, z_hat: float,
                         caches: list):
    """Gradient of log Z + lambda * P with respect to the network parameters,
    backpropagated through the chunk caches of the forward pass"""
    m = values.shape[0]
    n_bins = c.penalty_bins
    marginals, _ = bin_marginals(values / z_hat, c.bins, n_bins)
    upstream = np.full(m, 1.0 / (m * z_hat))
    if c.penalty_weight > 0.0:
        excess = marginals - 1.0
        shared = (excess * marginals).sum() / (m * z_hat)
        own = np.zeros(m)
        for i in range(c.bins.shape[1]):
            own += excess[i, c.bins[:, i]] / (c.counts[i, c.bins[:, i]]
                                              * z_hat)
        upstream += c.penalty_weight * (2.0 / n_bins) * (own - shared)
    grads = None
    points = c.normalizer.points
    for k, start in enumerate(range(0, m, c.chunk_size)):
        stop = start + c.chunk_size
        chunk = points[start:stop]
        part = backward(c.net, chunk, upstream[start:stop],
                        expand_cache(chunk, caches[k]))
        grads = part if grads is None else [g + p for g, p in zip(grads, part)]
    penalty = float(((marginals - 1.0) ** 2).sum() / n_bins)
    return grads, penalty


def objective_gradient(c: CopulaNet, batch: np.ndarray):
    """Penalized negative log-likelihood of a minibatch and its gradient

    The objective is -(mean log f(batch) - log Z_hat - lambda * P) with the
    normalizer and the penalty recomputed from the current network. The
    normalizer points go through one forward pass whose chunk caches feed
    the backward pass.

    Args:
        c (CopulaNet): Copula network
        batch (np.ndarray): (b, d) pseudo-observations

    Returns:
        Tuple[float, List[np.ndarray], dict]: loss, gradients in
        DenseNet.parameters() order, and the loglik, penalty, z_hat and
        min_output of the step
    """
    values, caches = c.point_values(keep_caches=True)
    z_hat = float(values.mean())
    out, cache = forward_pass(c.net, batch)
    grads, penalty = _normalizer_gradient(c, values, z_hat, caches)
    del caches
    loglik = float(np.mean(np.log(out)) - math.log(z_hat))
    loss = -(loglik - c.penalty_weight * penalty)
    stats = {"loglik": loglik, "penalty": penalty, "z_hat": z_hat,
             "min_output": float(out.min())}
    if math.isfinite(loss):
        data_grads = backward(c.net, batch, -1.0 / (batch.shape[0] * out),
                              cache)
        grads = [g + h for g, h in zip(grads, data_grads)]
    return loss, grads, stats


def train_copula(c: CopulaNet, pseudo_obs, epochs: int, batch_size: int,
                 lr: float, seed: int, progress_callback=None,
                 name: str = "") -> Tuple[CopulaNet, pd.DataFrame]:
    """Penalized maximum likelihood training of a copula network

    Minibatches follow a seeded permutation drawn at every epoch. Every step
    refreshes the normalizer on the full point set, differentiates
    mean log NN(u) - log Z - lambda * P exactly, projects the weights by
    spectral normalization and applies Adam. A final 30-iteration projection
    and a normalizer refresh freeze the network.

    Args:
        c (CopulaNet): Copula to train, modified in place
        pseudo_obs: (n, d) pseudo-observations in (0, 1)^d
        epochs (int): Number of epochs, at least 1
        batch_size (int): Minibatch size
        lr (float): Adam learning rate
        seed (int): Seed of the minibatch permutations
        progress_callback (optional): Object with an `emit(i, total)` method
            called with (1, epochs) after every epoch
        name (str, optional): Name used in log messages

    Raises:
        TrainingError: If the loss is not finite; `diagnostic` describes the
            offending batch

    Returns:
        Tuple[CopulaNet, pd.DataFrame]: The trained copula and its loss trace
        (epoch, loglik, penalty)
    """
    u = np.asarray(pseudo_obs, dtype=float)
    if u.ndim != 2 or u.shape[1] != c.net.n_inputs:
        raise ShapeError(
            f"pseudo-observations must be an (n, {c.net.n_inputs}) matrix")
    if not ((u > 0.0) & (u < 1.0)).all():
        raise TrainingError("pseudo-observations must lie in (0, 1)")
    if epochs < 1 or batch_size < 1:
        raise TrainingError(
            f"epochs and batch_size must be positive, got {epochs} and "
            f"{batch_size}")

    rng = make_rng(seed)
    state = AdamState(c.net, lr=lr)
    n = u.shape[0]
    trace = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(n)
        logliks, penalties = [], []
        for step, start in enumerate(range(0, n, batch_size)):
            rows = order[start:start + batch_size]
            batch = u[rows]

            loss, grads, stats = objective_gradient(c, batch)
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, step {step}",
                    dict(stats, epoch=epoch, step=step, rows=rows.tolist()))

            spectral_normalize(c.net, STEP_SPECTRAL_ITERS)
            adam_step(c.net, grads, state, lr)
            logliks.append(stats["loglik"])
            penalties.append(stats["penalty"])

        trace.append((epoch, float(np.mean(logliks)),
                      float(np.mean(penalties))))
        logger.debug(
            f"copula,{name},epoch={epoch} loglik={trace[-1][1]:.6f} "
            f"penalty={trace[-1][2]:.6g}")
        if progress_callback is not None:
            progress_callback.emit(1, epochs)

    spectral_normalize(c.net, BUILD_SPECTRAL_ITERS)
    z_hat = estimate_normalizer(c)
    logger.info(
        f"copula,{name},Trained {epochs} epochs on {n} points, "
        f"final loglik={trace[-1][1]:.6f} Z={z_hat:.6g}")
    return c, pd.DataFrame(trace, columns=["epoch", "loglik", "penalty"])
