""" Deep copula classifier of the dcc package: deep copula classifier toolkit

This submodule assembles the generative classifier: class priors, marginal
estimators and one copula network per class. It fits the model, evaluates
the per-class log joint densities, predicts labels and binary scores, and
provides the closed-form Bayes rule of the synthetic study.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Tuple

from dcc.core import EPS, Error
from dcc.datasets import Dataset, SplitPlan
from dcc.marginals import MarginalMode, MarginalModel, fit_marginals, \
    pit_transform, log_marginal_density
from dcc.nn_core import build_net
from dcc.copula import CopulaNet, Normalizer, NormalizerKind, density, \
    estimate_normalizer, train_copula

import json
import logging
import math
import numpy as np
import pandas as pd


# Python logging ==============================================================
logger = logging.getLogger(__name__)


class DccModel:
    """
    Fitted deep copula classifier.

    Attributes:
        priors (np.ndarray): K class priors n_y / n of the fit split.
        marginals (MarginalModel): marginal estimators.
        copulas (List[CopulaNet]): one frozen copula per class.
        tau (float): temperature of the copula term.
        eps (float): floor of every density before its logarithm.
        traces (Dict[int, pd.DataFrame]): loss trace of every class. Not
            serialized.
    """

    def __init__(self, priors, marginals: MarginalModel,
                 copulas: List[CopulaNet], tau: float = 1.0,
                 eps: float = EPS, traces: Dict[int, pd.DataFrame] = None):
        priors = np.asarray(priors, dtype=float)
        if (priors <= 0.0).any() or abs(priors.sum() - 1.0) > 1e-12:
            raise Error(f"priors must be positive and sum to 1, got {priors}")
        if len(copulas) != priors.size:
            raise Error(f"{len(copulas)} copulas for {priors.size} classes")
        self.priors = priors
        self.marginals = marginals
        self.copulas = copulas
        self.tau = float(tau)
        self.eps = eps
        self.traces = traces if traces is not None else {}

    @property
    def n_classes(self) -> int:
        return self.priors.size

    def to_dict(self) -> dict:
        return {"priors": self.priors.tolist(),
                "tau": self.tau,
                "eps": self.eps,
                "marginals": self.marginals.to_dict(),
                "copulas": [c.to_dict() for c in self.copulas]}

    @classmethod
    def from_dict(cls, doc: dict) -> "DccModel":
        return cls(doc["priors"], MarginalModel.from_dict(doc["marginals"]),
                   [CopulaNet.from_dict(c) for c in doc["copulas"]],
                   doc["tau"], doc["eps"])


def save_model(model: DccModel, path: str):
    """Writes `model` as a JSON document"""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model.to_dict(), f, sort_keys=True)


def load_model(path: str) -> DccModel:
    """Reads a model written by :func:`save_model`"""
    with open(path, "r", encoding="utf-8") as f:
        return DccModel.from_dict(json.load(f))


# Fitting =====================================================================

def class_seeds(seed: int, y: int) -> Tuple[int, int]:
    """Initialization and shuffling seeds of the copula of class `y`"""
    init, shuffle = np.random.SeedSequence([int(seed), int(y)]) \
        .generate_state(2, dtype=np.uint64)
    return int(init), int(shuffle)


def fit_class_copula(y: int, pseudo_obs: np.ndarray, config,
                     progress_callback=None) \
        -> Tuple[int, CopulaNet, pd.DataFrame]:
    """Builds and trains the copula of class `y`

    Args:
        y (int): Class index
        pseudo_obs (np.ndarray): (n_y, d) pseudo-observations of the class
        config (ExperimentConfig): Network, normalizer and optimizer settings
        progress_callback (optional): Forwarded to the training loop

    Returns:
        Tuple[int, CopulaNet, pd.DataFrame]: Class index, trained copula and
        loss trace
    """
    n_y, d = pseudo_obs.shape
    init_seed, shuffle_seed = class_seeds(config.seed, y)
    net = build_net(d, n_y, config.smoothness_r, config.width_const,
                    init_seed)
    kind = NormalizerKind(config.normalizer)
    size = config.grid_resolution if kind == NormalizerKind.GRID \
        else config.sobol_points
    c = CopulaNet(net, Normalizer(kind, size, d), config.penalty_weight,
                  config.penalty_bins)
    c, trace = train_copula(c, pseudo_obs, config.epochs, config.batch_size,
                            config.lr, shuffle_seed, progress_callback,
                            name=f"class {y}")
    return y, c, trace


def fit_dcc(ds: Dataset, plan: SplitPlan, config, mode=None,
            progress_callback=None) -> DccModel:
    """Fits marginals, copulas and priors on the fit rows

    Args:
        ds (Dataset): Complete dataset (no missing cells)
        plan (SplitPlan): Split of `ds`; only fit rows are read
        config (ExperimentConfig): Experiment settings
        mode (MarginalMode or str, optional): Marginal mode. Defaults to the
            first mode of `config.modes`.
        progress_callback (optional): Object with an `emit(i, total)` method,
            used when the copulas are trained sequentially

    Returns:
        DccModel: Fitted model
    """
    mode = MarginalMode(config.modes[0] if mode is None else mode)
    marginals = fit_marginals(ds, plan, mode, config.bandwidth_scale,
                              config.bandwidth_exponent,
                              config.bandwidth_rule)
    x = ds.features[plan.fit_idx]
    labels = ds.labels[plan.fit_idx]
    counts = np.bincount(labels, minlength=ds.n_classes)
    priors = counts / counts.sum()
    pseudo = [pit_transform(marginals, x[labels == y], y)
              for y in range(ds.n_classes)]

    results = {}
    n_jobs = min(getattr(config, "n_jobs", 1), ds.n_classes)
    if n_jobs > 1:
        logger.debug(f"classifier,{mode.value},Training {ds.n_classes} "
                     f"copulas with {n_jobs} parallel processes")
        train_func = partial(_fit_class_copula_star, config=config)
        with Pool(n_jobs) as pool:
            for y, c, trace in pool.imap_unordered(
                    train_func, list(enumerate(pseudo))):
                results[y] = (c, trace)
    else:
        for y, u in enumerate(pseudo):
            _, c, trace = fit_class_copula(y, u, config, progress_callback)
            results[y] = (c, trace)

    copulas = [results[y][0] for y in range(ds.n_classes)]
    traces = {y: results[y][1] for y in range(ds.n_classes)}
    logger.info(f"classifier,{mode.value},Fitted model with priors "
                f"{np.round(priors, 4).tolist()}")
    return DccModel(priors, marginals, copulas, config.tau, traces=traces)


def _fit_class_copula_star(args, config):
    y, u = args
    return fit_class_copula(y, u, config)


# Evaluation ==================================================================

def marginal_log_joint(model: DccModel, x, y: int) -> np.ndarray:
    """log pi_y + sum_j log max(f_j|y(x_j), eps), without the copula term"""
    x = np.asarray(x, dtype=float)
    return math.log(model.priors[y]) + \
        log_marginal_density(model.marginals, x, y)


def log_joint(model: DccModel, x, y: int):
    """Log of the prior-weighted joint density of class `y`

    log pi_y + tau * log max(c_y(u), eps) + sum_j log max(f_j|y(x_j), eps)
    with u = pit_transform(x, y).

    Args:
        model (DccModel): Fitted model
        x: d-vector or (n, d) matrix of features
        y (int): Class index

    Returns:
        float or np.ndarray: Finite log joint densities
    """
    x = np.asarray(x, dtype=float)
    value = marginal_log_joint(model, x, y)
    if model.tau != 0.0:
        u = pit_transform(model.marginals, x, y)
        c = np.maximum(density(model.copulas[y], u), model.eps)
        value = value + model.tau * np.log(c)
    if x.ndim == 1:
        return float(value)
    return value


def log_joints(model: DccModel, x) -> np.ndarray:
    """(n, K) matrix of log joint densities"""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return np.column_stack([log_joint(model, x, y)
                            for y in range(model.n_classes)])


def predict(model: DccModel, x) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Predicts labels by the largest log joint, ties to the smallest index

    Args:
        model (DccModel): Fitted model
        x: d-vector or (n, d) matrix of features

    Returns:
        Tuple[np.ndarray, np.ndarray, np.ndarray]: labels (n), log joints
        (n, K) and binary scores log_joint(1) - log_joint(0) (n, NaN when
        K > 2)
    """
    lj = log_joints(model, x)
    # argmax returns the first maximum
    labels = np.argmax(lj, axis=1)
    if model.n_classes == 2:
        scores = lj[:, 1] - lj[:, 0]
    else:
        scores = np.full(lj.shape[0], np.nan)
    return labels, lj, scores


# Synthetic Bayes rule ========================================================

def bayes_score_synthetic(rho: float, x) -> np.ndarray:
    """Log likelihood ratio of class 1 (-rho) against class 0 (+rho)

    Equal to -2 rho x1 x2 / (1 - rho^2) for the two correlated Gaussian
    classes of :func:`dcc.datasets.gen_synthetic`.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return -2.0 * rho * x[:, 0] * x[:, 1] / (1.0 - rho * rho)


def bayes_rule_synthetic(rho: float, x):
    """Bayes label of the synthetic study with equal priors

    Class 0 (covariance +rho) wins when rho * x1 * x2 > 0, class 1 when it
    is negative; a zero product is a tie and returns class 0.

    Args:
        rho (float): Correlation of class 0, |rho| < 1
        x: 2-vector or (n, 2) matrix

    Returns:
        int or np.ndarray: Labels
    """
    xx = np.atleast_2d(np.asarray(x, dtype=float))
    labels = (np.sign(rho) * xx[:, 0] * xx[:, 1] < 0.0).astype(int)
    if np.ndim(x) == 1:
        return int(labels[0])
    return labels


def bayes_accuracy_synthetic(rho: float) -> float:
    """Accuracy of the synthetic Bayes rule, 1/2 + arcsin(|rho|) / pi"""
    return 0.5 + math.asin(abs(rho)) / math.pi
