""" Baseline classifiers of the dcc package: deep copula classifier toolkit

This submodule provides the reference classifiers compared with the copula
classifier: L2-regularized logistic regression on standardized features and
Gaussian naive Bayes. Both return log-odds scores for the shared calibration
step.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from dcc.core import DatasetError, TrainingError
from dcc.datasets import Dataset, SplitPlan

import logging
import numpy as np
import scipy.special
import scipy.stats


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Gradient norm at which logistic regression stops
LOGREG_TOL = 1e-8

#: Maximum number of logistic regression iterations
LOGREG_MAX_ITERS = 20000

#: Default variance floor of Gaussian naive Bayes, relative to the largest
#: feature variance
GNB_VAR_FLOOR = 1e-9


class StandardScaler:
    """
    Per-feature standardization learned on the fit rows.

    Attributes:
        mean (np.ndarray): feature means.
        std (np.ndarray): feature standard deviations (ddof=0).
    """

    def __init__(self, x, feature_names=None):
        x = np.asarray(x, dtype=float)
        self.mean = x.mean(axis=0)
        self.std = x.std(axis=0)
        if (self.std <= 0.0).any():
            j = int(np.flatnonzero(self.std <= 0.0)[0])
            name = feature_names[j] if feature_names is not None else j
            raise DatasetError(f"feature {name} has zero variance on the fit "
                               f"rows")

    def transform(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.std


class LogisticModel:
    """
    Logistic regression on standardized features.

    Attributes:
        scaler (StandardScaler): feature standardization.
        weights (np.ndarray): weights of the standardized features.
        bias (float): intercept.
        l2 (float): L2 penalty of the mean loss.
        loss_trace (List[float]): loss after every iteration.
    """

    def __init__(self, scaler: StandardScaler, weights, bias: float,
                 l2: float, loss_trace=None):
        self.scaler = scaler
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)
        self.l2 = l2
        self.loss_trace = loss_trace if loss_trace is not None else []

    def score(self, x) -> np.ndarray:
        return self.scaler.transform(np.atleast_2d(x)) @ self.weights \
            + self.bias


class GnbModel:
    """
    Gaussian naive Bayes.

    Attributes:
        means (np.ndarray): (K, d) class means.
        variances (np.ndarray): (K, d) floored class variances.
        priors (np.ndarray): K class priors.
    """

    def __init__(self, means, variances, priors):
        self.means = np.asarray(means, dtype=float)
        self.variances = np.asarray(variances, dtype=float)
        self.priors = np.asarray(priors, dtype=float)

    def log_joints(self, x) -> np.ndarray:
        """(n, K) log prior plus log likelihood of every class"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        sd = np.sqrt(self.variances)
        return np.column_stack([
            np.log(self.priors[y]) + scipy.stats.norm.logpdf(
                x, self.means[y], sd[y]).sum(axis=1)
            for y in range(self.priors.size)])

    def posterior(self, x) -> np.ndarray:
        lj = self.log_joints(x)
        return np.exp(lj - scipy.special.logsumexp(lj, axis=1,
                                                   keepdims=True))

    def score(self, x) -> np.ndarray:
        """Log posterior odds of class 1 against class 0"""
        lj = self.log_joints(x)
        return lj[:, 1] - lj[:, 0]


def _fit_rows(ds: Dataset, plan: SplitPlan):
    x = ds.features[plan.fit_idx]
    labels = ds.labels[plan.fit_idx]
    if ds.missing is not None and ds.missing[plan.fit_idx].any():
        raise DatasetError("fit rows still hold missing cells")
    return x, labels


def fit_logreg(ds: Dataset, plan: SplitPlan, l2: float = None,
               epochs: int = LOGREG_MAX_ITERS,
               lr: float = 1.0) -> LogisticModel:
    """Fits L2-regularized logistic regression by full-batch descent

    The loss is the mean log-loss plus (l2 / 2) * |w|^2 on standardized
    features. Every iteration backtracks from a growing step until the
    Armijo condition holds, so the loss never increases.

    Args:
        ds (Dataset): Complete binary dataset
        plan (SplitPlan): Split of `ds`; only fit rows are read
        l2 (float, optional): Penalty. Defaults to 1 / n_fit.
        epochs (int, optional): Maximum number of iterations.
        lr (float, optional): Initial step. Defaults to 1.

    Raises:
        TrainingError: If the loss becomes non-finite

    Returns:
        LogisticModel: Fitted model with its loss trace
    """
    x, labels = _fit_rows(ds, plan)
    if not np.isin(labels, [0, 1]).all():
        raise DatasetError("logistic regression needs binary labels")
    scaler = StandardScaler(x, ds.feature_names)
    xs = scaler.transform(x)
    n, d = xs.shape
    y = labels.astype(float)
    if l2 is None:
        l2 = 1.0 / n

    def loss_and_grad(w, b):
        z = xs @ w + b
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z) +
                     0.5 * l2 * w @ w)
        r = scipy.special.expit(z) - y
        return loss, xs.T @ r / n + l2 * w, float(np.mean(r))

    w, b = np.zeros(d), 0.0
    loss, gw, gb = loss_and_grad(w, b)
    trace = [loss]
    step = lr
    for it in range(epochs):
        gnorm2 = float(gw @ gw + gb * gb)
        if gnorm2 < LOGREG_TOL ** 2:
            break
        for _ in range(60):
            new_w, new_b = w - step * gw, b - step * gb
            new_loss, new_gw, new_gb = loss_and_grad(new_w, new_b)
            if not np.isfinite(new_loss):
                raise TrainingError(
                    f"logistic loss is not finite at iteration {it}",
                    {"iteration": it, "step": step})
            if new_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
        else:
            logger.warning(f"logreg,,Line search stalled at iteration {it}, "
                           f"gradient norm {np.sqrt(gnorm2):.3g}")
            break
        w, b, loss, gw, gb = new_w, new_b, new_loss, new_gw, new_gb
        trace.append(loss)
        step *= 2.0
    else:
        logger.warning(f"logreg,,No convergence in {epochs} iterations, "
                       f"gradient norm {np.sqrt(gw @ gw + gb * gb):.3g}")
    logger.debug(f"logreg,,Fitted in {len(trace) - 1} iterations, "
                 f"loss={loss:.6g}")
    return LogisticModel(scaler, w, b, l2, trace)


def fit_gnb(ds: Dataset, plan: SplitPlan,
            var_floor: float = GNB_VAR_FLOOR) -> GnbModel:
    """Fits Gaussian naive Bayes on the fit rows

    Args:
        ds (Dataset): Complete dataset
        plan (SplitPlan): Split of `ds`; only fit rows are read
        var_floor (float, optional): Variance floor relative to the largest
            feature variance of the fit rows. Defaults to 1e-9.

    Raises:
        DatasetError: If a class has fewer than 2 fit rows

    Returns:
        GnbModel: Fitted model
    """
    x, labels = _fit_rows(ds, plan)
    k = ds.n_classes
    counts = np.bincount(labels, minlength=k)
    if (counts < 2).any():
        y = int(np.flatnonzero(counts < 2)[0])
        raise DatasetError(f"class {y} has {counts[y]} fit rows; at least 2 "
                           f"are needed")
    floor = var_floor * float(np.max(x.var(axis=0)))
    means = np.stack([x[labels == y].mean(axis=0) for y in range(k)])
    variances = np.stack([x[labels == y].var(axis=0) for y in range(k)])
    variances = np.maximum(variances, floor)
    logger.debug(f"gnb,,Fitted on {x.shape[0]} rows, variance floor "
                 f"{floor:.3g}")
    return GnbModel(means, variances, counts / counts.sum())


def score(model, x) -> np.ndarray:
    """Log-odds score of a fitted baseline"""
    return model.score(x)
