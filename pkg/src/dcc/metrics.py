""" Evaluation metrics of the dcc package: deep copula classifier toolkit

This submodule computes accuracy, ROC-AUC, PR-AUC (average precision), the
ROC and precision-recall curves, reliability bins and the Expected
Calibration Error of binary probabilistic predictions.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from typing import Tuple

from dcc.core import MetricError

import logging
import numpy as np
import pandas as pd
import sklearn.metrics


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Number of uniform reliability bins
N_BINS = 10


def _binary(scores, labels) -> Tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=float).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if scores.shape != labels.shape:
        raise MetricError(f"{scores.size} scores for {labels.size} labels")
    if not np.isin(labels, [0, 1]).all():
        raise MetricError("labels must be 0 or 1")
    return scores, labels.astype(int)


def accuracy(preds, labels) -> float:
    """Fraction of predictions equal to the labels

    Raises:
        MetricError: If the inputs are empty or have different lengths
    """
    preds = np.asarray(preds).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if preds.size == 0:
        raise MetricError("accuracy of an empty set")
    if preds.shape != labels.shape:
        raise MetricError(f"{preds.size} predictions for {labels.size} "
                          f"labels")
    return float(np.mean(preds == labels))


def _both_classes(labels, what: str):
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise MetricError(f"{what} needs both classes")


def roc_auc(scores, labels) -> float:
    """Probability that a positive outranks a negative, ties counting 1/2

    Raises:
        MetricError: If one of the classes is absent
    """
    scores, labels = _binary(scores, labels)
    _both_classes(labels, "ROC-AUC")
    return float(sklearn.metrics.roc_auc_score(labels, scores))


def pr_auc(scores, labels) -> float:
    """Average precision: sum over thresholds of (R_k - R_k-1) * P_k

    Raises:
        MetricError: If there is no positive label
    """
    scores, labels = _binary(scores, labels)
    if labels.sum() == 0:
        raise MetricError("PR-AUC needs at least one positive")
    return float(sklearn.metrics.average_precision_score(labels, scores))


def roc_curve(scores, labels) -> pd.DataFrame:
    """ROC curve points (fpr, tpr, threshold), starting at (0, 0, inf)"""
    scores, labels = _binary(scores, labels)
    _both_classes(labels, "ROC curve")
    fpr, tpr, thresholds = sklearn.metrics.roc_curve(
        labels, scores, drop_intermediate=False)
    return pd.DataFrame({"fpr": fpr, "tpr": tpr, "threshold": thresholds})


def pr_curve(scores, labels) -> pd.DataFrame:
    """Precision-recall curve points (recall, precision, threshold), from
    the highest threshold down"""
    scores, labels = _binary(scores, labels)
    if labels.sum() == 0:
        raise MetricError("PR curve needs at least one positive")
    precision, recall, thresholds = sklearn.metrics.precision_recall_curve(
        labels, scores)
    # the last point (recall 0, precision 1) has no threshold
    return pd.DataFrame({"recall": recall[-2::-1],
                         "precision": precision[-2::-1],
                         "threshold": thresholds[::-1]})


def reliability_and_ece(probs, labels,
                        n_bins: int = N_BINS) -> Tuple[pd.DataFrame, float]:
    """Reliability bins and Expected Calibration Error

    Bins are [k/B, (k+1)/B) with the last one closed. The confidence of a
    bin is its mean probability and its accuracy the fraction of positive
    labels. Empty bins report NaN and do not contribute to the ECE.

    Args:
        probs: Probabilities of the positive class, in [0, 1]
        labels: Labels in {0, 1}
        n_bins (int, optional): Number of bins. Defaults to 10.

    Raises:
        MetricError: If a probability lies outside [0, 1]

    Returns:
        Tuple[pd.DataFrame, float]: Bins (bin_lo, bin_hi, conf, acc, count)
        and the ECE
    """
    probs, labels = _binary(probs, labels)
    if probs.size == 0:
        raise MetricError("reliability of an empty set")
    if ((probs < 0.0) | (probs > 1.0)).any():
        raise MetricError("probabilities must lie in [0, 1]")
    idx = np.minimum(np.floor(probs * n_bins), n_bins - 1).astype(int)
    count = np.bincount(idx, minlength=n_bins)
    conf_sum = np.bincount(idx, weights=probs, minlength=n_bins)
    acc_sum = np.bincount(idx, weights=labels, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        conf = np.where(count > 0, conf_sum / count, np.nan)
        acc = np.where(count > 0, acc_sum / count, np.nan)
    gaps = np.where(count > 0, np.abs(conf - acc), 0.0)
    ece = float(np.sum(count / probs.size * gaps))
    bins = pd.DataFrame({"bin_lo": np.arange(n_bins) / n_bins,
                         "bin_hi": np.arange(1, n_bins + 1) / n_bins,
                         "conf": conf, "acc": acc, "count": count})
    return bins, ece


class EvalReport:
    """
    Test metrics of one model.

    Attributes:
        accuracy (float): accuracy of the calibrated 0.5 decisions.
        roc_auc (float): ROC-AUC of the ranking scores.
        pr_auc (float): average precision of the ranking scores.
        ece (float): Expected Calibration Error.
        roc (pd.DataFrame): ROC curve.
        pr (pd.DataFrame): precision-recall curve.
        reliability (pd.DataFrame): reliability bins.
    """

    def __init__(self, accuracy: float, roc_auc: float, pr_auc: float,
                 ece: float, roc: pd.DataFrame, pr: pd.DataFrame,
                 reliability: pd.DataFrame):
        self.accuracy = accuracy
        self.roc_auc = roc_auc
        self.pr_auc = pr_auc
        self.ece = ece
        self.roc = roc
        self.pr = pr
        self.reliability = reliability

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "roc_auc": self.roc_auc,
                "pr_auc": self.pr_auc, "ece": self.ece}


def evaluate(probs, labels, threshold: float = 0.5, n_bins: int = N_BINS,
             scores=None) -> EvalReport:
    """Computes every test metric of calibrated probabilities

    Labels are predicted positive when the probability exceeds `threshold`.
    The probabilities give the accuracy, the reliability bins and the ECE.
    ROC-AUC, PR-AUC and both curves are computed on `scores` when given,
    so that probabilities saturated to 0 or 1 do not tie rows the scores
    still order.

    Args:
        probs: Probabilities of the positive class, in [0, 1]
        labels: Labels in {0, 1}
        threshold (float, optional): Decision threshold. Defaults to 0.5.
        n_bins (int, optional): Reliability bins. Defaults to 10.
        scores (optional): Scores ordered like `probs`, for the ranking
            metrics. Defaults to the probabilities.

    Returns:
        EvalReport: Metrics and curves
    """
    probs, labels = _binary(probs, labels)
    ranking = probs if scores is None else _binary(scores, labels)[0]
    bins, ece = reliability_and_ece(probs, labels, n_bins)
    return EvalReport(accuracy((probs > threshold).astype(int), labels),
                      roc_auc(ranking, labels), pr_auc(ranking, labels), ece,
                      roc_curve(ranking, labels), pr_curve(ranking, labels),
                      bins)
