""" Platt calibration of the dcc package: deep copula classifier toolkit

This submodule fits the sigmoid sigma(a * s + b) mapping binary classifier
scores to probabilities on the calibration split, and applies it to test
scores. The same calibrator is used by the copula classifier and by the
baselines.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from typing import List, Tuple

from dcc.core import CalibrationError

import logging
import numpy as np
import scipy.special


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Maximum number of Newton iterations
PLATT_MAX_ITERS = 100

#: Convergence tolerance on the gradient norm of the mean loss
PLATT_TOL = 1e-10

#: Largest gradient norm accepted when the line search stalls
PLATT_STALL_TOL = 1e-6

#: Maximum number of step halvings per Newton iteration
MAX_HALVINGS = 60


class PlattModel:
    """
    Fitted sigmoid calibrator.

    Attributes:
        a (float): slope.
        b (float): intercept.
        n_iter (int): Newton iterations used.
        trace (List[Tuple[int, float, float]]): (iteration, loss, gradient
            norm) of every iteration.
    """

    def __init__(self, a: float, b: float, n_iter: int = 0,
                 trace: List[Tuple[int, float, float]] = None):
        self.a = float(a)
        self.b = float(b)
        self.n_iter = n_iter
        self.trace = trace if trace is not None else []

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b}


def platt_targets(labels) -> np.ndarray:
    """Smoothed targets (N+ + 1) / (N+ + 2) and 1 / (N- + 2)"""
    labels = np.asarray(labels)
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    return np.where(labels == 1, (n_pos + 1.0) / (n_pos + 2.0),
                    1.0 / (n_neg + 2.0))


def _loss(a, b, s, t):
    z = a * s + b
    # -[t log p + (1 - t) log(1 - p)] with p = sigmoid(z)
    return float(np.mean(t * np.logaddexp(0.0, -z) +
                         (1.0 - t) * np.logaddexp(0.0, z)))


def fit_platt(scores, labels, max_iters: int = PLATT_MAX_ITERS,
              tol: float = PLATT_TOL) -> PlattModel:
    """Fits a Platt sigmoid by Newton iterations with step halving

    Args:
        scores: Calibration scores
        labels: Calibration labels in {0, 1}
        max_iters (int, optional): Maximum iterations. Defaults to 100.
        tol (float, optional): Gradient norm tolerance. Defaults to 1e-10.

    Raises:
        CalibrationError: If only one class is present, a score is not
            finite or the iterations do not converge

    Returns:
        PlattModel: Fitted calibrator
    """
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    if s.shape != y.shape or s.size == 0:
        raise CalibrationError(
            f"{s.size} scores for {y.size} labels")
    if not np.isfinite(s).all():
        raise CalibrationError("calibration scores must be finite")
    if not np.isin(y, [0, 1]).all():
        raise CalibrationError("calibration labels must be 0 or 1")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise CalibrationError(
            f"both classes are needed, got {n_pos} positives and {n_neg} "
            f"negatives")

    t = platt_targets(y)
    a, b = 0.0, float(np.log((n_pos + 1.0) / (n_neg + 1.0)))
    loss = _loss(a, b, s, t)
    trace = []
    for it in range(1, max_iters + 1):
        p = scipy.special.expit(a * s + b)
        r = p - t
        grad = np.array([np.mean(r * s), np.mean(r)])
        gnorm = float(np.linalg.norm(grad))
        trace.append((it, loss, gnorm))
        if gnorm < tol:
            break
        w = p * (1.0 - p)
        hess = np.array([[np.mean(w * s * s), np.mean(w * s)],
                         [np.mean(w * s), np.mean(w)]])
        hess += 1e-12 * np.eye(2)
        direction = np.linalg.solve(hess, grad)
        step = 1.0
        for _ in range(MAX_HALVINGS):
            new_a, new_b = a - step * direction[0], b - step * direction[1]
            new_loss = _loss(new_a, new_b, s, t)
            if new_loss <= loss:
                break
            step *= 0.5
        else:
            new_loss = None
        if new_loss is None or (new_a == a and new_b == b):
            # no further progress possible in floating point
            if gnorm < PLATT_STALL_TOL:
                logger.warning(
                    f"calibration,,Newton stalled at gradient norm "
                    f"{gnorm:.3g} after {it} iterations")
                break
            raise CalibrationError(
                f"line search failed at iteration {it} with gradient norm "
                f"{gnorm:.3g}", trace)
        a, b, loss = new_a, new_b, new_loss
    else:
        gnorm = trace[-1][2]
        if gnorm >= PLATT_STALL_TOL:
            raise CalibrationError(
                f"no convergence in {max_iters} iterations, gradient norm "
                f"{gnorm:.3g}", trace)
        logger.warning(
            f"calibration,,Stopped after {max_iters} iterations at gradient "
            f"norm {gnorm:.3g}")

    if not (np.isfinite(a) and np.isfinite(b)):
        raise CalibrationError("fitted parameters are not finite", trace)
    if a < 0.0:
        logger.warning(
            f"calibration,,Negative slope a={a:.6g}: calibration reverses "
            f"the score ranking")
    logger.debug(f"calibration,,Fitted a={a:.6g} b={b:.6g} in {len(trace)} "
                 f"iterations")
    return PlattModel(a, b, len(trace), trace)


def apply_platt(model: PlattModel, scores):
    """Calibrated probabilities sigma(a * s + b)"""
    p = scipy.special.expit(model.a * np.asarray(scores, dtype=float)
                            + model.b)
    if np.ndim(scores) == 0:
        return float(p)
    return p


def ranking_scores(model: PlattModel, scores):
    """Scores ordered like the calibrated probabilities, without their
    saturation at 0 and 1

    The raw scores for a positive slope and their negation for a negative
    one. A zero slope ranks every row equal, as the probabilities do.
    """
    s = np.asarray(scores, dtype=float)
    if model.a > 0.0:
        return s
    if model.a < 0.0:
        return -s
    return apply_platt(model, s)
