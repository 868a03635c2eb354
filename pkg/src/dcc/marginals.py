""" Marginal estimators of the dcc package: deep copula classifier toolkit

This submodule fits the univariate CDF/PDF pairs of every feature, either per
class, pooled over classes or taken from the standard normal law, and maps
feature vectors to pseudo-observations on the unit cube.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from enum import Enum
from typing import Dict, Tuple

from dcc.core import EPS, MarginalError
from dcc.datasets import Dataset, SplitPlan

import logging
import numpy as np
import scipy.stats
import sklearn.neighbors


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Default bandwidth scale
BANDWIDTH_SCALE = 10.0

#: Default bandwidth exponent of the sample count
BANDWIDTH_EXPONENT = -0.51

#: Bandwidth rules accepted by :func:`bandwidth_rule`
BANDWIDTH_RULES = ["relative", "absolute", "silverman"]


class MarginalMode(Enum):
    ORACLE_NORMAL = "oracle_normal"
    POOLED = "pooled"
    PER_CLASS = "per_class"


# Marginal cells ==============================================================

class KdeCell:
    """
    Smoothed empirical CDF and Gaussian KDE of one sample.

    Attributes:
        samples (np.ndarray): sorted sample values.
        h (float): KDE bandwidth.
        delta (float): clip of the CDF, 1 / (2 (m + 1)) by default.
    """

    def __init__(self, samples, h: float, delta: float = None):
        self.samples = np.sort(np.asarray(samples, dtype=float))
        self.h = float(h)
        m = self.samples.size
        self.delta = 1.0 / (2.0 * (m + 1)) if delta is None else float(delta)
        # Tied samples share their midrank
        ranks = scipy.stats.rankdata(self.samples, method="average")
        self._values, first = np.unique(self.samples, return_index=True)
        self._ranks = ranks[first] / (m + 1)
        self._kde = sklearn.neighbors.KernelDensity(
            bandwidth=self.h, kernel="gaussian").fit(self.samples[:, None])

    def cdf(self, x) -> np.ndarray:
        u = np.interp(x, self._values, self._ranks,
                      left=self.delta, right=1.0 - self.delta)
        return np.clip(u, self.delta, 1.0 - self.delta)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        # infinite points have zero density, NaN stays NaN
        out = np.where(np.isnan(flat), np.nan, 0.0)
        finite = np.isfinite(flat)
        if finite.any():
            out[finite] = np.exp(
                self._kde.score_samples(flat[finite][:, None]))
        return np.maximum(out, EPS).reshape(x.shape)

    def to_dict(self) -> dict:
        return {"samples": self.samples.tolist(), "h": self.h,
                "delta": self.delta}


class NormalCell:
    """Standard normal CDF and PDF, CDF clipped to [delta, 1 - delta]"""

    def __init__(self, delta: float):
        self.delta = float(delta)

    def cdf(self, x) -> np.ndarray:
        return np.clip(scipy.stats.norm.cdf(x), self.delta, 1.0 - self.delta)

    def pdf(self, x) -> np.ndarray:
        return np.maximum(scipy.stats.norm.pdf(x), EPS)

    def to_dict(self) -> dict:
        return {"delta": self.delta}


class MarginalModel:
    """
    Set of fitted marginal cells.

    Cells are keyed by (feature, class). Pooled and oracle models hold one
    shared cell per feature, keyed with class None.

    Attributes:
        mode (MarginalMode): estimation mode.
        cells (Dict[Tuple[int, int], object]): fitted cells.
        n_features (int): number of features d.
        n_classes (int): number of classes K.
        feature_names (List[str]): feature names.
    """

    def __init__(self, mode: MarginalMode,
                 cells: Dict[Tuple[int, int], object],
                 n_features: int, n_classes: int, feature_names=None):
        self.mode = MarginalMode(mode)
        self.cells = cells
        self.n_features = n_features
        self.n_classes = n_classes
        if feature_names is None:
            feature_names = [f"x{j + 1}" for j in range(n_features)]
        self.feature_names = list(feature_names)

    def cell(self, j: int, y: int = None):
        """Returns the estimator used for feature `j` of class `y`"""
        if self.mode == MarginalMode.PER_CLASS:
            if y is None:
                raise MarginalError(
                    "a class index is needed with per_class marginals")
            return self.cells[(j, int(y))]
        return self.cells[(j, None)]

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "feature_names": self.feature_names,
            "cells": [dict(feature=j, cls=y, **c.to_dict())
                      for (j, y), c in sorted(
                          self.cells.items(),
                          key=lambda kv: (kv[0][0], -1 if kv[0][1] is None
                                          else kv[0][1]))]}

    @classmethod
    def from_dict(cls, doc: dict) -> "MarginalModel":
        mode = MarginalMode(doc["mode"])
        cells = {}
        for c in doc["cells"]:
            if mode == MarginalMode.ORACLE_NORMAL:
                cell = NormalCell(c["delta"])
            else:
                cell = KdeCell(c["samples"], c["h"], c["delta"])
            cells[(c["feature"], c["cls"])] = cell
        return cls(mode, cells, doc["n_features"], doc["n_classes"],
                   doc["feature_names"])


# Fitting =====================================================================

def bandwidth_rule(samples, rule: str = "relative",
                   scale: float = BANDWIDTH_SCALE,
                   exponent: float = BANDWIDTH_EXPONENT,
                   cell_name: str = "") -> float:
    """Returns the KDE bandwidth of a sample

    Args:
        samples: Sample values, at least two
        rule (str, optional): `relative` (scale * std * m^exponent),
            `absolute` (scale * m^exponent) or `silverman`
            (0.9 * min(std, IQR / 1.34) * m^(-1/5)). Defaults to relative.
        scale (float, optional): Bandwidth scale. Defaults to 10.
        exponent (float, optional): Exponent of m. Defaults to -0.51.
        cell_name (str, optional): Name used in error messages

    Raises:
        MarginalError: If the sample has zero variance or an unknown rule is
            requested

    Returns:
        float: Positive bandwidth
    """
    samples = np.asarray(samples, dtype=float)
    m = samples.size
    if rule not in BANDWIDTH_RULES:
        raise MarginalError(f"unknown bandwidth rule '{rule}'")
    if m < 2:
        raise MarginalError(
            f"{cell_name}: at least two samples are needed, got {m}")
    sigma = float(np.std(samples, ddof=1))
    if not sigma > 0.0:
        raise MarginalError(f"{cell_name}: zero variance")
    if rule == "relative":
        return scale * sigma * m ** exponent
    if rule == "absolute":
        return scale * m ** exponent
    spread = sigma
    iqr = float(scipy.stats.iqr(samples))
    if iqr > 0.0:
        spread = min(sigma, iqr / 1.34)
    return 0.9 * spread * m ** (-0.2)


def fit_marginals(ds: Dataset, plan: SplitPlan, mode,
                  bandwidth_scale: float = BANDWIDTH_SCALE,
                  exponent: float = BANDWIDTH_EXPONENT,
                  rule: str = "relative") -> MarginalModel:
    """Fits the marginal estimators on the fit rows

    Args:
        ds (Dataset): Complete dataset (no missing cells)
        plan (SplitPlan): Split of `ds`; only fit rows are read
        mode (MarginalMode or str): Estimation mode
        bandwidth_scale (float, optional): Defaults to 10.
        exponent (float, optional): Defaults to -0.51.
        rule (str, optional): Bandwidth rule. Defaults to relative.

    Raises:
        MarginalError: If a cell is empty or has zero variance

    Returns:
        MarginalModel: Fitted model
    """
    mode = MarginalMode(mode)
    x = ds.features[plan.fit_idx]
    labels = ds.labels[plan.fit_idx]
    if ds.missing is not None and ds.missing[plan.fit_idx].any():
        raise MarginalError("fit rows still hold missing cells")
    if x.shape[0] == 0:
        raise MarginalError("fit split is empty")

    cells = {}
    for j in range(ds.n_features):
        name = ds.feature_names[j]
        if mode == MarginalMode.ORACLE_NORMAL:
            cells[(j, None)] = NormalCell(1.0 / (2.0 * (x.shape[0] + 1)))
        elif mode == MarginalMode.POOLED:
            h = bandwidth_rule(x[:, j], rule, bandwidth_scale, exponent,
                               f"feature {name}, pooled")
            cells[(j, None)] = KdeCell(x[:, j], h)
        else:
            for y in range(ds.n_classes):
                col = x[labels == y, j]
                h = bandwidth_rule(col, rule, bandwidth_scale, exponent,
                                   f"feature {name}, class {y}")
                cells[(j, y)] = KdeCell(col, h)
    for (j, y), c in cells.items():
        if isinstance(c, KdeCell):
            logger.debug(
                f"marginals,{ds.feature_names[j]} class={y},"
                f"m={c.samples.size} h={c.h:.6g}")
    logger.info(
        f"marginals,{mode.value},Fitted {len(cells)} cells on "
        f"{x.shape[0]} fit rows")
    return MarginalModel(mode, cells, ds.n_features, ds.n_classes,
                         ds.feature_names)


# Evaluation ==================================================================

def _scalar(value, x):
    if np.ndim(x) == 0:
        return float(value)
    return value


def cdf(model: MarginalModel, j: int, y, x):
    """Smoothed empirical CDF of feature `j`, clipped to [delta, 1 - delta]

    Args:
        model (MarginalModel): Fitted model
        j (int): Feature index
        y (int): Class index, ignored by pooled and oracle models
        x: Scalar or array of feature values

    Returns:
        float or np.ndarray: Values in [delta, 1 - delta]
    """
    return _scalar(model.cell(j, y).cdf(x), x)


def pdf(model: MarginalModel, j: int, y, x):
    """Gaussian KDE of feature `j`, floored at EPS"""
    return _scalar(model.cell(j, y).pdf(x), x)


def pit_transform(model: MarginalModel, x, y: int) -> np.ndarray:
    """Maps feature vectors to pseudo-observations with the CDFs of class y

    Args:
        model (MarginalModel): Fitted model
        x: d-vector or (n, d) matrix of features
        y (int): Class whose estimators are used

    Returns:
        np.ndarray: Same shape as `x`, values in [delta, 1 - delta]
    """
    x = np.asarray(x, dtype=float)
    u = np.empty(x.shape)
    for j in range(model.n_features):
        u[..., j] = model.cell(j, y).cdf(x[..., j])
    return u


def log_marginal_density(model: MarginalModel, x, y: int) -> np.ndarray:
    """Sum over features of the floored log marginal densities of class y

    Args:
        model (MarginalModel): Fitted model
        x: d-vector or (n, d) matrix of features
        y (int): Class whose estimators are used

    Returns:
        np.ndarray: One value per row of `x`
    """
    x = np.asarray(x, dtype=float)
    total = np.zeros(x.shape[:-1])
    for j in range(model.n_features):
        total = total + np.log(
            np.maximum(model.cell(j, y).pdf(x[..., j]), EPS))
    return total
