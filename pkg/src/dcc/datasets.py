""" Datasets of the dcc package: deep copula classifier toolkit

This submodule generates the synthetic two-class correlated Gaussian data,
reads and preprocesses the PIMA Indians Diabetes CSV and builds the
deterministic stratified fit/calibration/test splits shared by every model of
an experiment.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from typing import List, Tuple

from dcc.core import DatasetError, SplitError, PreprocessError, \
    PIMA_LABEL, PIMA_COLUMNS, PIMA_ZERO_AS_MISSING, TEST_RATIO, CAL_RATIO, \
    WINSOR_Q, SPLIT_NAMES, make_rng, box_muller, round_half_up
from dcc.utils import write_csv

import logging
import math
import numpy as np
import pandas as pd


# Python logging ==============================================================
logger = logging.getLogger(__name__)


# Dataset classes =============================================================

class Dataset:
    """
    Feature matrix with integer class labels.

    Missing cells are flagged in the boolean :attr:`missing` mask; the
    feature matrix itself never holds NaN. Arrays are read-only after
    construction.

    Args:
        features: (n, d) matrix of real numbers.
        labels: n class indices in {0..K-1}.
        feature_names: d column names. Defaults to x1..xd.
        n_classes: number of classes K. Defaults to max(labels) + 1.
        missing: optional (n, d) boolean mask of missing cells.
        partial: rows of a larger dataset, such as a split or a file too
            small to hold every class. Only partial datasets may leave a
            class without rows.

    Attributes:
        features (np.ndarray): (n, d) read-only feature matrix.
        labels (np.ndarray): n read-only class indices.
        feature_names (List[str]): column names.
        n_classes (int): number of classes K.
        missing (np.ndarray): (n, d) read-only mask or None when complete.
        partial (bool): classes may be empty.
    """

    def __init__(self, features, labels, feature_names: List[str] = None,
                 n_classes: int = None, missing=None, partial: bool = False):
        features = np.array(features, dtype=float)
        labels = np.array(labels, dtype=int).reshape(-1)
        if features.ndim != 2:
            raise DatasetError(
                f"features must be a matrix, got {features.ndim} dimensions")
        if features.shape[0] != labels.shape[0]:
            raise DatasetError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} "
                f"labels")
        if np.isnan(features).any():
            raise DatasetError(
                "features contain NaN; flag missing cells in the missing "
                "mask instead")
        if feature_names is None:
            feature_names = [f"x{j + 1}" for j in range(features.shape[1])]
        if len(feature_names) != features.shape[1]:
            raise DatasetError(
                f"{len(feature_names)} feature names for "
                f"{features.shape[1]} columns")
        if n_classes is None:
            n_classes = int(labels.max()) + 1 if labels.size > 0 else 0
        if labels.size > 0 and (labels.min() < 0 or
                                labels.max() >= n_classes):
            raise DatasetError(
                f"labels must lie in 0..{n_classes - 1}")
        if not partial and labels.size > 0:
            empty = np.flatnonzero(
                np.bincount(labels, minlength=n_classes) == 0)
            if empty.size > 0:
                raise DatasetError(
                    f"class {int(empty[0])} has no rows; pass partial=True "
                    f"for a subset of a dataset")
        if missing is not None:
            missing = np.array(missing, dtype=bool)
            if missing.shape != features.shape:
                raise DatasetError(
                    f"missing mask shape {missing.shape} does not match "
                    f"features shape {features.shape}")
            missing.setflags(write=False)
        features.setflags(write=False)
        labels.setflags(write=False)

        self.features = features
        self.labels = labels
        self.feature_names = list(feature_names)
        self.n_classes = int(n_classes)
        self.missing = missing
        self.partial = bool(partial)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        """Returns the number of rows of every class"""
        return np.bincount(self.labels, minlength=self.n_classes)

    def take(self, indices) -> "Dataset":
        """Returns the rows in `indices` as a new dataset

        Args:
            indices: row indices

        Returns:
            Dataset: rows of this dataset, in the order given by `indices`
        """
        indices = np.asarray(indices, dtype=int)
        missing = None
        if self.missing is not None:
            missing = self.missing[indices]
        return Dataset(self.features[indices], self.labels[indices],
                       self.feature_names, self.n_classes, missing,
                       partial=True)


class SplitPlan:
    """
    Disjoint fit, calibration and test row indices.

    Attributes:
        fit_idx (np.ndarray): sorted rows used to fit models.
        cal_idx (np.ndarray): sorted rows used for calibration only.
        test_idx (np.ndarray): sorted rows used for the final evaluation.
        seed (int): seed of the permutation.
        ratios (Dict[str, float]): train, cal_of_train and test ratios.
    """

    def __init__(self, fit_idx, cal_idx, test_idx, seed: int,
                 ratios: dict = None):
        self.fit_idx = np.sort(np.asarray(fit_idx, dtype=int))
        self.cal_idx = np.sort(np.asarray(cal_idx, dtype=int))
        self.test_idx = np.sort(np.asarray(test_idx, dtype=int))
        self.seed = int(seed)
        if ratios is None:
            ratios = {"train": 1.0 - TEST_RATIO, "cal_of_train": CAL_RATIO,
                      "test": TEST_RATIO}
        self.ratios = dict(ratios)
        everything = np.concatenate(
            [self.fit_idx, self.cal_idx, self.test_idx])
        if np.unique(everything).size != everything.size:
            raise SplitError("split index lists overlap")

    @property
    def n_rows(self) -> int:
        return self.fit_idx.size + self.cal_idx.size + self.test_idx.size

    def to_frame(self) -> pd.DataFrame:
        """Returns the split assignment as an `index,split` dataframe"""
        frames = [pd.DataFrame({"index": idx, "split": name})
                  for idx, name in zip(
                      [self.fit_idx, self.cal_idx, self.test_idx],
                      SPLIT_NAMES)]
        return pd.concat(frames, ignore_index=True).sort_values(
            by="index", ignore_index=True)


class PreprocessStats:
    """
    Per-class imputation medians and winsorization bounds.

    Attributes:
        medians (np.ndarray): (K, d) medians of the observed fit values.
        low (np.ndarray): (K, d) lower winsor bounds.
        high (np.ndarray): (K, d) upper winsor bounds.
        feature_names (List[str]): column names.
        q (float): winsorization quantile.
    """

    def __init__(self, medians, low, high, feature_names: List[str],
                 q: float = WINSOR_Q):
        self.medians = np.asarray(medians, dtype=float)
        self.low = np.asarray(low, dtype=float)
        self.high = np.asarray(high, dtype=float)
        self.feature_names = list(feature_names)
        self.q = q

    def median(self, y: int, j: int) -> float:
        return float(self.medians[y, j])

    def bounds(self, y: int, j: int) -> Tuple[float, float]:
        return float(self.low[y, j]), float(self.high[y, j])

    def to_frame(self) -> pd.DataFrame:
        """Returns the statistics as a long dataframe"""
        rows = []
        for y in range(self.medians.shape[0]):
            for j, name in enumerate(self.feature_names):
                rows.append({"class": y, "feature": name,
                             "median": self.medians[y, j],
                             "low": self.low[y, j],
                             "high": self.high[y, j]})
        return pd.DataFrame(rows)


# Data sources ================================================================

def gen_synthetic(n_per_class: int, rho: float, seed: int) -> Dataset:
    """Draws the two-class correlated Gaussian dataset

    Class 0 is drawn from N(0, [[1, rho], [rho, 1]]) and class 1 from
    N(0, [[1, -rho], [-rho, 1]]). Both classes share standard normal
    marginals, so only the dependence separates them.

    Args:
        n_per_class (int): Rows per class
        rho (float): Correlation of class 0, |rho| < 1
        seed (int): Seed of the Philox stream

    Raises:
        DatasetError: If `rho` is outside (-1, 1) or `n_per_class` < 1

    Returns:
        Dataset: 2 * n_per_class rows with class 0 rows first
    """
    if not (isinstance(rho, (int, float)) and math.isfinite(rho) and
            abs(rho) < 1.0):
        raise DatasetError(f"rho must lie in (-1, 1), got {rho}")
    if int(n_per_class) < 1:
        raise DatasetError(
            f"n_per_class must be a positive integer, got {n_per_class}")
    n_per_class = int(n_per_class)
    rng = make_rng(seed)
    z = box_muller(rng, 2 * n_per_class)
    signs = np.repeat([1.0, -1.0], n_per_class)
    r = signs * rho
    # Cholesky factor of [[1, r], [r, 1]] is [[1, 0], [r, sqrt(1 - r^2)]]
    x1 = z[:, 0]
    x2 = r * z[:, 0] + np.sqrt(1.0 - r * r) * z[:, 1]
    labels = np.repeat([0, 1], n_per_class)
    logger.debug(
        f"datasets,synthetic,Generated {2 * n_per_class} rows with "
        f"rho={rho} seed={seed}")
    return Dataset(np.column_stack([x1, x2]), labels, ["x1", "x2"], 2)


def load_pima(path: str) -> Dataset:
    """Reads the PIMA Indians Diabetes CSV

    Args:
        path (str): CSV file with a header row and 9 columns, the last one
            named Outcome with values in {0, 1}

    Raises:
        FileNotFoundError: If `path` does not exist
        DatasetError: On a wrong column count, a non-numeric cell or an
            unknown label value. The message names the row and column.

    Returns:
        Dataset: n rows, 8 features and binary labels, column order preserved
    """
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False,
                          skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError:
        raise DatasetError(f"{path}: file is empty")
    except pd.errors.ParserError as ex:
        raise DatasetError(f"{path}: wrong number of columns ({ex})")

    columns = [c.strip() for c in raw.columns]
    if len(columns) != len(PIMA_COLUMNS):
        raise DatasetError(
            f"{path}: expected {len(PIMA_COLUMNS)} columns, found "
            f"{len(columns)}")
    if columns[-1] != PIMA_LABEL:
        raise DatasetError(
            f"{path}: last column must be named {PIMA_LABEL}, found "
            f"'{columns[-1]}'")
    if columns != PIMA_COLUMNS:
        logger.warning(
            f"datasets,{path},Header differs from the canonical PIMA header")
    raw.columns = columns

    values = np.empty(raw.shape, dtype=float)
    for j, col in enumerate(columns):
        cells = raw[col]
        parsed = pd.to_numeric(cells, errors="coerce").to_numpy(dtype=float)
        bad = ~np.isfinite(parsed)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            cell = cells.iloc[i]
            raise DatasetError(
                f"{path}: non-numeric value '{'' if pd.isna(cell) else cell}'"
                f" at data row {i + 1}, column {col}")
        values[:, j] = parsed

    labels = values[:, -1]
    unknown = (labels != 0.0) & (labels != 1.0)
    if unknown.any():
        i = int(np.flatnonzero(unknown)[0])
        raise DatasetError(
            f"{path}: unknown label value {labels[i]:g} at data row {i + 1}, "
            f"column {PIMA_LABEL}")

    logger.info(
        f"datasets,{path},Loaded {values.shape[0]} rows and "
        f"{values.shape[1] - 1} features")
    labels = labels.astype(int)
    partial = bool((np.bincount(labels, minlength=2) == 0).any())
    if partial:
        logger.warning(
            f"datasets,{path},Only one class among {labels.size} rows")
    return Dataset(values[:, :-1], labels, columns[:-1], 2, partial=partial)


def mark_zeros_missing(ds: Dataset) -> Dataset:
    """Flags literal zeros of the PIMA physiological columns as missing

    Only Glucose, BloodPressure, SkinThickness, Insulin and BMI are
    affected; every other column is left untouched.

    Args:
        ds (Dataset): PIMA dataset

    Raises:
        DatasetError: If one of the five columns is absent

    Returns:
        Dataset: same values with the zero cells flagged in `missing`
    """
    missing = np.zeros(ds.features.shape, dtype=bool)
    if ds.missing is not None:
        missing |= ds.missing
    for name in PIMA_ZERO_AS_MISSING:
        if name not in ds.feature_names:
            raise DatasetError(f"column {name} not found in dataset")
        j = ds.feature_names.index(name)
        missing[:, j] |= ds.features[:, j] == 0.0
    logger.debug(
        f"datasets,pima,{int(missing.sum())} zero cells flagged as missing")
    return Dataset(ds.features, ds.labels, ds.feature_names, ds.n_classes,
                   missing, ds.partial)


# Splits ======================================================================

def make_splits(ds: Dataset, seed: int, test_ratio: float = TEST_RATIO,
                cal_ratio: float = CAL_RATIO) -> SplitPlan:
    """Builds the stratified fit/calibration/test split

    Every class is permuted with the seeded stream; round(test_ratio * n_c)
    rows go to test, round(cal_ratio * remaining) to calibration and the
    rest to fit.

    Args:
        ds (Dataset): Dataset to split
        seed (int): Seed of the permutation
        test_ratio (float, optional): Test fraction. Defaults to 0.30.
        cal_ratio (float, optional): Calibration fraction of the training
            rows. Defaults to 0.15.

    Raises:
        SplitError: If a class has fewer than 3 rows

    Returns:
        SplitPlan: Deterministic split for `seed`
    """
    rng = make_rng(seed)
    fit, cal, test = [], [], []
    for y, n_c in enumerate(ds.class_counts()):
        if n_c < 3:
            raise SplitError(
                f"class {y} has {n_c} rows; at least 3 are needed to "
                f"stratify")
        members = rng.permutation(np.flatnonzero(ds.labels == y))
        n_test = round_half_up(test_ratio * n_c)
        n_cal = round_half_up(cal_ratio * (n_c - n_test))
        test.append(members[:n_test])
        cal.append(members[n_test:n_test + n_cal])
        fit.append(members[n_test + n_cal:])
    plan = SplitPlan(np.concatenate(fit), np.concatenate(cal),
                     np.concatenate(test), seed,
                     {"train": 1.0 - test_ratio, "cal_of_train": cal_ratio,
                      "test": test_ratio})
    logger.debug(
        f"datasets,seed={seed},Split sizes fit={plan.fit_idx.size} "
        f"cal={plan.cal_idx.size} test={plan.test_idx.size}")
    return plan


def training_view(ds: Dataset, plan: SplitPlan) -> Tuple[Dataset, SplitPlan]:
    """Returns the fit and calibration rows with a plan re-indexed on them

    The returned plan has an empty test list, so that nothing fitted on the
    view can reach a test row.

    Args:
        ds (Dataset): Full dataset
        plan (SplitPlan): Split of `ds`

    Returns:
        Tuple[Dataset, SplitPlan]: fit rows followed by calibration rows, and
        the matching local plan
    """
    rows = np.concatenate([plan.fit_idx, plan.cal_idx])
    n_fit = plan.fit_idx.size
    local = SplitPlan(np.arange(n_fit), np.arange(n_fit, rows.size), [],
                      plan.seed, plan.ratios)
    return ds.take(rows), local


def export_splits(plan: SplitPlan, path: str):
    """Writes the `index,split` audit CSV of `plan`"""
    write_csv(plan.to_frame(), path)


# Preprocessing ===============================================================

def fit_preprocess(ds: Dataset, plan: SplitPlan,
                   q: float = WINSOR_Q) -> PreprocessStats:
    """Learns per-class medians and winsor bounds on the fit rows

    Args:
        ds (Dataset): Dataset with missing cells flagged
        plan (SplitPlan): Split of `ds`; only `plan.fit_idx` rows are read
        q (float, optional): Winsorization quantile. Defaults to 0.005.

    Raises:
        PreprocessError: If a (class, feature) has no observed fit value

    Returns:
        PreprocessStats: medians of the observed values and (q, 1 - q)
        quantiles of the imputed values, per (class, feature)
    """
    x = ds.features[plan.fit_idx]
    labels = ds.labels[plan.fit_idx]
    if ds.missing is not None:
        miss = ds.missing[plan.fit_idx]
    else:
        miss = np.zeros(x.shape, dtype=bool)

    k, d = ds.n_classes, ds.n_features
    medians = np.empty((k, d))
    low = np.empty((k, d))
    high = np.empty((k, d))
    for y in range(k):
        rows = labels == y
        for j in range(d):
            col = x[rows, j]
            col_miss = miss[rows, j]
            observed = col[~col_miss]
            if observed.size == 0:
                raise PreprocessError(
                    f"class {y}, feature {ds.feature_names[j]}: no observed "
                    f"value in the fit rows")
            medians[y, j] = np.median(observed)
            imputed = np.where(col_miss, medians[y, j], col)
            low[y, j], high[y, j] = np.quantile(imputed, [q, 1.0 - q])
    logger.debug(
        f"datasets,preprocess,Statistics learned on {x.shape[0]} fit rows")
    return PreprocessStats(medians, low, high, ds.feature_names, q)


def apply_preprocess(ds: Dataset, stats: PreprocessStats,
                     class_for_imputation=None) -> Dataset:
    """Imputes missing cells and winsorizes every row

    Missing cells take the median of the row's class; every value is then
    clipped to the winsor interval of its (class, feature).

    Args:
        ds (Dataset): Rows to transform
        stats (PreprocessStats): Statistics from :func:`fit_preprocess`
        class_for_imputation (optional): Per-row class used to pick the
            statistics. Defaults to the row labels.

    Returns:
        Dataset: Complete dataset without missing cells
    """
    if class_for_imputation is None:
        classes = ds.labels
    else:
        classes = np.asarray(class_for_imputation, dtype=int)
        if classes.shape != ds.labels.shape:
            raise DatasetError(
                f"{classes.shape[0]} imputation classes for {ds.n_rows} rows")
    x = np.array(ds.features)
    if ds.missing is not None:
        x = np.where(ds.missing, stats.medians[classes], x)
    x = np.clip(x, stats.low[classes], stats.high[classes])
    return Dataset(x, ds.labels, ds.feature_names, ds.n_classes,
                   partial=ds.partial)
