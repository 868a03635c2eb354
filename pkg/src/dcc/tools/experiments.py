""" Experiment runners of the dcc package: deep copula classifier toolkit

This submodule wires datasets, models, calibration and metrics into the
synthetic dependence experiment and the PIMA experiment, and writes their
reports (metrics JSON, predictions, curves, reliability bins, loss traces,
decision regions, copula probes and fitted models).

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from typing import Callable, List

from tqdm import tqdm

from dcc.core import Error, StageError
from dcc.config import ExperimentConfig, config_hash
from dcc.datasets import Dataset, gen_synthetic, load_pima, \
    mark_zeros_missing, make_splits, training_view, fit_preprocess, \
    apply_preprocess, export_splits
from dcc.classifier import DccModel, fit_dcc, predict, save_model, \
    bayes_rule_synthetic, bayes_score_synthetic
from dcc.calibration import PlattModel, fit_platt, apply_platt, \
    ranking_scores
from dcc.copula import probe_grid
from dcc.metrics import EvalReport, evaluate, accuracy
from dcc.baselines import fit_logreg, fit_gnb, score
from dcc.utils import write_csv, write_json

import copy
import logging
import os
import numpy as np
import pandas as pd


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Metrics summarized across seeds
SUMMARY_METRICS = ["accuracy", "roc_auc", "pr_auc", "ece"]


class ProgressCallBack:
    """
    Class to connect and update tqdm progress bars from the training loops
    """
    def __init__(self, pbar: tqdm):
        """
        Args:
            pbar (tqdm): Progress bar
        """
        self.pbar = pbar

    def emit(self, i, j):
        if j != self.pbar.total or self.pbar.n >= self.pbar.total:
            self.pbar.reset(j)
        self.pbar.update(i)


class ModelResult:
    """
    Calibrated test evaluation of one model.

    Attributes:
        name (str): model name.
        platt (PlattModel): calibrator fitted on the calibration rows.
        report (EvalReport): test metrics.
        predictions (pd.DataFrame): index, true_label, score_raw,
            score_calibrated and pred_label of every test row.
    """

    def __init__(self, name: str, platt: PlattModel, report: EvalReport,
                 predictions: pd.DataFrame):
        self.name = name
        self.platt = platt
        self.report = report
        self.predictions = predictions

    def to_dict(self) -> dict:
        doc = {"name": self.name, "platt": self.platt.to_dict()}
        doc.update(self.report.to_dict())
        return doc


class RunResult:
    """
    Results of one seed of an experiment.

    Attributes:
        experiment (str): synthetic or pima.
        seed (int): seed of the run.
        config_hash (str): hash of the configuration.
        models (List[ModelResult]): evaluated models, in report order.
    """

    def __init__(self, experiment: str, seed: int, config_hash: str):
        self.experiment = experiment
        self.seed = seed
        self.config_hash = config_hash
        self.models = []

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "seed": self.seed,
                "config_hash": self.config_hash,
                "models": [m.to_dict() for m in self.models]}


def run_stage(stage: str, func: Callable, *args, **kwargs):
    """Runs `func`, wrapping package errors in a StageError naming `stage`"""
    logger.info(f"experiments,{stage},Started")
    try:
        return func(*args, **kwargs)
    except StageError:
        raise
    except Error as ex:
        logger.error(f"experiments,{stage},{ex}")
        raise StageError(stage, ex) from ex


def seed_config(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    cfg = copy.deepcopy(config)
    cfg.seed = seed
    return cfg


def calibrated_result(name: str, cal_scores, cal_labels, test_scores,
                      test_labels, test_index, config: ExperimentConfig) \
        -> ModelResult:
    """Fits Platt on the calibration scores and evaluates the test scores

    Args:
        name (str): Model name
        cal_scores: Raw scores of the calibration rows
        cal_labels: Labels of the calibration rows
        test_scores: Raw scores of the test rows
        test_labels: Labels of the test rows
        test_index: Row indices of the test rows in the full dataset
        config (ExperimentConfig): Platt settings

    Returns:
        ModelResult: Calibrator, metrics and predictions
    """
    platt = run_stage(f"calibrate {name}", fit_platt, cal_scores, cal_labels,
                      config.platt_max_iters, config.platt_tol)
    probs = apply_platt(platt, test_scores)
    report = run_stage(f"evaluate {name}", evaluate, probs, test_labels,
                       scores=ranking_scores(platt, test_scores))
    predictions = pd.DataFrame({
        "index": np.asarray(test_index, dtype=int),
        "true_label": np.asarray(test_labels, dtype=int),
        "score_raw": np.asarray(test_scores, dtype=float),
        "score_calibrated": probs,
        "pred_label": (probs > 0.5).astype(int)})
    logger.info(f"experiments,{name},accuracy={report.accuracy:.4f} "
                f"roc_auc={report.roc_auc:.4f} pr_auc={report.pr_auc:.4f} "
                f"ece={report.ece:.4f}")
    return ModelResult(name, platt, report, predictions)


def decision_region(model: DccModel, platt: PlattModel, extent: float,
                    resolution: int) -> pd.DataFrame:
    """Calibrated decision of a 2-d model over [-extent, extent]^2"""
    axis = np.linspace(-extent, extent, resolution)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([x1.ravel(), x2.ravel()])
    _, _, scores = predict(model, grid)
    posterior = apply_platt(platt, scores)
    return pd.DataFrame({"x1": grid[:, 0], "x2": grid[:, 1],
                         "pred": (posterior > 0.5).astype(int),
                         "posterior": posterior})


# Report writers ==============================================================

def _path(config: ExperimentConfig, name: str, seed: int, ext: str) -> str:
    return os.path.join(config.output_dir, f"{name}_seed{seed}.{ext}")


def write_model_reports(config: ExperimentConfig, seed: int,
                        result: ModelResult):
    write_csv(result.predictions,
              _path(config, f"predictions_{result.name}", seed, "csv"))
    write_csv(result.report.roc, _path(config, f"roc_{result.name}", seed,
                                       "csv"))
    write_csv(result.report.pr, _path(config, f"pr_{result.name}", seed,
                                      "csv"))
    write_csv(result.report.reliability,
              _path(config, f"reliability_{result.name}", seed, "csv"))


def write_dcc_reports(config: ExperimentConfig, seed: int, name: str,
                      model: DccModel, platt: PlattModel):
    """Loss traces, fitted model and, for 2-d data, probes and regions"""
    for y, trace in model.traces.items():
        write_csv(trace, _path(config, f"loss_trace_{name}_class{y}", seed,
                               "csv"))
    save_model(model, _path(config, f"model_{name}", seed, "json"))
    if model.marginals.n_features == 2:
        for y, c in enumerate(model.copulas):
            write_csv(probe_grid(c, config.probe_resolution),
                      _path(config, f"copula_probe_{name}_class{y}", seed,
                            "csv"))
        write_csv(decision_region(model, platt, config.region_extent,
                                  config.region_resolution),
                  _path(config, f"decision_region_{name}", seed, "csv"))


def summarize(runs: List[RunResult]) -> dict:
    """Mean and standard deviation of every metric of every model"""
    rows = []
    for run in runs:
        for m in run.models:
            row = {"name": m.name, "seed": run.seed}
            row.update(m.report.to_dict())
            rows.append(row)
    df = pd.DataFrame(rows)
    models = {}
    for name in dict.fromkeys(df["name"]):
        values = df[df["name"] == name]
        models[name] = {
            metric: {"mean": float(values[metric].mean()),
                     "std": float(values[metric].std(ddof=1))
                     if values.shape[0] > 1 else 0.0}
            for metric in SUMMARY_METRICS}
    return {"experiment": runs[0].experiment,
            "config_hash": runs[0].config_hash,
            "seeds": [run.seed for run in runs],
            "models": models}


def _finish(config: ExperimentConfig, runs: List[RunResult]) \
        -> List[RunResult]:
    write_json(summarize(runs), os.path.join(config.output_dir,
                                             "summary.json"))
    write_json(config.to_dict(), os.path.join(config.output_dir,
                                              "config.json"))
    logger.info(f"experiments,{config.experiment},Finished "
                f"{len(runs)} seed(s), reports in {config.output_dir}")
    return runs


# Synthetic experiment ========================================================

def run_synthetic_seed(config: ExperimentConfig, seed: int,
                       progress_callback=None) -> RunResult:
    """Runs the synthetic experiment for one seed and writes its reports

    Args:
        config (ExperimentConfig): Synthetic configuration
        seed (int): Seed of the data, split and models
        progress_callback (optional): Progress of the copula training

    Returns:
        RunResult: Metrics of every marginal mode and of the Bayes rule
    """
    cfg = seed_config(config, seed)
    ds = run_stage("generate data", gen_synthetic, cfg.n_per_class, cfg.rho,
                   seed)
    plan = run_stage("split", make_splits, ds, seed)
    export_splits(plan, _path(cfg, "splits", seed, "csv"))
    train, local = training_view(ds, plan)
    cal_x = train.features[local.cal_idx]
    cal_y = train.labels[local.cal_idx]

    models = {}
    for mode in cfg.modes:
        model = run_stage(f"fit dcc {mode}", fit_dcc, train, local, cfg, mode,
                          progress_callback)
        _, _, cal_scores = predict(model, cal_x)
        models[f"dcc_{mode}"] = (model, cal_scores)

    # Test rows are read here only
    test = ds.take(plan.test_idx)
    run = RunResult(cfg.experiment, seed, config_hash(cfg))
    for name, (model, cal_scores) in models.items():
        _, _, test_scores = predict(model, test.features)
        result = calibrated_result(name, cal_scores, cal_y, test_scores,
                                   test.labels, plan.test_idx, cfg)
        run.models.append(result)
        write_model_reports(cfg, seed, result)
        write_dcc_reports(cfg, seed, name, model, result.platt)

    bayes = calibrated_result(
        "bayes", bayes_score_synthetic(cfg.rho, cal_x), cal_y,
        bayes_score_synthetic(cfg.rho, test.features), test.labels,
        plan.test_idx, cfg)
    # ceiling accuracy is the one of the Bayes rule itself
    bayes.report.accuracy = accuracy(
        bayes_rule_synthetic(cfg.rho, test.features), test.labels)
    run.models.append(bayes)
    write_model_reports(cfg, seed, bayes)

    write_json(run.to_dict(), _path(cfg, "metrics", seed, "json"))
    return run


def run_synthetic(config: ExperimentConfig,
                  progress_callback=None) -> List[RunResult]:
    """Runs the synthetic experiment for `n_seeds` consecutive seeds

    Args:
        config (ExperimentConfig): Synthetic configuration
        progress_callback (optional): Progress of the copula training

    Raises:
        StageError: If a stage fails; the error names the stage

    Returns:
        List[RunResult]: One result per seed. A summary.json with the mean
        and standard deviation of every metric is written next to the
        per-seed reports.
    """
    os.makedirs(config.output_dir, exist_ok=True)
    runs = [run_synthetic_seed(config, s, progress_callback)
            for s in range(config.seed, config.seed + config.n_seeds)]
    return _finish(config, runs)


# PIMA experiment =============================================================

def run_pima_seed(config: ExperimentConfig, raw: Dataset, seed: int,
                  progress_callback=None) -> RunResult:
    """Runs the PIMA experiment for one seed and writes its reports

    Args:
        config (ExperimentConfig): PIMA configuration
        raw (Dataset): PIMA rows with the zero cells flagged as missing
        seed (int): Seed of the split and models
        progress_callback (optional): Progress of the copula training

    Returns:
        RunResult: Metrics of the copula classifier(s), logistic regression
        and Gaussian naive Bayes
    """
    cfg = seed_config(config, seed)
    plan = run_stage("split", make_splits, raw, seed)
    export_splits(plan, _path(cfg, "splits", seed, "csv"))
    train_raw, local = training_view(raw, plan)
    stats = run_stage("preprocess", fit_preprocess, train_raw, local)
    write_csv(stats.to_frame(), _path(cfg, "preprocess", seed, "csv"))
    train = apply_preprocess(train_raw, stats)
    cal_x = train.features[local.cal_idx]
    cal_y = train.labels[local.cal_idx]

    models = {}
    for mode in cfg.modes:
        model = run_stage(f"fit dcc {mode}", fit_dcc, train, local, cfg, mode,
                          progress_callback)
        models[f"dcc_{mode}"] = model
    baselines = {
        "logreg": run_stage("fit logreg", fit_logreg, train, local,
                            cfg.logreg_l2),
        "gnb": run_stage("fit gnb", fit_gnb, train, local,
                         cfg.gnb_var_floor)}

    # Test rows are read here only
    test = apply_preprocess(raw.take(plan.test_idx), stats)
    run = RunResult(cfg.experiment, seed, config_hash(cfg))
    for name, model in models.items():
        _, _, cal_scores = predict(model, cal_x)
        _, _, test_scores = predict(model, test.features)
        result = calibrated_result(name, cal_scores, cal_y, test_scores,
                                   test.labels, plan.test_idx, cfg)
        run.models.append(result)
        write_model_reports(cfg, seed, result)
        write_dcc_reports(cfg, seed, name, model, result.platt)
    for name, model in baselines.items():
        result = calibrated_result(name, score(model, cal_x), cal_y,
                                   score(model, test.features), test.labels,
                                   plan.test_idx, cfg)
        run.models.append(result)
        write_model_reports(cfg, seed, result)

    write_json(run.to_dict(), _path(cfg, "metrics", seed, "json"))
    return run


def load_marked_pima(path: str) -> Dataset:
    """Reads the PIMA CSV and flags its zero measurements as missing"""
    return mark_zeros_missing(load_pima(path))


def run_pima(config: ExperimentConfig,
             progress_callback=None) -> List[RunResult]:
    """Runs the PIMA experiment for `n_seeds` consecutive seeds

    Args:
        config (ExperimentConfig): PIMA configuration with `input_csv` set
        progress_callback (optional): Progress of the copula training

    Raises:
        FileNotFoundError: If the CSV file does not exist
        StageError: If a stage fails; the error names the stage

    Returns:
        List[RunResult]: One result per seed, summarized in summary.json
    """
    if config.input_csv is None or not os.path.isfile(config.input_csv):
        raise FileNotFoundError(
            f"PIMA CSV file not found: {config.input_csv}")
    os.makedirs(config.output_dir, exist_ok=True)
    raw = run_stage("load data", load_marked_pima, config.input_csv)
    runs = [run_pima_seed(config, raw, s, progress_callback)
            for s in range(config.seed, config.seed + config.n_seeds)]
    return _finish(config, runs)
