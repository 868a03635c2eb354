"""Unit tests for dcc.tools.experiments: experiment runners, reports and
the single read of the test rows.

See license and disclaimer at the top level directory of this project.

"""

import io
import json
import os

import numpy as np
import pandas as pd
import pytest
from tqdm import tqdm

import dcc
import dcc.calibration
import dcc.classifier
import dcc.config
import dcc.datasets
import dcc.metrics
import dcc.tools.experiments
from dcc.datasets import Dataset

from conftest import TINY_SETTINGS, write_pima_like_csv


def _config(tmp_path, **overrides):
    doc = dict(TINY_SETTINGS, output_dir=str(tmp_path / "out"), **overrides)
    return dcc.config.validate_config(json.dumps(doc))


def _count_takes(monkeypatch):
    calls = []
    original = Dataset.take

    def counting_take(self, indices):
        calls.append(np.asarray(indices, dtype=int).copy())
        return original(self, indices)

    monkeypatch.setattr(Dataset, "take", counting_take)
    return calls


def test_progress_callback():
    """
    Test the progress bar restarts when a new training loop begins
    """
    # Setup
    pbar = tqdm(file=io.StringIO())
    cb = dcc.tools.experiments.ProgressCallBack(pbar)
    # Exercise
    for _ in range(3):
        cb.emit(1, 3)
    full = pbar.n
    cb.emit(1, 3)
    # Verify
    assert full == 3
    assert pbar.n == 1
    assert pbar.total == 3
    pbar.close()
    # Cleanup -- not needed
# end test_progress_callback


def test_run_synthetic_reports(tmp_path):
    """
    Test the synthetic runner writes every report of a run
    """
    # Setup
    config = _config(tmp_path, modes=["pooled"], n_seeds=2)
    out = config.output_dir
    # Exercise
    runs = dcc.tools.experiments.run_synthetic(config)
    # Verify
    assert [run.seed for run in runs] == [0, 1]
    assert [m.name for m in runs[0].models] == ["dcc_pooled", "bayes"]
    metrics = json.load(open(os.path.join(out, "metrics_seed1.json")))
    assert metrics["seed"] == 1
    assert metrics["config_hash"] == dcc.config.config_hash(
        dcc.tools.experiments.seed_config(config, 1))
    assert sorted(metrics["models"][0]) == [
        "accuracy", "ece", "name", "platt", "pr_auc", "roc_auc"]
    for name in ["splits_seed0.csv", "predictions_dcc_pooled_seed0.csv",
                 "roc_bayes_seed0.csv", "pr_dcc_pooled_seed0.csv",
                 "reliability_dcc_pooled_seed0.csv",
                 "loss_trace_dcc_pooled_class1_seed0.csv",
                 "model_dcc_pooled_seed0.json",
                 "copula_probe_dcc_pooled_class0_seed0.csv",
                 "decision_region_dcc_pooled_seed0.csv",
                 "summary.json", "config.json"]:
        assert os.path.isfile(os.path.join(out, name)), name
    predictions = pd.read_csv(
        os.path.join(out, "predictions_dcc_pooled_seed0.csv"))
    assert list(predictions.columns) == [
        "index", "true_label", "score_raw", "score_calibrated",
        "pred_label"]
    assert predictions.shape[0] == 36
    region = pd.read_csv(
        os.path.join(out, "decision_region_dcc_pooled_seed0.csv"))
    assert region.shape == (25, 4)
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["seeds"] == [0, 1]
    assert set(summary["models"]["bayes"]["accuracy"]) == {"mean", "std"}
    # Cleanup -- not needed
# end test_run_synthetic_reports


def test_bayes_row_reports_the_rule_accuracy(tmp_path):
    """
    Test the accuracy of the Bayes row is the one of the closed-form rule
    """
    # Setup
    config = _config(tmp_path, modes=["oracle_normal"])
    ds = dcc.datasets.gen_synthetic(config.n_per_class, config.rho, 0)
    plan = dcc.datasets.make_splits(ds, 0)
    test = ds.take(plan.test_idx)
    expected = np.mean(dcc.classifier.bayes_rule_synthetic(
        config.rho, test.features) == test.labels)
    # Exercise
    run = dcc.tools.experiments.run_synthetic(config)[0]
    # Verify
    assert run.models[-1].name == "bayes"
    assert run.models[-1].report.accuracy == expected
    # Cleanup -- not needed
# end test_bayes_row_reports_the_rule_accuracy


def test_ranking_metrics_use_unsaturated_scores(tmp_path):
    """
    Test ROC-AUC and PR-AUC of the Bayes scores of a nearly degenerate
    correlation are those of the raw scores, although many calibrated
    probabilities round to exactly 1
    """
    # Setup
    config = _config(tmp_path)
    ds = dcc.datasets.gen_synthetic(2000, 0.995, 0)
    plan = dcc.datasets.make_splits(ds, 0)
    cal = ds.take(plan.cal_idx)
    test = ds.take(plan.test_idx)
    cal_scores = dcc.classifier.bayes_score_synthetic(0.995, cal.features)
    test_scores = dcc.classifier.bayes_score_synthetic(0.995, test.features)
    # Exercise
    result = dcc.tools.experiments.calibrated_result(
        "bayes", cal_scores, cal.labels, test_scores, test.labels,
        plan.test_idx, config)
    # Verify
    probs = result.predictions["score_calibrated"].to_numpy()
    assert result.platt.a > 0.0
    assert (probs == 1.0).sum() > 1
    assert np.unique(probs).size < np.unique(test_scores).size
    assert result.report.roc_auc == \
        dcc.metrics.roc_auc(test_scores, test.labels)
    assert result.report.pr_auc == \
        dcc.metrics.pr_auc(test_scores, test.labels)
    assert result.report.roc.shape[0] == np.unique(test_scores).size + 1
    assert result.report.accuracy == \
        dcc.metrics.accuracy((probs > 0.5).astype(int), test.labels)
    # Cleanup -- not needed
# end test_ranking_metrics_use_unsaturated_scores


def test_run_synthetic_independent_classes(tmp_path):
    """
    Test identical classes leave every model at chance accuracy
    """
    # Setup
    config = _config(tmp_path, modes=["pooled"], rho=0.0, n_per_class=2000,
                     batch_size=256)
    # Exercise
    run = dcc.tools.experiments.run_synthetic(config)[0]
    # Verify
    for m in run.models:
        assert m.report.accuracy == pytest.approx(0.5, abs=0.05), m.name
    # Cleanup -- not needed
# end test_run_synthetic_independent_classes


def test_synthetic_reads_test_rows_once(tmp_path, monkeypatch):
    """
    Test the synthetic runner touches the test rows in a single read
    """
    # Setup
    config = _config(tmp_path, modes=["oracle_normal", "per_class"])
    ds = dcc.datasets.gen_synthetic(config.n_per_class, config.rho, 0)
    test_idx = set(dcc.datasets.make_splits(ds, 0).test_idx.tolist())
    calls = _count_takes(monkeypatch)
    # Exercise
    dcc.tools.experiments.run_synthetic(config)
    # Verify
    touching = [c for c in calls if test_idx & set(c.tolist())]
    assert len(touching) == 1
    assert set(touching[0].tolist()) == test_idx
    # Cleanup -- not needed
# end test_synthetic_reads_test_rows_once


def test_run_pima_reports(tmp_path, monkeypatch):
    """
    Test the PIMA runner on a small PIMA shaped file: models, preprocessing
    report and the single read of the test rows
    """
    # Setup
    csv = write_pima_like_csv(tmp_path / "pima.csv", n_rows=120)
    config = _config(tmp_path, experiment="pima", input_csv=csv)
    raw = dcc.tools.experiments.load_marked_pima(csv)
    test_idx = set(dcc.datasets.make_splits(raw, 0).test_idx.tolist())
    calls = _count_takes(monkeypatch)
    # Exercise
    run = dcc.tools.experiments.run_pima(config)[0]
    # Verify
    assert [m.name for m in run.models] == ["dcc_per_class", "logreg", "gnb"]
    for m in run.models:
        assert 0.0 <= m.report.accuracy <= 1.0
        assert 0.0 <= m.report.ece <= 1.0
    stats = pd.read_csv(os.path.join(config.output_dir,
                                     "preprocess_seed0.csv"))
    assert stats.shape[0] == 16
    assert not os.path.isfile(os.path.join(
        config.output_dir, "decision_region_dcc_per_class_seed0.csv"))
    touching = [c for c in calls if test_idx & set(c.tolist())]
    assert len(touching) == 1
    assert set(touching[0].tolist()) == test_idx
    # Cleanup -- not needed
# end test_run_pima_reports


def test_run_pima_stage_errors(tmp_path):
    """
    Test failures name their stage and a missing file is reported as such
    """
    # Setup
    few = write_pima_like_csv(tmp_path / "few.csv", n_rows=40, n_positive=2)
    # Exercise
    # Verify
    with pytest.raises(dcc.StageError) as excinfo:
        dcc.tools.experiments.run_pima(
            _config(tmp_path, experiment="pima", input_csv=few))
    assert excinfo.value.stage == "split"
    assert isinstance(excinfo.value.cause, dcc.SplitError)
    with pytest.raises(FileNotFoundError):
        dcc.tools.experiments.run_pima(
            _config(tmp_path, experiment="pima",
                    input_csv=str(tmp_path / "absent.csv")))
    # Cleanup -- not needed
# end test_run_pima_stage_errors


def test_summarize_single_seed():
    """
    Test a single seed summary has zero spread
    """
    # Setup
    run = dcc.tools.experiments.RunResult("synthetic", 0, "abc")
    report = dcc.metrics.EvalReport(0.9, 0.95, 0.93, 0.02, None, None, None)
    platt = dcc.calibration.PlattModel(1.0, 0.0)
    run.models.append(
        dcc.tools.experiments.ModelResult("m", platt, report, None))
    # Exercise
    summary = dcc.tools.experiments.summarize([run])
    # Verify
    assert summary["models"]["m"]["accuracy"] == {"mean": 0.9, "std": 0.0}
    assert summary["config_hash"] == "abc"
    assert run.to_dict()["models"][0]["platt"] == {"a": 1.0, "b": 0.0}
    # Cleanup -- not needed
# end test_summarize_single_seed
