"""Unit tests for dcc.metrics: accuracy, ROC-AUC, average precision, curves,
reliability bins and Expected Calibration Error.

See license and disclaimer at the top level directory of this project.

"""

import numpy as np
import pytest

import dcc
import dcc.metrics


def _brute_force_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = (pos[:, None] > neg[None, :]).sum() + \
        0.5 * (pos[:, None] == neg[None, :]).sum()
    return wins / (pos.size * neg.size)


def test_accuracy():
    """
    Test accuracy on small inputs and its error cases
    """
    # Setup
    # Exercise
    # Verify
    assert dcc.metrics.accuracy([1, 0, 1, 1], [1, 0, 0, 1]) == 0.75
    assert dcc.metrics.accuracy([1], [1]) == 1.0
    with pytest.raises(dcc.MetricError):
        dcc.metrics.accuracy([], [])
    with pytest.raises(dcc.MetricError):
        dcc.metrics.accuracy([1, 0], [1])
    # Cleanup -- not needed
# end test_accuracy


def test_roc_auc_examples():
    """
    Test ROC-AUC on hand computed examples
    """
    # Setup
    scores = [0.9, 0.8, 0.7, 0.6]
    labels = [1, 0, 1, 0]
    # Exercise
    # Verify
    assert dcc.metrics.roc_auc(scores, labels) == 0.75
    assert dcc.metrics.roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert dcc.metrics.roc_auc([0.5] * 6, [0, 1, 0, 1, 1, 0]) == 0.5
    with pytest.raises(dcc.MetricError):
        dcc.metrics.roc_auc([0.1, 0.2], [1, 1])
    # Cleanup -- not needed
# end test_roc_auc_examples


def test_roc_auc_matches_pair_counting():
    """
    Test ROC-AUC equals the pair count on random tied data
    """
    # Setup
    rng = np.random.default_rng(0)
    # Exercise
    # Verify
    for n in [5, 37, 200]:
        scores = np.round(rng.normal(size=n), 1)
        labels = (rng.random(n) < 0.4).astype(int)
        labels[:2] = [0, 1]
        assert dcc.metrics.roc_auc(scores, labels) == \
            pytest.approx(_brute_force_auc(scores, labels), rel=1e-12)
        assert dcc.metrics.roc_auc(scores, 1 - labels) == \
            pytest.approx(1.0 - dcc.metrics.roc_auc(scores, labels))
    # Cleanup -- not needed
# end test_roc_auc_matches_pair_counting


def test_metrics_invariant_to_monotone_maps():
    """
    Test ranking metrics only depend on the order of the scores
    """
    # Setup
    rng = np.random.default_rng(1)
    scores = rng.normal(size=300)
    labels = (rng.random(300) < 0.5).astype(int)
    # Exercise
    # Verify
    assert dcc.metrics.roc_auc(np.exp(scores), labels) == \
        dcc.metrics.roc_auc(scores, labels)
    assert dcc.metrics.pr_auc(np.exp(scores), labels) == \
        dcc.metrics.pr_auc(scores, labels)
    # Cleanup -- not needed
# end test_metrics_invariant_to_monotone_maps


def test_pr_auc_examples():
    """
    Test average precision on hand computed examples
    """
    # Setup
    rng = np.random.default_rng(2)
    labels = (rng.random(20000) < 0.3).astype(int)
    # Exercise
    # Verify
    assert dcc.metrics.pr_auc([0.9, 0.8, 0.7, 0.6], [1, 0, 1, 0]) == \
        pytest.approx(5.0 / 6.0)
    assert dcc.metrics.pr_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert dcc.metrics.pr_auc(rng.random(20000), labels) == \
        pytest.approx(labels.mean(), abs=0.02)
    with pytest.raises(dcc.MetricError):
        dcc.metrics.pr_auc([0.1, 0.2], [0, 0])
    # Cleanup -- not needed
# end test_pr_auc_examples


def test_curves():
    """
    Test the ends of the ROC and precision-recall curves
    """
    # Setup
    scores = [0.9, 0.8, 0.8, 0.3]
    labels = [1, 0, 1, 0]
    # Exercise
    roc = dcc.metrics.roc_curve(scores, labels)
    pr = dcc.metrics.pr_curve(scores, labels)
    # Verify
    assert list(roc.columns) == ["fpr", "tpr", "threshold"]
    assert roc.iloc[0].tolist() == [0.0, 0.0, np.inf]
    assert roc.iloc[-1][["fpr", "tpr"]].tolist() == [1.0, 1.0]
    assert roc.shape[0] == 4
    assert list(pr.columns) == ["recall", "precision", "threshold"]
    assert pr["recall"].iloc[-1] == 1.0
    assert pr["precision"].tolist() == [1.0, 2.0 / 3.0, 0.5]
    # Cleanup -- not needed
# end test_curves


def test_reliability_and_ece():
    """
    Test reliability bins and ECE on hand computed examples
    """
    # Setup
    # Exercise
    bins, ece = dcc.metrics.reliability_and_ece([0.9, 0.9], [1, 0])
    # Verify
    assert ece == pytest.approx(0.4)
    assert bins["count"].sum() == 2
    assert bins["count"].iloc[9] == 2
    assert np.isnan(bins["conf"].iloc[0])
    assert list(bins.columns) == ["bin_lo", "bin_hi", "conf", "acc",
                                  "count"]
    _, exact = dcc.metrics.reliability_and_ece([1.0, 0.0, 1.0], [1, 0, 1])
    assert exact == 0.0
    last, _ = dcc.metrics.reliability_and_ece([1.0], [1])
    assert last["count"].iloc[9] == 1
    with pytest.raises(dcc.MetricError):
        dcc.metrics.reliability_and_ece([1.2], [1])
    # Cleanup -- not needed
# end test_reliability_and_ece


def test_ece_of_calibrated_probabilities():
    """
    Test labels drawn from their probabilities give a small ECE
    """
    # Setup
    rng = np.random.default_rng(3)
    p = rng.random(100000)
    y = (rng.random(100000) < p).astype(int)
    # Exercise
    _, ece = dcc.metrics.reliability_and_ece(p, y)
    # Verify
    assert ece < 0.01
    # Cleanup -- not needed
# end test_ece_of_calibrated_probabilities


def test_evaluate():
    """
    Test the report gathers every metric with 0.5 decisions
    """
    # Setup
    probs = [0.9, 0.6, 0.4, 0.2]
    labels = [1, 0, 1, 0]
    # Exercise
    report = dcc.metrics.evaluate(probs, labels)
    # Verify
    assert report.accuracy == 0.5
    assert report.roc_auc == 0.75
    assert sorted(report.to_dict()) == ["accuracy", "ece", "pr_auc",
                                        "roc_auc"]
    assert report.reliability.shape[0] == 10
    # Cleanup -- not needed
# end test_evaluate
