"""Shared pytest configuration and fixtures of the dcc unit tests.

Tests marked ``slow`` train full-size copula networks and only run with
``pytest --runslow``.

See license and disclaimer at the top level directory of this project.

"""

import json

import numpy as np
import pytest

import dcc
import dcc.config
import dcc.core
import dcc.datasets


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False,
        help="run the slow end-to-end experiment tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow option to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


#: Settings small enough to train a copula classifier in about a second
TINY_SETTINGS = {
    "n_per_class": 60,
    "epochs": 2,
    "batch_size": 32,
    "grid_resolution": 8,
    "sobol_points": 256,
    "penalty_bins": 4,
    "region_resolution": 5,
    "probe_resolution": 4,
}


@pytest.fixture
def tiny_config():
    """Validated synthetic configuration with tiny training settings"""
    return dcc.config.validate_config(json.dumps(TINY_SETTINGS))


@pytest.fixture
def tiny_config_file(tmp_path):
    """Writes TINY_SETTINGS to a JSON file and returns its path"""
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(
        dict(TINY_SETTINGS, modes=["oracle_normal", "pooled"])))
    return str(path)


def write_pima_like_csv(path, n_rows=120, n_positive=None, seed=0,
                        header=None):
    """Writes a PIMA shaped CSV with positive skewed features, a few zero
    cells in the zero-as-missing columns and a binary Outcome"""
    rng = np.random.default_rng(seed)
    if n_positive is None:
        n_positive = int(0.4 * n_rows)
    labels = np.zeros(n_rows, dtype=int)
    labels[rng.permutation(n_rows)[:n_positive]] = 1
    shift = 1.0 + 0.3 * labels
    columns = {
        "Pregnancies": rng.integers(0, 11, n_rows),
        "Glucose": np.round(rng.normal(110.0, 20.0, n_rows) * shift),
        "BloodPressure": np.round(rng.normal(70.0, 10.0, n_rows)),
        "SkinThickness": np.round(rng.uniform(10.0, 45.0, n_rows)),
        "Insulin": np.round(rng.gamma(2.0, 50.0, n_rows) * shift) + 1.0,
        "BMI": np.round(rng.normal(32.0, 6.0, n_rows) * shift, 1),
        "DiabetesPedigreeFunction": np.round(
            rng.gamma(2.0, 0.25, n_rows), 3) + 0.01,
        "Age": rng.integers(21, 70, n_rows),
    }
    for name in ["Glucose", "BloodPressure", "SkinThickness", "Insulin"]:
        zeros = rng.random(n_rows) < 0.05
        columns[name] = np.where(zeros, 0.0, columns[name])
    names = header if header is not None else dcc.core.PIMA_COLUMNS
    lines = [",".join(names)]
    for i in range(n_rows):
        cells = [f"{columns[c][i]:g}" for c in dcc.core.PIMA_COLUMNS[:-1]]
        lines.append(",".join(cells + [str(labels[i])]))
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    return str(path)


@pytest.fixture
def pima_like_csv(tmp_path):
    return write_pima_like_csv(tmp_path / "pima.csv")
