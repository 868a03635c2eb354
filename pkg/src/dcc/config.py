""" Experiment configuration of the dcc package: deep copula classifier toolkit

This submodule parses and validates the JSON experiment configuration,
fills the defaults of the synthetic and PIMA experiments and computes the
configuration hash written to every report.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
from dcc.core import ConfigError
from dcc.marginals import MarginalMode, BANDWIDTH_RULES

import hashlib
import json
import logging
import math


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Supported experiments
EXPERIMENTS = ["synthetic", "pima"]

#: Keys left out of the configuration hash
UNHASHED_KEYS = ["output_dir", "input_csv", "n_jobs"]

#: Default values shared by both experiments
COMMON_DEFAULTS = {
    "seed": 0,
    "n_seeds": 1,
    "rho": 0.995,
    "n_per_class": 2000,
    "input_csv": None,
    "output_dir": "dcc_output",
    "bandwidth_scale": 10.0,
    "bandwidth_exponent": -0.51,
    "bandwidth_rule": "relative",
    "width_const": 4.0,
    "grid_resolution": 256,
    "sobol_points": 65536,
    "penalty_weight": 0.1,
    "penalty_bins": 16,
    "tau": 1.0,
    "n_jobs": 1,
    "platt_max_iters": 100,
    "platt_tol": 1e-10,
    "logreg_l2": None,
    "gnb_var_floor": 1e-9,
    "region_extent": 4.0,
    "region_resolution": 101,
    "probe_resolution": 64,
}

#: Default values of each experiment
EXPERIMENT_DEFAULTS = {
    "synthetic": {
        "modes": ["oracle_normal", "pooled", "per_class"],
        "smoothness_r": 2.0,
        "normalizer": "grid",
        "lr": 1e-3,
        "epochs": 500,
        "batch_size": 256,
    },
    "pima": {
        "modes": ["per_class"],
        "smoothness_r": 12.0,
        "normalizer": "sobol",
        "lr": 8e-4,
        "epochs": 700,
        "batch_size": 128,
    },
}


class ExperimentConfig:
    """
    Validated experiment settings.

    Attributes:
        experiment (str): synthetic or pima.
        seed (int): seed of the first run.
        n_seeds (int): number of consecutive seeds to run.
        modes (List[str]): marginal modes of the copula classifier.
        rho (float): correlation of the synthetic classes.
        n_per_class (int): synthetic rows per class.
        input_csv (str): PIMA CSV file.
        output_dir (str): directory receiving the reports.
        bandwidth_scale (float): KDE bandwidth scale.
        bandwidth_exponent (float): exponent of the sample count.
        bandwidth_rule (str): relative, absolute or silverman.
        smoothness_r (float): smoothness used by the network width.
        width_const (float): network width constant.
        normalizer (str): grid or sobol.
        grid_resolution (int): grid points per axis.
        sobol_points (int): number of Sobol points.
        penalty_weight (float): weight of the uniform-marginal penalty.
        penalty_bins (int): penalty bins per axis.
        lr (float): Adam learning rate.
        epochs (int): training epochs.
        batch_size (int): minibatch size.
        tau (float): temperature of the copula term.
        n_jobs (int): processes used to train the per-class copulas.
        platt_max_iters (int): Platt Newton iterations.
        platt_tol (float): Platt gradient tolerance.
        logreg_l2 (float): logistic regression penalty, None for 1 / n_fit.
        gnb_var_floor (float): relative variance floor of naive Bayes.
        region_extent (float): half width of the decision region grid.
        region_resolution (int): decision region points per axis.
        probe_resolution (int): copula probe points per axis.
    """

    def __init__(self, experiment: str = "synthetic"):
        self.experiment = experiment
        for key, value in COMMON_DEFAULTS.items():
            setattr(self, key, value)
        for key, value in EXPERIMENT_DEFAULTS[experiment].items():
            setattr(self, key, list(value) if isinstance(value, list)
                    else value)

    def keys(self):
        return ["experiment"] + sorted(
            list(COMMON_DEFAULTS) + list(EXPERIMENT_DEFAULTS[self.experiment]))

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in self.keys()}


# Validation ==================================================================

def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_real(value) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)
            and math.isfinite(value))


def _int_at_least(low):
    def check(value):
        if not _is_int(value) or value < low:
            return f"must be an integer >= {low}"
    return check


def _positive_real(value):
    if not _is_real(value) or value <= 0.0:
        return "must be a positive number"


def _nonnegative_real(value):
    if not _is_real(value) or value < 0.0:
        return "must be a nonnegative number"


def _real(value):
    if not _is_real(value):
        return "must be a finite number"


def _one_of(options):
    def check(value):
        if value not in options:
            return f"must be one of {', '.join(options)}"
    return check


def _optional_string(value):
    if value is not None and not isinstance(value, str):
        return "must be a string"


def _string(value):
    if not isinstance(value, str) or not value:
        return "must be a non-empty string"


def _rho(value):
    if not _is_real(value) or abs(value) >= 1.0:
        return "must lie in (-1, 1)"


def _modes(value):
    names = [m.value for m in MarginalMode]
    if not isinstance(value, list) or not value:
        return "must be a non-empty list"
    for mode in value:
        if mode not in names:
            return f"unknown mode '{mode}', expected one of {', '.join(names)}"
    if len(set(value)) != len(value):
        return "must not repeat a mode"


def _optional_nonnegative(value):
    if value is not None:
        return _nonnegative_real(value)


#: Validator of every key; each returns None or an error message
VALIDATORS = {
    "seed": _int_at_least(0),
    "n_seeds": _int_at_least(1),
    "modes": _modes,
    "rho": _rho,
    "n_per_class": _int_at_least(3),
    "input_csv": _optional_string,
    "output_dir": _string,
    "bandwidth_scale": _positive_real,
    "bandwidth_exponent": _real,
    "bandwidth_rule": _one_of(BANDWIDTH_RULES),
    "smoothness_r": _positive_real,
    "width_const": _positive_real,
    "normalizer": _one_of(["grid", "sobol"]),
    "grid_resolution": _int_at_least(1),
    "sobol_points": _int_at_least(1),
    "penalty_weight": _nonnegative_real,
    "penalty_bins": _int_at_least(1),
    "lr": _positive_real,
    "epochs": _int_at_least(1),
    "batch_size": _int_at_least(1),
    "tau": _nonnegative_real,
    "n_jobs": _int_at_least(1),
    "platt_max_iters": _int_at_least(1),
    "platt_tol": _positive_real,
    "logreg_l2": _optional_nonnegative,
    "gnb_var_floor": _positive_real,
    "region_extent": _positive_real,
    "region_resolution": _int_at_least(2),
    "probe_resolution": _int_at_least(1),
}


def validate_config(raw_text: str, overrides: dict = None) \
        -> ExperimentConfig:
    """Parses a JSON configuration document

    An empty document gives the default synthetic configuration. Values of
    `overrides` that are not None replace the values of the document.

    Args:
        raw_text (str): JSON object, possibly empty
        overrides (dict, optional): Values given on the command line

    Raises:
        ConfigError: On malformed JSON, unknown keys or invalid values; the
            error names the offending key

    Returns:
        ExperimentConfig: Validated configuration
    """
    doc = {}
    if raw_text is not None and raw_text.strip():
        try:
            doc = json.loads(raw_text)
        except json.JSONDecodeError as ex:
            raise ConfigError("config", f"malformed JSON ({ex})")
        if not isinstance(doc, dict):
            raise ConfigError("config", "document must be a JSON object")
    if overrides:
        doc.update({k: v for k, v in overrides.items() if v is not None})

    experiment = doc.get("experiment", "synthetic")
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment",
                          f"must be one of {', '.join(EXPERIMENTS)}")
    config = ExperimentConfig(experiment)
    for key, value in doc.items():
        if key == "experiment":
            continue
        if key not in VALIDATORS:
            raise ConfigError(key, "unknown key")
        message = VALIDATORS[key](value)
        if message is not None:
            raise ConfigError(key, message)
        setattr(config, key, list(value) if isinstance(value, list)
                else value)
    if config.normalizer == "grid" and config.grid_resolution < \
            config.penalty_bins:
        raise ConfigError("grid_resolution",
                          "must be at least penalty_bins")
    logger.debug(f"config,{experiment},Configuration validated")
    return config


def config_hash(config: ExperimentConfig) -> str:
    """SHA-256 of the sorted-key JSON of `config` without the run location
    keys"""
    doc = {k: v for k, v in config.to_dict().items()
           if k not in UNHASHED_KEYS}
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
