"""Unit tests for dcc.config: defaults, validation and configuration hash.

See license and disclaimer at the top level directory of this project.

"""

import json

import pytest

import dcc
import dcc.config


def test_empty_config_gives_synthetic_defaults():
    """
    Test the defaults of the synthetic experiment
    """
    # Setup
    # Exercise
    config = dcc.config.validate_config("")
    # Verify
    assert config.experiment == "synthetic"
    assert config.modes == ["oracle_normal", "pooled", "per_class"]
    assert config.lr == 1e-3
    assert config.epochs == 500
    assert config.batch_size == 256
    assert config.grid_resolution == 256
    assert config.normalizer == "grid"
    assert config.smoothness_r == 2.0
    assert config.rho == 0.995
    assert config.n_per_class == 2000
    # Cleanup -- not needed
# end test_empty_config_gives_synthetic_defaults


def test_pima_defaults():
    """
    Test the defaults of the PIMA experiment
    """
    # Setup
    # Exercise
    config = dcc.config.validate_config('{"experiment": "pima"}')
    # Verify
    assert config.modes == ["per_class"]
    assert config.lr == 8e-4
    assert config.epochs == 700
    assert config.batch_size == 128
    assert config.normalizer == "sobol"
    assert config.sobol_points == 65536
    assert config.smoothness_r == 12.0
    # Cleanup -- not needed
# end test_pima_defaults


def test_invalid_values_name_their_key():
    """
    Test every rejected value reports its key
    """
    # Setup
    cases = [({"rho": 1.5}, "rho"),
             ({"batch_size": 0}, "batch_size"),
             ({"epochs": True}, "epochs"),
             ({"modes": ["pooled", "kde"]}, "modes"),
             ({"normalizer": "mc"}, "normalizer"),
             ({"unknown": 1}, "unknown"),
             ({"experiment": "iris"}, "experiment"),
             ({"grid_resolution": 8, "penalty_bins": 16}, "grid_resolution")]
    # Exercise
    # Verify
    for doc, key in cases:
        with pytest.raises(dcc.ConfigError) as excinfo:
            dcc.config.validate_config(json.dumps(doc))
        assert excinfo.value.key == key
        assert str(excinfo.value).startswith(key)
    # Cleanup -- not needed
# end test_invalid_values_name_their_key


def test_malformed_documents():
    """
    Test malformed JSON and non-object documents
    """
    # Setup
    # Exercise
    # Verify
    for text in ["{", "[1, 2]", "3"]:
        with pytest.raises(dcc.ConfigError) as excinfo:
            dcc.config.validate_config(text)
        assert excinfo.value.key == "config"
    # Cleanup -- not needed
# end test_malformed_documents


def test_overrides():
    """
    Test command line overrides replace document values, None is ignored
    """
    # Setup
    text = json.dumps({"seed": 3, "epochs": 10})
    # Exercise
    config = dcc.config.validate_config(
        text, {"seed": 7, "output_dir": None, "modes": ["pooled"]})
    # Verify
    assert config.seed == 7
    assert config.epochs == 10
    assert config.output_dir == "dcc_output"
    assert config.modes == ["pooled"]
    # Cleanup -- not needed
# end test_overrides


def test_config_hash():
    """
    Test the hash ignores the run location and follows every setting
    """
    # Setup
    base = dcc.config.validate_config("")
    moved = dcc.config.validate_config('{"output_dir": "elsewhere", '
                                       '"n_jobs": 2}')
    reseeded = dcc.config.validate_config('{"seed": 1}')
    # Exercise
    h = dcc.config.config_hash(base)
    # Verify
    assert len(h) == 64
    assert h == dcc.config.config_hash(moved)
    assert h != dcc.config.config_hash(reseeded)
    assert h == dcc.config.config_hash(dcc.config.validate_config(""))
    # Cleanup -- not needed
# end test_config_hash


def test_to_dict_lists_every_key():
    """
    Test the configuration dictionary holds every known key
    """
    # Setup
    config = dcc.config.validate_config("")
    # Exercise
    doc = config.to_dict()
    # Verify
    assert set(doc) == {"experiment"} | set(dcc.config.VALIDATORS)
    assert doc["logreg_l2"] is None
    # Cleanup -- not needed
# end test_to_dict_lists_every_key
