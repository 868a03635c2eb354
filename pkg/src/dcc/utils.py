""" Utility functions of the dcc package: deep copula classifier toolkit

This submodule writes the CSV and JSON reports of the experiments with a
fixed float encoding, so that two identical runs produce byte-identical
files.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
import json
import logging
import math
import os
import numpy as np
import pandas as pd


# Python logging ==============================================================
logger = logging.getLogger(__name__)


def to_jsonable(obj):
    """Converts numpy values and non-finite floats to plain JSON values

    NaN and infinities become None.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(doc: dict, path: str):
    """Writes `doc` with sorted keys; floats use their shortest exact repr"""
    text = json.dumps(to_jsonable(doc), sort_keys=True, indent=2)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text + "\n")
    logger.debug(f"utils,{os.path.basename(path)},Written")


def write_csv(df: pd.DataFrame, path: str):
    """Writes `df` without index, floats with 17 significant digits"""
    df.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    logger.debug(f"utils,{os.path.basename(path)},Written {df.shape[0]} "
                 f"rows")
