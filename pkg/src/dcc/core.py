""" Core definitions of the dcc package: deep copula classifier toolkit

This submodule holds the constants shared by the rest of the package, the
exception hierarchy and the seeded random number helpers used by the data
generators, the network initializers and the minibatch shufflers.

See license and disclaimer at the top level directory of this project.

"""

# Imports =====================================================================
import logging
import math
import numpy as np


# Python logging ==============================================================
logger = logging.getLogger(__name__)

# CONSTANTS ===================================================================

#: Floor applied to densities before taking logarithms
EPS = 1e-12

#: Column names of the PIMA Indians Diabetes CSV, in file order
PIMA_COLUMNS = ["Pregnancies", "Glucose", "BloodPressure", "SkinThickness",
                "Insulin", "BMI", "DiabetesPedigreeFunction", "Age",
                "Outcome"]

#: Name of the label column of the PIMA CSV
PIMA_LABEL = "Outcome"

#: PIMA columns where a literal zero encodes a missing measurement
PIMA_ZERO_AS_MISSING = ["Glucose", "BloodPressure", "SkinThickness",
                        "Insulin", "BMI"]

#: Fraction of each class sent to the test split
TEST_RATIO = 0.30

#: Fraction of each class' training rows carved out for calibration
CAL_RATIO = 0.15

#: Lower winsorization quantile (upper one is 1 - WINSOR_Q)
WINSOR_Q = 0.005

#: Split names as written to the split audit CSV
SPLIT_NAMES = ["fit", "cal", "test"]

#: Highest dimension supported by the Sobol direction numbers (Joe-Kuo table
#: shipped with scipy.stats.qmc)
SOBOL_MAX_DIM = 21201

#: Largest number of points accepted for a tensor grid normalizer
GRID_MAX_POINTS = 2 ** 24


# Exceptions ==================================================================

class Error(Exception):
    """Base class for exceptions in this package.

    Attributes:
        message -- explanation of the error
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class DatasetError(Error):
    """Exception raised when a dataset cannot be built or parsed."""
    pass


class SplitError(Error):
    """Exception raised when a split plan cannot be built."""
    pass


class PreprocessError(Error):
    """Exception raised when preprocessing statistics cannot be learned."""
    pass


class MarginalError(Error):
    """Exception raised when a marginal estimator cannot be fitted."""
    pass


class ShapeError(Error):
    """Exception raised on inconsistent array shapes."""
    pass


class NormalizerError(Error):
    """Exception raised when a copula normalizer cannot be built or used."""
    pass


class StaleNormalizerError(NormalizerError):
    """Exception raised when a cached normalizer does not match the current
    network parameters."""
    pass


class PenaltyBinError(Error):
    """Exception raised when a penalty bin holds no normalizer point."""
    pass


class TrainingError(Error):
    """Exception raised when copula training produces a non-finite loss.

    Attributes:
        message -- explanation of the error
        diagnostic -- dictionary describing the offending batch
    """

    def __init__(self, message: str, diagnostic: dict = None):
        super().__init__(message)
        self.diagnostic = diagnostic if diagnostic is not None else {}


class CalibrationError(Error):
    """Exception raised when a Platt calibrator cannot be fitted.

    Attributes:
        message -- explanation of the error
        trace -- list of (iteration, loss, gradient norm) tuples
    """

    def __init__(self, message: str, trace: list = None):
        super().__init__(message)
        self.trace = trace if trace is not None else []


class MetricError(Error):
    """Exception raised when a metric is undefined for the given input."""
    pass


class ConfigError(Error):
    """Exception raised for invalid experiment configurations.

    Attributes:
        key -- configuration key that was rejected
        message -- explanation of the error
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class StageError(Error):
    """Exception raised by the experiment runners when a stage fails.

    Attributes:
        stage -- name of the failing stage
        cause -- original exception
    """

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"Stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


# Random numbers ==============================================================

def make_rng(seed: int) -> np.random.Generator:
    """Returns a counter-based (Philox) generator for `seed`

    Args:
        seed (int): Non-negative 64-bit seed

    Returns:
        np.random.Generator: Generator backed by a Philox bit generator
    """
    return np.random.Generator(np.random.Philox(int(seed)))


def box_muller(rng: np.random.Generator, n_pairs: int) -> np.ndarray:
    """Draws `n_pairs` pairs of independent standard normals

    The pairs are built with the Box-Muller transform from uniforms of `rng`
    so that the stream only depends on the bit generator.

    Args:
        rng (np.random.Generator): Source of uniforms
        n_pairs (int): Number of pairs

    Returns:
        np.ndarray: (n_pairs, 2) array of standard normal draws
    """
    # 1 - U lies in (0, 1], keeping the logarithm finite
    u1 = 1.0 - rng.random(n_pairs)
    u2 = rng.random(n_pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * math.pi * u2
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def round_half_up(x: float) -> int:
    """Rounds to the nearest integer with halves going up"""
    return int(math.floor(x + 0.5))
