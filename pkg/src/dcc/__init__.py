"""Top-level module of the dcc package: deep copula classifier toolkit.

The package implements a generative classifier combining per-class marginal
estimators with a positive neural network normalized into a copula density,
Platt calibration, reference baselines and the command line runner of the
synthetic dependence and PIMA experiments.

LICENSE
=======

This code is in the public domain, and copyright and related rights in the
work worldwide are waived through the CC0 1.0 Universal Public Domain
Dedication. This code is distributed in the hope that it will be useful, but
WITHOUT ANY WARRANTY; without even the implied warranty of MERCHANTABILITY or
FITNESS FOR A PARTICULAR PURPOSE. See
https://creativecommons.org/publicdomain/zero/1.0/ for more details.

DISCLAIMER
==========

The authors assume no responsibility whatsoever for use by other parties of
the Software, its source code, documentation or compiled executables, and make
no guarantees, expressed or implied, about its quality, reliability, or any
other characteristic.

"""

__author__ = 'dcc developers'
__project__ = 'dcc'
__version__ = '2026.10'

from .core import *
from .marginals import MarginalMode

import dcc.datasets
import dcc.marginals
import dcc.nn_core
import dcc.copula
import dcc.classifier
import dcc.calibration
import dcc.metrics
import dcc.baselines
import dcc.config
import dcc.utils
