"""Hybrid first/second-order gradient histograms with globally low-rank sparse regression.

The pipeline is: :func:`h2h_descriptor` features per image, :func:`solve` for
representation coefficients of test (and training) samples, and a ridge
classifier on those coefficients.
"""

from .classifier import ClassifierWeights, LabelMatrix, fit, predict, recognition_rate
from .descriptor import H2HDescriptor, feature_matrix, h2h_descriptor
from .errors import (ConfigError, DataError, DimensionError, FormatError, H2HError,
                     NumericalError, ParameterError, ProtocolError)
from .gradients import GradientFields, gradient_fields
from .linalg import full_svd, gram_inverse, soft_threshold, svt
from .solver import SolverConfig, SolveReport, solve

__version__ = "0.1.0"

__all__ = [
    "ClassifierWeights", "ConfigError", "DataError", "DimensionError", "FormatError",
    "GradientFields", "H2HDescriptor", "H2HError", "LabelMatrix", "NumericalError",
    "ParameterError", "ProtocolError", "SolveReport", "SolverConfig", "feature_matrix",
    "fit", "full_svd", "gradient_fields", "gram_inverse", "h2h_descriptor", "predict",
    "recognition_rate", "soft_threshold", "solve", "svt",
]
