"""Simulation and training of two-layer hybrid classifiers with binary quantum neurons."""

__version__ = "0.1.0"

from .core import Dataset, ModelWeights, Sample, SeededRng, dot, normalized_inner_product, sample_sign, sign_vector
from .model import ModelConfig, forward, predict
from .response import ResponseKind, response

__all__ = [
    "Dataset",
    "ModelConfig",
    "ModelWeights",
    "ResponseKind",
    "Sample",
    "SeededRng",
    "__version__",
    "dot",
    "forward",
    "normalized_inner_product",
    "predict",
    "response",
    "sample_sign",
    "sign_vector",
]
