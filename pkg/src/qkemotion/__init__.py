"""Fidelity quantum-kernel SVM pipeline for emotion classification from wearable signals."""

from .featuremap import EncodingConfig, build_encoding_circuit, encode
from .kernel import GramMatrix, gram_matrix, kernel_value, validate_gram
from .svm import SvmConfig, SvmModel, decision_function, predict, train

__all__ = [
    "EncodingConfig",
    "GramMatrix",
    "SvmConfig",
    "SvmModel",
    "build_encoding_circuit",
    "decision_function",
    "encode",
    "gram_matrix",
    "kernel_value",
    "predict",
    "train",
    "validate_gram",
]

__version__ = "0.1.0"
