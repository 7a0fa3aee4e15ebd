"""Exception hierarchy shared across the pipeline."""


class QKEmotionError(Exception):
    """Base class for all package errors."""


class ConfigurationError(QKEmotionError, ValueError):
    """Invalid parameters or configuration values."""


class ShapeError(QKEmotionError, ValueError):
    """Array dimensions do not agree."""


class TrainingError(QKEmotionError):
    """A model cannot be fitted on the supplied data."""


class LabelingError(QKEmotionError):
    """Emotion labels cannot be derived from an intensity stream."""


class IngestionError(QKEmotionError):
    """Session data is missing channels or is malformed."""


class FormatError(QKEmotionError):
    """A persisted file is corrupt or does not match its declared layout."""


class DigestMismatchError(QKEmotionError):
    """A kernel or model was paired with data it was not computed from."""
