"""Exception hierarchy.

Each class carries a short ``category`` string that the CLI prints as the
machine-readable error category, and an exit code.
"""


class TfcError(Exception):
    category = "error"
    exit_code = 1


class ConfigError(TfcError, ValueError):
    category = "config"
    exit_code = 3


class CalibrationError(TfcError):
    category = "calibration"
    exit_code = 3


class SchemaError(TfcError, ValueError):
    category = "schema"
    exit_code = 4


class MalformedRowError(TfcError, ValueError):
    category = "malformed"
    exit_code = 4


class DataError(TfcError, ValueError):
    """Input data unusable for the requested operation."""

    category = "data"
    exit_code = 5


class ModelFormatError(TfcError, ValueError):
    category = "model-format"
    exit_code = 6


class VocabularyMismatchError(TfcError, ValueError):
    category = "vocabulary"
    exit_code = 6
