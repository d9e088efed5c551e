"""Exception hierarchy shared by all mvil modules.

Exit-code / HTTP mapping: ConfigError, InputError (and its ShapeError
subclass) and StateError are caller mistakes (CLI exit 1, HTTP 400);
NumericError signals a non-finite value produced during computation
(CLI exit 2, HTTP 500).
"""


class MvilError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(MvilError):
    """Invalid configuration or hyperparameter value."""


class InputError(MvilError):
    """Invalid input data (files, matrices, labels)."""


class ShapeError(InputError):
    """Matrix dimensions do not conform."""


class StateError(MvilError):
    """Operation requires model state that is not present."""


class NumericError(MvilError):
    """A computation produced NaN or Inf."""
