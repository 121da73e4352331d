"""Exception types shared across the package.

The CLI maps ParameterError to exit code 2 and DataFormatError (plus
ordinary OSError) to exit code 3.
"""


class ParameterError(ValueError):
    """A parameter is outside its documented domain."""


class DataFormatError(RuntimeError):
    """An input file does not conform to its documented text format."""
