"""Error taxonomy shared by the library and the CLI.

Exit codes follow the CLI contract: 2 for configuration problems, 3 for
data/IO problems, 4 for numerical failures.
"""


class ToolkitError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(ToolkitError):
    """Invalid configuration: bad parameter values, incompatible models."""

    exit_code = 2


class DataError(ToolkitError):
    """Invalid or missing data: manifests, images, ground-truth files."""

    exit_code = 3


class NumericError(ToolkitError):
    """Numerical failure: singular systems, corrupted spectra, divergence."""

    exit_code = 4
