"""Exception hierarchy.

Each class carries the CLI exit code it maps to.
"""


class ModlabError(Exception):
    exit_code = 1


class ConfigError(ModlabError, ValueError):
    """Invalid parameters or config file (exit code 2)."""

    exit_code = 2


class ParameterError(ConfigError):
    pass


class GridMismatchError(ModlabError, ValueError):
    pass


class NumericalGateError(ModlabError):
    """A resolution, coverage or truncation gate failed (exit code 3)."""

    exit_code = 3


class NyquistError(NumericalGateError):
    pass


class CoverageError(NumericalGateError):
    pass


class TruncationGateError(NumericalGateError):
    pass


class NonFiniteError(NumericalGateError, ValueError):
    pass


class IdentityFailure(ModlabError):
    """An identity check in the verification suite failed (exit code 4)."""

    exit_code = 4
