"""Exception hierarchy shared by every layer of the application.

Each class carries the process exit code the CLI uses when the error escapes a
subcommand: 2 for configuration problems, 3 for numeric aborts.
"""


class AmodError(Exception):
    """Base class for all application errors."""

    exit_code: int = 1


class ConfigError(AmodError):
    """Invalid or inconsistent configuration."""

    exit_code = 2


class ScenarioError(ConfigError):
    """Scenario description violates its invariants."""


class ArgumentError(AmodError, ValueError):
    """Argument outside the accepted range."""

    exit_code = 2


class DimensionError(AmodError, ValueError):
    """Tensor or matrix shapes do not agree."""


class DomainError(AmodError, ValueError):
    """Value outside the mathematical domain of a function."""


class DegenerateRowError(AmodError, ValueError):
    """Softmax row with every entry masked out."""


class ContractError(AmodError):
    """Caller broke an API precondition."""


class DegenerateDegreeError(AmodError, ValueError):
    """Node with zero degree in a normalization."""


class ConnectivityError(AmodError):
    """Graph is not connected."""


class ActionError(AmodError, ValueError):
    """Rebalancing action is not a valid simplex vector."""


class EpisodeCompleteError(AmodError):
    """Step requested past the episode horizon."""


class InstanceTooLargeError(AmodError):
    """Instance exceeds the exhaustive-search size bound."""

    exit_code = 2


class NumericError(AmodError, ArithmeticError):
    """Non-finite value or failed numeric routine."""

    exit_code = 3

    def __init__(self, message: str, dump_path: str | None = None):
        super().__init__(message)
        self.dump_path = dump_path
