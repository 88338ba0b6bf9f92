"""Exception types shared across the package."""


class InfoMechError(Exception):
    """Base class for all package-specific errors."""


class DomainError(InfoMechError):
    """A numeric argument is outside its legal range (e.g. a probability not in [0,1])."""


class ZeroProbabilityInformation(InfoMechError):
    """A state subset used for conditioning has zero (or empty) prior probability."""


class ZeroProbabilitySignal(InfoMechError):
    """A signal combination can never occur under the joint signal model."""


class TooLargeToEnumerate(InfoMechError):
    """An exhaustive enumeration would exceed the configured cap."""


class TooManyAgentsForExact(InfoMechError):
    """Exact coalition enumeration was requested above the agent-count cap."""


class NotRealizable(InfoMechError):
    """A coalition-probability table has entries on the boundary {0,1} and cannot be realized."""


class ScenarioFormatError(InfoMechError):
    """A scenario (or game/table) document failed validation.

    `path` points at the offending field, e.g. ``agents[1].stochastic.a[0].prob``.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
