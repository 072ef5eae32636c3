"""Exception types shared across the package."""


class AgentGaugeError(Exception):
    """Base class for all package errors."""


class ProtocolError(AgentGaugeError):
    """Agent/environment turn order or message discipline was violated."""


class InvalidProgramError(AgentGaugeError):
    """A bit string does not decode to a valid environment program."""


class SummabilityError(AgentGaugeError):
    """An operation required a reward-summable environment and got none."""


class EnsembleError(AgentGaugeError):
    """The requested environment ensemble cannot be built."""


class ConfigError(AgentGaugeError):
    """A run configuration file is malformed or inconsistent."""


class ExternalAgentError(AgentGaugeError):
    """An external agent process broke the wire protocol."""


class RolloutFailed(AgentGaugeError):
    """A single rollout could not be completed and must not be scored."""
