"""Exception hierarchy shared by all modules."""


class MpcError(Exception):
    """Base class for every error raised by this package."""


class ContractViolation(MpcError, ValueError):
    """Arguments violate a documented precondition (usually dimensions)."""


class ParameterError(MpcError, ValueError):
    """A configuration or model parameter is out of its admissible range."""


class RolloutOverflow(MpcError, ArithmeticError):
    """A rollout produced a non-finite state.

    ``index`` is the time index of the first non-finite state.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"non-finite state at index {index}")


class EvaluationError(MpcError, ArithmeticError):
    """An objective or constraint evaluator returned non-finite values."""


class NoConvergence(MpcError, RuntimeError):
    pass


class NotStabilizable(MpcError, RuntimeError):
    pass


class TerminalMembershipError(MpcError, ValueError):
    """A state expected inside the terminal set lies outside of it."""


class DesignFailure(MpcError, RuntimeError):
    pass


class InitializationError(MpcError, RuntimeError):
    """No admissible extended state could be built for the initial state."""


class StepFailure(MpcError, RuntimeError):
    """A closed-loop step produced no admissible input sequence.

    ``log`` optionally carries the partial trajectory recorded so far.
    """

    def __init__(self, message, log=None):
        self.log = log
        super().__init__(message)


class OracleGuardError(MpcError, ValueError):
    """The brute-force oracle was asked for an intractable grid."""
