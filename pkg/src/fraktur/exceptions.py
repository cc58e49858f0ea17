"""Contains all the errors used in Fraktur."""


class InvalidArgumentError(Exception):

    """Used when an argument has the wrong value or shape."""


class InvalidParametersError(Exception):

    """Used when material or control parameters violate their bounds."""


class InvalidMeshError(Exception):

    """Used when a mesh or its boundary tagging is unusable."""


class SolverFailureError(Exception):

    """Used when a nonlinear or adjoint solve fails.

    Attributes:
        reason (str): What went wrong
        residual (float): The last residual reached before giving up
        step (int | None): The time step the failure occurred in
    """

    def __init__(self, reason, residual=float("nan"), step=None) -> None:
        self.reason = reason
        self.residual = residual
        self.step = step
        where = "" if step is None else f" at time step {step}"
        super().__init__(
            f"Solver failed{where}. Reason: {reason} (last residual {residual:.3e})"
        )


class InapplicableCaseError(Exception):

    """Used when a construction does not apply, e.g. the crack never moved."""


class InconclusiveError(Exception):

    """Used when a numerical experiment has too little data for a verdict."""


class ConfigError(Exception):

    """Used when a configuration file is malformed or invalid."""

    def __init__(self, field, reason) -> None:
        self.field = field
        self.reason = reason
        super().__init__(f"Invalid configuration '{field}'. Reason: {reason}")
