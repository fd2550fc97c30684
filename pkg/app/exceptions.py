# app/exceptions.py


class VortexKitError(Exception):
    """Base class for every error raised by the toolkit."""


class ConfigError(VortexKitError):
    """Scenario file or numerical parameters violate the schema or the standing assumptions."""


class DomainError(VortexKitError, ValueError):
    """A point, curve or operation is not admissible for the domain."""


class SolverError(VortexKitError):
    """A linear system arising from a Laplace solve is singular or ill-conditioned."""


class EvaluationError(VortexKitError):
    """A harmonic evaluator was queried where it cannot deliver accurate values."""


class ClearanceError(EvaluationError):
    def __init__(self, distance: float, clearance: float):
        self.distance = float(distance)
        self.clearance = float(clearance)
        super().__init__(
            f"Evaluation point at boundary distance {self.distance:.3e} "
            f"is inside the clearance {self.clearance:.3e}."
        )


class TransportContractError(VortexKitError):
    def __init__(self, total_f: float, total_g: float):
        self.total_f = float(total_f)
        self.total_g = float(total_g)
        super().__init__(
            f"Signed W1 needs equal total masses, got {self.total_f!r} and {self.total_g!r}."
        )


class SeparationViolation(VortexKitError):
    """Stop signal: a separation monitor fell below delta/2.

    `condition` is one of "C5-pair", "C5-boundary", "C12-pair", "C12-boundary".
    """

    def __init__(self, condition: str, report):
        self.condition = condition
        self.report = report
        super().__init__(f"Separation condition {condition} violated: {report}")


class PartialStepError(VortexKitError):
    """An RK stage hit a stop signal; `last_good` is the state at the start of the step."""

    def __init__(self, last_good, cause: Exception):
        self.last_good = last_good
        self.cause = cause
        super().__init__(f"Step aborted at t={getattr(last_good, 't', float('nan'))}: {cause}")
