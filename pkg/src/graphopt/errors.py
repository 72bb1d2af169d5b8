"""Exception types shared across the package."""


class GraphoptError(Exception):
    """Base class for all package-specific errors."""


class DomainError(GraphoptError, ValueError):
    """An argument lies outside its mathematical domain."""


class NumericsError(GraphoptError, RuntimeError):
    """An iterative numerical routine failed to reach its tolerance."""


class BlowUpError(NumericsError):
    """A simulated state became non-finite."""

    def __init__(self, step: int, what: str = "state"):
        self.step = step
        super().__init__(f"non-finite {what} at step {step}")


class ModeError(GraphoptError, ValueError):
    """An operation was invoked in an incompatible simulation mode."""


class ReplicaError(GraphoptError, ValueError):
    """Not enough replicas for the requested estimator."""
