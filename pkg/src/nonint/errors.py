"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NoResonanceError(DomainError):
    """No member of an orbit family satisfies the requested resonance."""


class ResonanceMismatchError(DomainError):
    """A modulus was supplied that does not satisfy the stated resonance."""


class NotResonantError(DomainError):
    """The frequency vector is not a multiple of an integer vector."""


class IntegrationError(RuntimeError):
    """Adaptive integration failed; ``trajectory`` holds the accepted part."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory
