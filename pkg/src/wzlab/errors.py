"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NotExactlyComputableError(DomainError):
    """No closed form exists for the requested quantity; use a Monte Carlo estimate."""


class NonFiniteStateError(ArithmeticError):
    """An ODE integration produced a non-finite state.

    ``node`` is the first grid node at which a non-finite value appeared and
    ``sample`` the sample index, when known.
    """

    def __init__(self, message, node=None, sample=None):
        super().__init__(message)
        self.node = node
        self.sample = sample

    def __str__(self):
        msg = super().__str__()
        if self.node is not None:
            msg += f" (first bad node {self.node})"
        if self.sample is not None:
            msg += f" (sample {self.sample})"
        return msg


class ConfigError(Exception):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
