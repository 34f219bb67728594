"""Exception types shared across the package."""


class UnsupportedConfigurationError(ValueError):
    """A mesh/space/boundary-condition combination the package does not build."""


class UnsupportedLimitError(ValueError):
    """Boundary-condition family without a standard biharmonic limit."""


class SingularSystemError(RuntimeError):
    """Factorization of a singular (unshifted) system was attempted."""


class AssemblyError(RuntimeError):
    """Density evaluation failed; carries the offending element index."""

    def __init__(self, element: int, message: str):
        super().__init__(f"element {element}: {message}")
        self.element = element


class ConvergenceError(RuntimeError):
    """Iterative eigensolver ran out of iterations; partial results attached."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial
