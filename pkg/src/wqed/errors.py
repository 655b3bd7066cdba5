"""Exception types shared across the package."""


class WqedError(Exception):
    """Base class for all package-specific errors."""


class DimensionCapError(WqedError):
    """Requested Hilbert space exceeds the configured dimension cap."""

    def __init__(self, dim: int, cap: int):
        self.dim = dim
        self.cap = cap
        super().__init__(
            f"Hilbert-space dimension {dim} exceeds the cap of {cap} states; "
            f"raise the cap explicitly if this allocation is intended"
        )


class NonUniqueSteadyStateError(WqedError):
    """The Liouvillian has a (numerically) degenerate stationary manifold."""

    def __init__(self, gap: float, tol: float):
        self.gap = gap
        self.tol = tol
        super().__init__(
            f"stationary state is not unique: second eigenvalue magnitude "
            f"{gap:.3e} is below the degeneracy tolerance {tol:.3e}"
        )


class IntegrationFailureError(WqedError):
    """Adaptive integration failed (step-size underflow or solver abort)."""

    def __init__(self, time: float, message: str = ""):
        self.time = time
        super().__init__(f"integration failed at t = {time:.6g}: {message}")


class WeakDriveError(WqedError):
    """Drive strength violates the weak-drive requirement of the reduction."""


class SingularEliminationError(WqedError):
    """A decay-free excited state makes the non-Hermitian block singular."""

    def __init__(self, state_index: int):
        self.state_index = state_index
        super().__init__(
            f"excited basis state {state_index} has no decay channel; "
            f"the non-Hermitian block is singular"
        )


class PhononTruncationError(WqedError):
    """Population reached the top of the truncated phonon ladder."""

    def __init__(self, time: float, population: float, threshold: float):
        self.time = time
        self.population = population
        super().__init__(
            f"top two phonon levels hold {population:.3%} population at "
            f"t = {time:.6g} (threshold {threshold:.3%}); raise the cutoff"
        )


class ConfigError(WqedError):
    """Scenario configuration could not be parsed or validated."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}" + (f", col {column}" if column is not None else "") + f": {message}"
        super().__init__(message)
