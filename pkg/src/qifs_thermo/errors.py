"""Exception hierarchy shared by all modules."""


class QifsError(Exception):
    """Base class for every error raised by the library."""


class ValidationError(QifsError, ValueError):
    """Input does not satisfy a structural invariant."""


class NotNormalized(ValidationError):
    """A Kraus family that must satisfy sum K_i^* K_i = I does not."""


class DegenerateBranch(QifsError):
    """tr(V_i rho V_i^*) vanishes on a branch that still carries weight."""

    def __init__(self, index, trace, weight):
        self.index = index
        self.trace = trace
        self.weight = weight
        super().__init__(
            f"branch {index} is degenerate: tr(V rho V*)={trace:.3e} "
            f"with weight {weight:.3e}"
        )


class CapExceeded(QifsError):
    """Word enumeration would exceed the configured cap."""


class NonConvergence(QifsError):
    """An iteration hit max_iter without reaching its tolerance."""

    def __init__(self, message, residual=float("nan"), iterations=0):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")


class ZeroImage(QifsError):
    """The Ruelle operator annihilates the seed and the full-rank state."""


class DegeneratePotential(QifsError):
    """A logarithm in the pressure functional has a nonpositive argument."""


class CoordinateDegenerate(QifsError):
    """The coordinate-form ratio is undefined or nonpositive."""


class Reducible(QifsError):
    """A stochastic matrix failed the irreducibility test."""


class EmbeddingDegenerate(ValidationError):
    """A stochastic or positive matrix has a zero entry where logs are needed."""


class PreconditionUnmet(QifsError):
    """None of the applicability conditions of a construction holds."""


class Infeasible(QifsError):
    """No candidate satisfies the cost constraint."""
