class CriterionDivergent(ValueError):
    """The integrability criterion fails, so no subordinator realizes the
    requested jump scale.  This is a mathematical answer, not a bug."""

    def __init__(self, what: str = "construction"):
        super().__init__(
            f"criterion divergent: {what} refused; the integral of "
            "psi_c(s)/(s psi_j(s)) over (0, 1] is infinite, so no subordinator "
            "of the diffusion has a jump kernel comparable to 1/(V psi_j)"
        )
        self.what = what


class ScaleBoundViolation(AssertionError):
    """A grid check of the two-sided power bounds failed."""


class JumpKernelDivergence(ValueError):
    """The subordination integral for the jump kernel does not converge."""
