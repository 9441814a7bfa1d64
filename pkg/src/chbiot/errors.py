class ContractViolation(ValueError):
    """A structural assumption of the model failed.

    ``assumption`` names the violated hypothesis (e.g. ``"A7"``).
    """

    def __init__(self, assumption: str, message: str):
        self.assumption = assumption
        super().__init__(f"[{assumption}] {message}")


class NonConvergence(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")


class StepRejected(RuntimeError):
    pass


class VerificationFailure(AssertionError):
    pass
