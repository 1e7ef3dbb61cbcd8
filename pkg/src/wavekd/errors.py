"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DecodeError(ValueError):
    """An image file could not be decoded."""

    def __init__(self, path, reason):
        self.path = str(path)
        self.reason = reason
        super().__init__(f"{self.path}: {reason}")


class TrainingDivergedError(RuntimeError):
    """Raised when a training step produces a non-finite gradient."""

    def __init__(self, step, message="non-finite gradient"):
        self.step = step
        super().__init__(f"training diverged at step {step}: {message}")
