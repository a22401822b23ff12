"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    pass


class ShapeError(ValueError):
    pass


class DegenerateSampleError(ValueError):
    """A sample cannot be normalized or estimated from (e.g. zero spread)."""


class UndefinedStatisticError(ValueError):
    pass


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


class CheckpointError(OSError):
    pass
