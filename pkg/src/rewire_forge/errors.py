"""Exception hierarchy shared by every module."""


class RewireForgeError(Exception):
    """Base class for all library errors."""


class ParameterError(RewireForgeError, ValueError):
    """Invalid argument values (sizes, orders, probabilities)."""


class GraphParseError(RewireForgeError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class SamplingError(RewireForgeError):
    """A random-walk sample could not reach the requested size."""


class FeasibilityError(RewireForgeError):
    """A rewiring action violates one of its structural constraints.

    ``constraint`` names the violated rule, e.g. ``"AD-absent"``.
    """

    def __init__(self, constraint: str, message: str):
        super().__init__(f"{constraint}: {message}")
        self.constraint = constraint


class NumericError(RewireForgeError, ArithmeticError):
    """Eigen-solvers failing to converge, non-finite values."""


class ShapeError(RewireForgeError, ValueError):
    pass


class ContractError(RewireForgeError):
    """An operation was called outside of its precondition."""


class TrainingError(RewireForgeError):
    pass
