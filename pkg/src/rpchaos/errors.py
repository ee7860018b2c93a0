"""Exception types shared across the package."""


class RpcError(Exception):
    """Base class for all package errors."""


class ConfigError(RpcError, ValueError):
    """Invalid configuration, model specification or run parameters."""


class InvalidPartitionError(RpcError, ValueError):
    pass


class DegreeOverflowError(RpcError, ValueError):
    """A multi-index or polynomial degree exceeds what a structure covers."""


class ClosureError(RpcError):
    """A triple-product lookup fell outside the stored index set."""


class NumericalFailure(RpcError):
    """Base for failures that abort a run with partial output (exit code 3)."""


class SingularHankelError(NumericalFailure):
    """Cholesky of a moment (or evolved Gram) matrix failed.

    Attributes
    ----------
    index : int
        Graded position of the offending pivot.
    value : float
        Pivot value (squared Schur complement if it went non-positive).
    """

    def __init__(self, index, value, lambda_min=None, message=None):
        self.index = int(index)
        self.value = float(value)
        self.lambda_min = lambda_min
        if message is None:
            message = f"non-positive-definite matrix: pivot {self.index} = {self.value:.3e}"
            if lambda_min is not None:
                message += f" (lambda_min = {lambda_min:.3e})"
        super().__init__(message)


class DivergedPathError(NumericalFailure):
    def __init__(self, path, time):
        self.path = int(path)
        self.time = float(time)
        super().__init__(f"path {self.path} diverged (non-finite state) at t = {self.time:.6g}")


class DegenerateVarianceError(RpcError, ValueError):
    pass
