class LasnError(Exception):
    """Base class for every error raised by this package."""


class ParseError(LasnError, ValueError):
    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class LabelError(LasnError, ValueError):
    pass


class DimensionError(LasnError, ValueError):
    pass


class NumericalError(LasnError, ArithmeticError):
    pass


class LineSearchError(NumericalError):
    pass


class KernelError(LasnError, ValueError):
    """Kernel matrix violates positive semidefiniteness beyond roundoff."""


class ScaleError(LasnError, ValueError):
    """Problem too large for a desk-scale (dense, exact) computation."""


class ModelFormatError(LasnError, ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class ModelTruncatedError(ModelFormatError):
    pass
