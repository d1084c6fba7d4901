"""Exception types shared across the package."""


class PatchGraphError(Exception):
    """Base class for every error raised by this package."""


class InputError(PatchGraphError):
    """Missing or unusable input: absent directory, empty sequence."""


class DecodeError(InputError):
    """An image file exists but cannot be decoded."""


class FormatError(PatchGraphError):
    """A structured text file does not match its documented layout."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class GeometryError(PatchGraphError):
    """A box, patch grid or search window violates a geometric precondition."""


class ParameterError(PatchGraphError, ValueError):
    """A numeric parameter is outside its valid range."""


class NumericalError(PatchGraphError):
    """A numerical routine produced non-finite values or a failed solve."""

    def __init__(self, message, iteration=None, trace=None):
        self.iteration = iteration
        self.trace = trace
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)


class DegenerateDescriptorError(PatchGraphError):
    """A descriptor is identically zero and cannot be normalized."""
