"""Exception types shared across the package."""


class BalancedVRPError(Exception):
    pass


class ParseError(BalancedVRPError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructureError(BalancedVRPError, ValueError):
    """The file parsed but describes an incomplete or inconsistent instance."""


class UnsupportedFormatError(BalancedVRPError, ValueError):
    pass


class InfeasibleInstanceError(BalancedVRPError, ValueError):
    pass


class CapabilityError(BalancedVRPError, RuntimeError):
    """The request exceeds what the chosen method can handle at this size."""


class DegenerateInputError(BalancedVRPError, ValueError):
    pass


class DimensionError(BalancedVRPError, ValueError):
    pass


class UsageError(BalancedVRPError, ValueError):
    pass
