"""Exception types shared across the package."""


class BpnmfError(Exception):
    """Base class; ``code`` is a short machine-readable identifier."""

    code = "error"

    def __init__(self, code: str | None = None, message: str = ""):
        if code is not None:
            self.code = code
        self.message = message
        super().__init__(f"{self.code}: {message}" if message else self.code)


class ValidationError(BpnmfError, ValueError):
    code = "invalid-input"


class FormatError(BpnmfError, ValueError):
    code = "format-mismatch"


class ContractViolation(BpnmfError, RuntimeError):
    """Raised when a sampler state leaves the domain its invariants guarantee."""

    code = "contract-violation"
