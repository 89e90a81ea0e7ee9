"""Exception hierarchy. Each registration-level failure carries a distinct code."""


class RegistrationError(Exception):
    """Base class for all errors raised by pyramidreg."""

    code = "error"


class InputError(RegistrationError):
    """Malformed or missing input data (files, parameters)."""

    code = "input"


class ParseError(InputError):
    code = "parse"

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DofMismatchError(RegistrationError):
    code = "dof_mismatch"


class UndefinedTrimError(RegistrationError):
    """Ratio TRIM requested for a target pair at zero distance."""

    code = "undefined_trim"


class EmptyCliqueError(RegistrationError):
    code = "empty_clique"


class DegenerateConfigurationError(RegistrationError):
    code = "degenerate"


class InsufficientPairsError(DegenerateConfigurationError):
    code = "insufficient_pairs"


class EstimationFailedError(RegistrationError):
    code = "estimation_failed"


class NoCorrespondencesError(RegistrationError):
    code = "no_correspondences"


class RegistrationFailedError(RegistrationError):
    """Every candidate transform failed; ``records`` holds per-layer diagnostics."""

    code = "registration_failed"

    def __init__(self, message, records=None):
        super().__init__(message)
        self.records = records or []
