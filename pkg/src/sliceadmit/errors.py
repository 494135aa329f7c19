"""Exception types shared across the package."""


class SliceAdmitError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleSubtractionError(SliceAdmitError):
    """Subtracting a bundle from a pool would drive some component negative."""


class InfeasibleRequestError(SliceAdmitError):
    """An operation required the requested bundle to fit the idle pool, and it does not."""


class UnknownBundleError(SliceAdmitError):
    """A bundle is not part of the catalog's bundle set."""


class UnknownEntryError(SliceAdmitError):
    """No catalog entry prices the given (bundle, period) pair."""


class BudgetExceededError(SliceAdmitError):
    """An exact method was asked to expand a state/outcome space above its budget."""


class ConfigValidationError(SliceAdmitError):
    """A configuration document failed validation.

    ``problems`` lists one human-readable message per offending field.
    """

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class MalformedDocumentError(SliceAdmitError):
    """A strategy or report document is structurally unreadable."""


class SchemaVersionError(SliceAdmitError):
    """A document carries a schema version this reader does not support."""
