"""Exception hierarchy shared by all otokit modules.

Every error carries a stable machine-readable ``code`` so the HTTP layer
can map exceptions to JSON error bodies without string matching.
"""


class OtokitError(Exception):
    """Base class for all otokit errors."""

    code = "error"

    def __init__(self, message: str, details: dict | None = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class RecordInvalidError(OtokitError):
    """A record failed domain validation; ``details['violations']`` lists why."""

    code = "validation-failure"

    def __init__(self, violations: list[str]):
        super().__init__(
            "record failed validation: " + "; ".join(violations),
            {"violations": list(violations)},
        )
        self.violations = list(violations)


class KeyMismatchError(OtokitError):
    code = "key-mismatch"


class IncompleteDataError(OtokitError):
    code = "incomplete-data"


class UndefinedMetricError(OtokitError):
    code = "undefined-metric"


class EmptyChartError(OtokitError):
    code = "empty-chart"


class AlreadyExistsError(OtokitError):
    code = "already-exists"


class NotFoundError(OtokitError):
    code = "not-found"


class AuthenticationFailure(OtokitError):
    code = "authentication-failure"


class WeakPasswordError(OtokitError):
    code = "password-policy"


class StoreStateError(OtokitError):
    """Raised when an operation requires an open store handle."""

    code = "store-state"


class SchemaVersionError(OtokitError):
    """Store file was written by a newer schema than this build understands."""

    code = "schema-version"
