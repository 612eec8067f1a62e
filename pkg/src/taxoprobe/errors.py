"""Exception hierarchy.

The CLI maps these onto exit codes: input-side problems (parsing,
validation, bad flags) exit 1, backend/transport problems exit 2.
"""


class TaxoprobeError(Exception):
    """Base class for all taxoprobe errors."""


class InputError(TaxoprobeError):
    """Invalid user input: bad values, mismatched report sets, absent mask token."""


class TaxonomyParseError(InputError):
    """Malformed taxonomy file."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class TaxonomyStructureError(InputError):
    """Structurally invalid taxonomy (cycle, self-loop)."""


class TemplateError(InputError):
    """Prompt template missing a placeholder or duplicated id."""


class BackendError(TaxoprobeError):
    """Base class for prediction-backend failures."""


class TransportError(BackendError):
    """Backend unreachable or returned a server-side failure. Retryable."""

    retryable = True


class BackendConfigError(BackendError):
    """Backend rejected the request (e.g. unknown model id). Not retryable."""

    retryable = False


class EdgeScoringError(BackendError):
    """A backend failure annotated with the edge being scored."""

    def __init__(self, parent: str, child: str, cause: Exception):
        self.parent = parent
        self.child = child
        self.cause = cause
        super().__init__(f"scoring edge ({parent}, {child}): {cause}")
