class MasktuneError(Exception):
    """Base class for trainer/server errors."""


class SpecError(MasktuneError):
    """Invalid training specification."""


class DatasetError(MasktuneError):
    """Unusable dataset: unreadable, empty, or too many misaligned examples."""
