class ResourceLimitError(RuntimeError):
    """A requested object would exceed a configured size cap."""


class InsufficientDataError(ValueError):
    """Too few usable points for a fit."""
