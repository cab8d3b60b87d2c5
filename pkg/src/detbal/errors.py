"""Exceptions shared across the package."""


class InputError(ValueError):
    """User-supplied data or parameters are unusable (CLI exit code 2)."""


class DegenerateActionError(RuntimeError):
    """No bin pair carries any transition mass, so the balance action is
    identically zero and there is nothing to minimize (CLI exit code 3)."""
