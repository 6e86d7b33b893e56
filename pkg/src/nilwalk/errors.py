"""Exception taxonomy mirrored by the command line exit codes."""


class SchemaError(Exception):
    """Malformed configuration or input file (exit code 2)."""


class ResourceCeilingError(Exception):
    """Requested work exceeds the configured ceiling (exit code 3)."""


class NumericalValidationError(Exception):
    """An algebra, group, or distribution failed validation (exit code 4)."""
