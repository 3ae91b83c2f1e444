"""Exception types shared across modules, mapped to CLI exit codes."""


class ConfigError(ValueError):
    """Invalid run configuration (bad ranges, unknown presets, ...)."""


class SchemaError(ValueError):
    """A file exists but does not match its declared schema/version."""
