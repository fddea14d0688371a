"""Typed exceptions shared across the package."""


class ScoremhError(Exception):
    """Base class for all package errors."""


class DimensionError(ScoremhError):
    """Array or model dimensions do not match."""


class ArgumentError(ScoremhError):
    """Invalid argument value (counts, fractions, schedule shapes)."""


class SupportError(ScoremhError):
    """Point lies outside the support of a density."""


class CsvParseError(ScoremhError):
    """Malformed CSV input; message names the offending line."""


class TrainingError(ScoremhError):
    """Training diverged (non-finite loss or gradients)."""


class CheckpointError(ScoremhError):
    """Checkpoint file missing, malformed, or incompatible."""


class ConfigError(ScoremhError):
    """Bad experiment configuration file or preset name."""
