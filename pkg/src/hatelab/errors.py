"""Exception types shared across the package."""


class HatelabError(Exception):
    """Base class for all package errors."""


class SchemaError(HatelabError, ValueError):
    """A dataset file is missing a required column."""


class DataError(HatelabError, ValueError):
    """Malformed or inconsistent data content."""


class ParseError(HatelabError, ValueError):
    """A text resource (e.g. an embedding file) could not be parsed."""


class ConfigError(HatelabError, ValueError):
    """Invalid configuration or dimension mismatch."""


class ShapeError(HatelabError, ValueError):
    """Tensor shapes do not conform for an operation."""


class EncodingError(HatelabError, ValueError):
    """Token ids outside the model vocabulary."""


class StateError(HatelabError, RuntimeError):
    """An object is in the wrong mode for the requested operation."""


class TrainingError(HatelabError, RuntimeError):
    """Training produced a non-finite loss."""
