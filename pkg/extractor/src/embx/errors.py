"""Error types raised by the extraction pipeline."""


class EmbxError(Exception):
    """Base type for everything this package raises on purpose."""


class ConfigError(EmbxError):
    """An argument value is out of range or inconsistent."""


class ExtractError(EmbxError):
    """The checkpoint, tokenizer, or input file cannot be used."""
