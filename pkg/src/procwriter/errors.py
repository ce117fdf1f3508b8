"""Exception types shared across the package."""


class ProcwriterError(Exception):
    """Base class for all package-specific failures."""


class DatasetError(ProcwriterError):
    """A dataset file is missing, malformed, or violates the record schema."""


class PromptParseError(ProcwriterError):
    """A rendered prompt or coherence text cannot be split back into parts."""


class BackendError(ProcwriterError):
    """A generator or scorer adapter failed in an unrecoverable way."""


class ScriptError(BackendError):
    """The scripted generator was asked about a prompt it has no reply for."""


class DecodeError(ProcwriterError):
    """Decoding failed; the message carries the failing iteration index."""


class ConfigError(ProcwriterError):
    """A run configuration is invalid; raised before any work starts."""
