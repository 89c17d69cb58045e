"""Exception hierarchy shared across the pipeline.

ConfigError maps to CLI exit code 1, every other OrcaError to exit code 2.
"""


class OrcaError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(OrcaError):
    """Invalid configuration or usage (CLI exit code 1)."""


class CorpusParseError(OrcaError):
    """A corpus document could not be parsed.

    Carries the offending object id when one is known.
    """

    def __init__(self, message: str, object_id: str | None = None):
        super().__init__(message)
        self.object_id = object_id


class EmptyCorpusError(OrcaError):
    """A corpus document parsed but contained no usable entries."""


class StaleCacheError(OrcaError):
    """On-disk cache was written by an incompatible schema version."""


class ThreatInputError(OrcaError):
    """The structured threat list violates its schema."""


class EmbeddingError(OrcaError):
    """Text could not be embedded (empty input, degenerate vector, ...)."""


class EmbeddingTransportError(EmbeddingError):
    """The external embedding service could not be reached.

    Carries an identifier for the text(s) that failed so callers can
    report which threat was being processed.
    """

    def __init__(self, message: str, text_id: str | None = None):
        super().__init__(message)
        self.text_id = text_id


class ClassifierError(OrcaError):
    """All tactic classifiers failed for a document."""


class MappingError(OrcaError):
    """A mapping branch could not produce results (e.g. empty inputs)."""


class ExtractionError(OrcaError):
    """CAPEC/CWE/CVE expansion hit an unresolvable reference."""
