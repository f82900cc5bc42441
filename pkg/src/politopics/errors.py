"""Exception types shared across the package.

ConfigError marks problems with run configuration (bad values, missing
configured files); DataError and its subclasses mark problems with the
content of input data. The CLI maps these to distinct exit codes.
"""


class PolitopicsError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(PolitopicsError):
    """Invalid run configuration or missing configured input path."""


class DataError(PolitopicsError):
    """Invalid or inconsistent input data."""


class SchemaError(DataError):
    """A record does not match the documented file schema."""

    def __init__(self, message, line=None, field=None):
        super().__init__(message)
        self.line = line
        self.field = field


class DuplicateIdError(DataError):
    """Two records share an id that must be unique."""


class UnknownAccountError(DataError):
    """Tweet handles that do not resolve to any known account."""

    def __init__(self, handles):
        self.handles = sorted(set(handles))
        super().__init__("unresolved account handles: %s" % ", ".join(self.handles))


class EmptyClassError(DataError):
    """A class required to have instances has none."""


class TargetTooLargeError(DataError):
    """Requested subsample size exceeds the available instances."""


class EmptyVocabularyError(DataError):
    """No token survived vocabulary pruning."""


class EmptyCorpusError(DataError):
    """An operation requires a non-empty corpus."""


class EmptyDocumentError(DataError):
    """Empty documents must be filtered out before model fitting."""


class DimensionMismatchError(DataError):
    """Vector or matrix dimensions do not agree."""


class KTooSmallError(DataError):
    """The topic count is too small for the requested operation."""


class EmptyHeldoutError(DataError):
    """Held-out evaluation requires at least one usable document."""


class EmptyReferenceError(DataError):
    """Coherence scoring requires a non-empty reference corpus."""


class LengthMismatchError(DataError):
    """Paired label lists must have equal length."""


class UnmappedTopicError(DataError):
    """Topic ids present in assignments but missing from the label map."""

    def __init__(self, topic_ids):
        self.topic_ids = sorted(set(topic_ids))
        super().__init__(
            "label map does not cover topic ids: %s"
            % ", ".join(str(t) for t in self.topic_ids)
        )
