"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, MissingArtifactError -> 2,
DataError (and subclasses) -> 3.
"""


class TopicvecError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(TopicvecError):
    """Invalid configuration or usage."""


class MissingArtifactError(TopicvecError):
    """A pipeline stage was run before its upstream artifacts exist."""


class DataError(TopicvecError):
    """Malformed or inconsistent data encountered while processing."""


class CorpusFormatError(DataError):
    """Unreadable, empty, or malformed corpus input."""


class IndexMismatchError(DataError):
    """Vocabulary and corpus store disagree; one of them is stale or corrupt."""


class UnknownWordError(DataError):
    """A query word has no mentions in the index."""


class StoreFormatError(DataError):
    """Vector store bytes do not conform to the CVS1 format."""


class DegenerateAggregateError(DataError):
    """A weighted sum of vectors cancelled to zero and cannot be normalized."""
