"""Exception types shared across the package."""


class NngenError(Exception):
    """Base class for all package errors."""


class StorageError(NngenError):
    """The record store could not be opened, read, or written."""


class IntegrityError(NngenError):
    """A record's hash id does not match its code; signals a caller bug."""


class NotFoundError(NngenError):
    """No record with the given id exists."""


class EmptyPoolError(NngenError):
    """No trained models exist for the requested dataset; seed the store first."""


class ExtractionError(NngenError):
    """No code could be extracted from an LLM response."""


class GenerationUnavailableError(NngenError):
    """The generation endpoint failed after all retries."""


class TransportError(NngenError):
    """A transient transport-level failure (connection, timeout)."""


class ConfigurationError(NngenError):
    """The endpoint rejected the request outright (4xx); retrying cannot help."""


class MissingDataError(NngenError):
    """A statistics query referenced a (variant, dataset) cell with no samples."""


class DegenerateInputError(NngenError):
    """Too few samples or zero variance for the requested statistic."""


class IngestionError(NngenError):
    """A fixture or records file could not be parsed."""


class TrainerUnavailableError(NngenError):
    """The training worker could not be reached."""
