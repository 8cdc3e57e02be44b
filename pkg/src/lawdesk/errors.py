"""Exception types shared across the package.

File I/O failures (missing files, permission errors) are not wrapped:
plain ``OSError`` propagates from every save/load/ingest path.
"""


class LawdeskError(Exception):
    """Base class for all lawdesk errors."""


# --- index errors ---

class DuplicateDocId(LawdeskError):
    """Document id is already present in the index."""


class UnknownDocId(LawdeskError):
    """Document id is not present in the index."""


class FormatError(LawdeskError):
    """Snapshot file has a bad magic, version, or truncated layout."""


# --- vector errors ---

class DimensionMismatch(LawdeskError):
    """Vector dimension does not match the collection dimension."""


class ZeroVector(LawdeskError):
    """Zero-norm vector where a direction is required."""


# --- embedding provider errors ---

class ProviderUnavailable(LawdeskError):
    """Remote embedding endpoint unreachable, timed out, or returned non-2xx."""


class BadResponse(LawdeskError):
    """Remote endpoint answered, but the payload violates the contract."""


class EmptyText(LawdeskError):
    """Text is empty after normalization."""


# --- router errors ---

class EmptyMessage(LawdeskError):
    """Message to classify is empty after normalization."""


class MissingClass(LawdeskError):
    """Training set lacks at least one example for some intent."""


class BadHyperparameter(LawdeskError):
    """Non-positive learning rate or otherwise invalid training setting."""


# --- mining errors ---

class UnknownPositiveId(LawdeskError):
    """A positive id is absent from the corpus being mined."""


class EmptyBatch(LawdeskError):
    """Contrastive batch contains no queries."""


class NonPositiveTemperature(LawdeskError):
    """Softmax temperature must be a finite positive number."""


class DanglingId(LawdeskError):
    """Triplet references a statute id missing from the store."""


# --- evaluation errors ---

class DuplicateRanking(LawdeskError):
    """Ranked id list contains duplicates."""


class EmptyEvalSet(LawdeskError):
    """Evaluation requires at least one query."""


class EvalQueryError(LawdeskError):
    """Retrieval failed for one evaluation query; the cause is chained."""

    def __init__(self, query: str, message: str = "retrieval failed"):
        super().__init__(f"{message} for query: {query!r}")
        self.query = query


# --- orchestration errors ---

class TemplateError(LawdeskError):
    """Prompt template contains an unknown placeholder."""


class GeneratorUnavailable(LawdeskError):
    """Answer-generation endpoint unreachable or returned an error status."""
