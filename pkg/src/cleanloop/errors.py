"""Exception hierarchy shared by all engine modules.

Every error carries a stable machine code so the HTTP layer can map module
failures to API error payloads without string matching.
"""

from __future__ import annotations


class CleanloopError(Exception):
    """Base class; ``code`` is the stable machine-readable identifier."""

    code = "internal_error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)


# --- ingestion -------------------------------------------------------------

class ParseError(CleanloopError):
    code = "parse_error"


class DuplicateId(CleanloopError):
    code = "duplicate_id"


class FormatError(CleanloopError):
    code = "format_error"


class ShapeMismatch(CleanloopError):
    code = "shape_mismatch"


class NonFiniteValue(CleanloopError):
    code = "non_finite_value"


class MissingImage(CleanloopError):
    code = "missing_image"


class DecodeError(CleanloopError):
    code = "decode_error"


class ZeroVector(CleanloopError):
    code = "zero_vector"


# --- ranking ---------------------------------------------------------------

class DegenerateDistances(CleanloopError):
    code = "degenerate_distances"


class SingleClass(CleanloopError):
    code = "single_class"


class MissingLabel(CleanloopError):
    code = "missing_label"


# --- protocol --------------------------------------------------------------

class OutOfRange(CleanloopError):
    code = "out_of_range"


class EmptyRanking(CleanloopError):
    code = "empty_ranking"


class StaleCandidate(CleanloopError):
    code = "stale_candidate"


class SessionTerminated(CleanloopError):
    code = "session_terminated"


class CorruptLog(CleanloopError):
    code = "corrupt_log"


class EmptyGrid(CleanloopError):
    code = "empty_grid"


# --- aggregation -----------------------------------------------------------

class NoAnnotators(CleanloopError):
    code = "no_annotators"


class MixedNoiseTypes(CleanloopError):
    code = "mixed_noise_types"


class UnknownId(CleanloopError):
    code = "unknown_id"


# --- statistics ------------------------------------------------------------

class DegenerateMarginals(CleanloopError):
    code = "degenerate_marginals"


class InsufficientPairableValues(CleanloopError):
    code = "insufficient_pairable_values"


class ZeroExpectedDisagreement(CleanloopError):
    code = "zero_expected_disagreement"


class AllReplicatesDegenerate(CleanloopError):
    code = "all_replicates_degenerate"


class EmptyInput(CleanloopError):
    code = "empty_input"


class ZeroAnnotated(CleanloopError):
    code = "zero_annotated"


# --- evaluation ------------------------------------------------------------

class NoPositives(CleanloopError):
    code = "no_positives"


class EmptyAfterCleaning(CleanloopError):
    code = "empty_after_cleaning"


# --- service ---------------------------------------------------------------

class UnknownDataset(CleanloopError):
    code = "unknown_dataset"


class UnknownSession(CleanloopError):
    code = "unknown_session"


class BindError(CleanloopError):
    code = "bind_error"
