"""cleanloop: rank candidate dataset issues, confirm them with humans under a
streak-based stopping rule, and measure what cleaning did."""

from .aggregation import CleanReport, VerdictTable, aggregate, build_clean_list
from .data import (
    DatasetManifest,
    DistanceMatrix,
    EmbeddingMatrix,
    SampleRecord,
    baseline_embed,
    load_embeddings,
    load_manifest,
    pairwise_distance,
)
from .evaluation import (
    DeltaReport,
    ScoredBinarySet,
    auprg,
    auroc,
    average_precision,
    cleaning_delta,
    ranking_vs_reference,
)
from .protocol import (
    AnnotationSession,
    StoppingParams,
    compute_n_clean,
    next_candidate,
    replay_session,
    sensitivity_sweep,
    start_session,
    submit_answer,
)
from .rankers import (
    CandidateRef,
    IssueRanking,
    rank_irrelevant,
    rank_label_errors,
    rank_near_duplicates,
)
from .stats import (
    AgreementResult,
    agreement_band,
    bootstrap_ci,
    cohen_kappa,
    krippendorff_alpha,
    paired_permutation_test,
    speed_up,
)

__version__ = "0.1.0"
