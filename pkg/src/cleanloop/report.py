"""Assemble the per-dataset statistics report.

Pulls together confirmed-issue counts under both aggregation modes,
inter-annotator agreement (pairwise kappa and overall alpha with bootstrap
CIs), annotation speed-up factors, and ranking quality against the
unanimous reference restricted to candidates every annotator saw.
External numbers are percentages rounded to one decimal; raw fractions stay
internal.
"""

from __future__ import annotations

from typing import Optional

from . import aggregation, stats
from .errors import CleanloopError
from .protocol import YES
from .rankers import NOISE_TYPES, CandidateRef
from .registry import Registry
from .stats import AgreementResult, bootstrap_ci


def pct(x: float) -> float:
    return round(100.0 * x, 1)


def _agreement_payload(result: AgreementResult, reps: int, seed: int, skipped: int) -> dict:
    return {
        "statistic": result.statistic,
        "point": result.point,
        "ci": [result.ci_low, result.ci_high],
        "band": result.band,
        "reps": reps,
        "seed": seed,
        "skipped_replicates": skipped,
    }


def agreement_stats(
    registry: Registry,
    dataset: str,
    noise_type: str,
    reps: int = stats.DEFAULT_REPS,
    level: float = stats.DEFAULT_LEVEL,
    seed: int = 0,
) -> dict:
    """Alpha across all annotators plus kappa for each annotator pair."""
    table = registry.verdict_table(dataset, noise_type)
    annotators = table.annotators
    out: dict = {"noise_type": noise_type, "annotators": list(annotators)}

    units = [
        [table.rows[ref].get(a) for a in annotators]
        for ref in sorted(table.rows)
    ]

    def alpha_stat(sampled_units: list) -> float:
        return stats.krippendorff_alpha(dict(enumerate(sampled_units))).point

    try:
        point = stats.krippendorff_alpha(dict(enumerate(units)))
        boot = bootstrap_ci(alpha_stat, units, reps=reps, level=level, seed=seed)
        out["krippendorff_alpha"] = _agreement_payload(
            point.with_ci(boot.ci_low, boot.ci_high), reps, seed, boot.skipped
        )
    except CleanloopError as exc:
        out["krippendorff_alpha"] = {"error": exc.code, "message": str(exc)}

    pairs = []
    for ai in range(len(annotators)):
        for bi in range(ai + 1, len(annotators)):
            a, b = annotators[ai], annotators[bi]
            joint = [
                (row[a], row[b])
                for ref in sorted(table.rows)
                if a in (row := table.rows[ref]) and b in row
            ]
            entry: dict = {"annotators": [a, b], "n_joint": len(joint)}
            try:
                point = stats.cohen_kappa([x for x, _ in joint], [y for _, y in joint])

                def kappa_stat(sampled: list) -> float:
                    return stats.cohen_kappa(
                        [x for x, _ in sampled], [y for _, y in sampled]
                    ).point

                boot = bootstrap_ci(kappa_stat, joint, reps=reps, level=level, seed=seed)
                entry.update(
                    _agreement_payload(
                        point.with_ci(boot.ci_low, boot.ci_high), reps, seed, boot.skipped
                    )
                )
            except CleanloopError as exc:
                entry.update({"error": exc.code, "message": str(exc)})
            pairs.append(entry)
    out["cohen_kappa_pairs"] = pairs
    return out


def speed_up_stats(registry: Registry, dataset: str) -> dict:
    """Per-session speed-up factors with micro and macro averages per noise type."""
    out: dict = {}
    for noise_type in NOISE_TYPES:
        sessions = registry.list_sessions(dataset, noise_type)
        if not sessions:
            continue
        rows = []
        total_pool = 0
        total_annotated = 0
        factors = []
        for s in sessions:
            factor = stats.speed_up(s.pool_size, s.annotated_count) if s.annotated_count else None
            rows.append(
                {
                    "annotator": s.annotator_id,
                    "session": s.session_id,
                    "pool_size": s.pool_size,
                    "annotated": s.annotated_count,
                    "fraction_annotated": s.fraction_annotated,
                    "speed_up": float(factor) if factor is not None else None,
                    "status": s.status,
                }
            )
            if factor is not None:
                total_pool += s.pool_size
                total_annotated += s.annotated_count
                factors.append(float(factor))
        out[noise_type] = {
            "sessions": rows,
            "micro_average": (total_pool / total_annotated) if total_annotated else None,
            "macro_average": (sum(factors) / len(factors)) if factors else None,
        }
    return out


def ranking_quality_stats(registry: Registry, dataset: str) -> dict:
    """Rankings scored against unanimous labels on candidates seen by all annotators."""
    from .evaluation import ranking_vs_reference

    out: dict = {}
    for noise_type in NOISE_TYPES:
        sessions = registry.list_sessions(dataset, noise_type)
        if not sessions:
            continue
        table = aggregation.VerdictTable.from_sessions(sessions)
        seen_by_all = [
            ref
            for ref in sorted(table.rows)
            if all(a in table.rows[ref] for a in table.annotators)
        ]
        if not seen_by_all:
            out[noise_type] = {"error": "no candidates annotated by all annotators"}
            continue
        confirmed = set(aggregation.aggregate(table, aggregation.UNANIMOUS))
        reference: dict[CandidateRef, bool] = {
            ref: ref in confirmed for ref in seen_by_all
        }
        try:
            quality = ranking_vs_reference(registry.ranking(dataset, noise_type), reference)
            out[noise_type] = {
                "n_reference": quality.n_reference,
                "positive_samples_pct": pct(quality.positive_fraction),
                "auroc_pct": pct(quality.auroc),
                "average_precision_pct": pct(quality.average_precision),
                "auprg_pct": pct(quality.auprg),
            }
        except CleanloopError as exc:
            out[noise_type] = {"error": exc.code, "message": str(exc)}
    return out


def issue_counts(registry: Registry, dataset: str) -> dict:
    """Confirmed-issue table under both aggregation modes, with percentages."""
    state = registry.dataset(dataset)
    n = len(state.manifest)
    table: dict = {"dataset": dataset, "size": n}
    for mode in aggregation.MODES:
        confirmed = registry.aggregate(dataset, mode)
        section = {}
        for noise_type, refs in confirmed.items():
            count = len(refs)
            denominator = n
            section[noise_type] = {"count": count, "pct": pct(count / denominator)}
        table[mode] = section
    return table


def build_report(
    registry: Registry,
    dataset: str,
    reps: int = stats.DEFAULT_REPS,
    seed: int = 0,
    noise_types: Optional[list[str]] = None,
) -> dict:
    state = registry.dataset(dataset)
    report: dict = {
        "dataset": dataset,
        "size": len(state.manifest),
        "embedding_dim": state.embeddings.d,
        "issues": issue_counts(registry, dataset),
        "speed_up": speed_up_stats(registry, dataset),
        "ranking_quality": ranking_quality_stats(registry, dataset),
        "agreement": {},
    }
    for noise_type in noise_types or NOISE_TYPES:
        if registry.list_sessions(dataset, noise_type):
            report["agreement"][noise_type] = agreement_stats(
                registry, dataset, noise_type, reps=reps, seed=seed
            )
    label_confirmed = registry.aggregate(dataset, aggregation.UNANIMOUS).get("label_error", [])
    report["label_error_prevalence_unanimous"] = pct(
        len(label_confirmed) / len(state.manifest)
    )
    return report
