"""Combine per-annotator verdicts into confirmed issues and cleaned file lists.

Candidates an annotator never reached (the stopping criterion asserts the
unseen tail is clean with the configured confidence) count as implicit "no",
so unanimous confirmation requires every annotator to have both seen and
flagged the candidate, and a strict majority of effective verdicts is needed
under majority voting. Cleaning discards confirmed irrelevant samples and
removes one member per confirmed near-duplicate pair by a seeded draw; label
errors are only counted, never removed or corrected, since dropping them
would bias scores toward models resembling the ranking encoder.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .data import DatasetManifest
from .errors import MixedNoiseTypes, NoAnnotators, UnknownId
from .protocol import NO, YES, AnnotationSession
from .rankers import CandidateRef

logger = logging.getLogger(__name__)

MAJORITY = "majority"
UNANIMOUS = "unanimous"
MODES = (MAJORITY, UNANIMOUS)

UNSEEN = "unseen"


@dataclass(frozen=True)
class VerdictTable:
    """Per-candidate verdicts, one column per annotator; missing = unseen."""

    noise_type: str
    annotators: tuple[str, ...]
    rows: Mapping[CandidateRef, Mapping[str, str]]

    @classmethod
    def from_sessions(cls, sessions: Sequence[AnnotationSession]) -> "VerdictTable":
        if not sessions:
            raise NoAnnotators("need at least one annotator session")
        noise_types = {s.noise_type for s in sessions}
        if len(noise_types) > 1:
            raise MixedNoiseTypes(f"sessions mix noise types {sorted(noise_types)}")
        # multiple sessions by one annotator merge; later verdicts win
        per_annotator: dict[str, dict[CandidateRef, str]] = {}
        for session in sessions:
            merged = per_annotator.setdefault(session.annotator_id, {})
            merged.update(session.verdict_map())
        rows: dict[CandidateRef, dict[str, str]] = {}
        for annotator, verdicts in per_annotator.items():
            for ref, verdict in verdicts.items():
                rows.setdefault(ref, {})[annotator] = verdict
        return cls(
            noise_type=noise_types.pop(),
            annotators=tuple(sorted(per_annotator)),
            rows=rows,
        )

    def effective_verdicts(self, ref: CandidateRef) -> list[str]:
        row = self.rows.get(ref, {})
        return [row.get(a, UNSEEN) for a in self.annotators]


def aggregate(
    tables: VerdictTable | Sequence[AnnotationSession], mode: str
) -> list[CandidateRef]:
    """Confirmed candidates under the given agreement mode, sorted by index."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    table = (
        tables
        if isinstance(tables, VerdictTable)
        else VerdictTable.from_sessions(list(tables))
    )
    if not table.annotators:
        raise NoAnnotators("verdict table has no annotators")
    n_annotators = len(table.annotators)
    confirmed = []
    for ref in table.rows:
        yes_votes = sum(1 for v in table.effective_verdicts(ref) if v == YES)
        if mode == UNANIMOUS:
            if yes_votes == n_annotators:
                confirmed.append(ref)
        elif yes_votes * 2 > n_annotators:
            confirmed.append(ref)
    return sorted(confirmed)


@dataclass(frozen=True)
class CleanReport:
    dataset: str
    mode: str
    confirmed_irrelevant: tuple[str, ...]
    confirmed_duplicate_pairs: tuple[tuple[str, str], ...]
    removed_duplicates: tuple[str, ...]
    label_error_count: int
    label_error_prevalence: float
    cleaned_ids: tuple[str, ...]
    seed: int

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "mode": self.mode,
            "confirmed_irrelevant": list(self.confirmed_irrelevant),
            "confirmed_duplicate_pairs": [list(p) for p in self.confirmed_duplicate_pairs],
            "removed_duplicates": list(self.removed_duplicates),
            "label_error_count": self.label_error_count,
            "label_error_prevalence": self.label_error_prevalence,
            "cleaned_ids": list(self.cleaned_ids),
            "seed": self.seed,
        }


def _validate_ids(ids: Iterable[str], known: set[str]) -> None:
    for sid in ids:
        if sid not in known:
            raise UnknownId(f"id {sid!r} is not in the manifest")


def build_clean_list(
    manifest: DatasetManifest,
    confirmed_irrelevant: Iterable[str],
    confirmed_pairs: Sequence[tuple[str, str]],
    seed: int,
    *,
    mode: str = UNANIMOUS,
    label_error_count: int = 0,
) -> CleanReport:
    """Deterministic cleaned file list.

    Confirmed irrelevant samples go first. Confirmed pairs are then grouped
    into connected components over the samples that survived; a two-sample
    component loses one member by a seeded draw, and a chained component of
    three or more (the pair treatment assumes at most two views per object)
    keeps a single drawn member with a warning. One draw is consumed per
    acted-on component, in first-appearance order of the pairs, so equal
    seeds reproduce identical lists.
    """
    known = set(manifest.ids)
    irrelevant = set(confirmed_irrelevant)
    _validate_ids(irrelevant, known)
    for a, b in confirmed_pairs:
        _validate_ids((a, b), known)

    removed = set(irrelevant)
    survivors_edges = [
        (a, b) for a, b in confirmed_pairs if a not in removed and b not in removed
    ]

    # union-find over pair members, components ordered by first appearance
    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    order: list[str] = []
    for a, b in survivors_edges:
        for node in (a, b):
            if node not in parent:
                parent[node] = node
                order.append(node)
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    components: dict[str, list[str]] = {}
    for node in order:
        components.setdefault(find(node), []).append(node)

    rng = np.random.default_rng(seed)
    removed_duplicates: list[str] = []
    for root in dict.fromkeys(find(n) for n in order):
        members = components[root]
        if len(members) > 2:
            logger.warning(
                "confirmed near-duplicate pairs chain into a component of %d "
                "samples (%s); keeping one member",
                len(members),
                members,
            )
        keep = members[int(rng.integers(len(members)))]
        removed_duplicates.extend(m for m in members if m != keep)

    removed.update(removed_duplicates)
    cleaned = tuple(sid for sid in manifest.ids if sid not in removed)
    return CleanReport(
        dataset=manifest.name,
        mode=mode,
        confirmed_irrelevant=tuple(sorted(irrelevant)),
        confirmed_duplicate_pairs=tuple(tuple(p) for p in confirmed_pairs),
        removed_duplicates=tuple(removed_duplicates),
        label_error_count=label_error_count,
        label_error_prevalence=label_error_count / len(manifest),
        cleaned_ids=cleaned,
        seed=seed,
    )


def estimate_label_error_prevalence(
    confirmed_label_errors: Iterable[str], manifest: DatasetManifest
) -> float:
    """Fraction of manifest samples with a confirmed wrong label; labels stay put."""
    ids = set(confirmed_label_errors)
    _validate_ids(ids, set(manifest.ids))
    return len(ids) / len(manifest)


def write_clean_list(report: CleanReport, manifest: DatasetManifest, path: str | Path) -> None:
    """Plain-text file list: one retained path per line, manifest order."""
    path_of = {rec.id: rec.path for rec in manifest.samples}
    with Path(path).open("w", encoding="utf-8") as fh:
        for sid in report.cleaned_ids:
            fh.write(path_of[sid] + "\n")


def write_clean_report(report: CleanReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8")
