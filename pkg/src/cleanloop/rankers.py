"""Candidate rankings for the three noise types.

Each ranker turns a distance matrix into an ordered candidate list where
earlier entries are more likely to be actual data quality issues:

* irrelevant samples -- single-linkage dendrogram; a sample is scored by the
  height of the last merge in which its cluster was the minority side,
  normalized by the largest merge height, so late-joining isolated samples
  rank first and the order is invariant to uniform distance scaling;
* near duplicates -- all N(N-1)/2 pairs by ascending distance;
* label errors -- nearest same-label vs nearest other-label distance,
  scored as intra/(intra+extra).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.spatial.distance import squareform

from .data import DistanceMatrix
from .errors import DegenerateDistances, MissingLabel, ParseError, SingleClass

NOISE_TYPES = ("irrelevant", "near_duplicate", "label_error")


@dataclass(frozen=True, order=True)
class CandidateRef:
    kind: str  # "single" | "pair"
    i: int
    j: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("single", "pair"):
            raise ValueError(f"bad candidate kind {self.kind!r}")
        if self.kind == "pair":
            if self.j is None or not self.i < self.j:
                raise ValueError(f"pair candidates need i < j, got ({self.i}, {self.j})")
        elif self.j is not None:
            raise ValueError("single candidates must not carry a second index")

    def indices(self) -> tuple[int, ...]:
        return (self.i,) if self.kind == "single" else (self.i, self.j)

    def ids(self, sample_ids: Sequence[str]) -> list[str]:
        return [sample_ids[k] for k in self.indices()]


@dataclass(frozen=True)
class IssueRanking:
    noise_type: str
    entries: tuple[tuple[CandidateRef, float], ...]

    def __post_init__(self):
        if self.noise_type not in NOISE_TYPES:
            raise ValueError(f"bad noise type {self.noise_type!r}")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def candidates(self) -> list[CandidateRef]:
        return [ref for ref, _ in self.entries]


def rank_irrelevant(dist: DistanceMatrix) -> IssueRanking:
    """Rank samples by how late and how isolated they join the single-linkage tree."""
    n = dist.n
    if n < 2:
        raise DegenerateDistances("need at least 2 samples to rank")
    offdiag = squareform(dist.entries, checks=False)
    if np.min(offdiag) == np.max(offdiag):
        raise DegenerateDistances("all pairwise distances are equal; ranking undefined")

    merges = linkage(offdiag, method="single")
    max_height = float(merges[-1, 2])
    if max_height <= 0.0:
        raise DegenerateDistances("all merge heights are zero; ranking undefined")

    # members/height per active cluster; singletons are clusters 0..n-1
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    formed_at: dict[int, float] = {i: 0.0 for i in range(n)}
    last_minority = np.zeros(n, dtype=np.float64)
    for step, (a, b, height, _size) in enumerate(merges):
        a, b = int(a), int(b)
        ma, mb = members.pop(a), members.pop(b)
        minority: list[int]
        if len(ma) != len(mb):
            minority = ma if len(ma) < len(mb) else mb
        elif formed_at[a] != formed_at[b]:
            # cardinality tie: the later-formed (less cohesive) side counts
            minority = ma if formed_at[a] > formed_at[b] else mb
        else:
            minority = ma + mb  # full tie: both sides are equally peripheral
        for m in minority:
            last_minority[m] = height
        new_id = n + step
        big, small = (ma, mb) if len(ma) >= len(mb) else (mb, ma)
        big.extend(small)
        members[new_id] = big
        formed_at[new_id] = float(height)

    scores = last_minority / max_height
    order = np.lexsort((np.arange(n), -scores))
    entries = tuple(
        (CandidateRef(kind="single", i=int(i)), float(scores[i])) for i in order
    )
    return IssueRanking(noise_type="irrelevant", entries=entries)


def rank_near_duplicates(dist: DistanceMatrix) -> IssueRanking:
    """All pairs by ascending distance; ties broken by (i, j) lexicographic."""
    n = dist.n
    if n < 2:
        raise DegenerateDistances("need at least 2 samples to rank")
    ii, jj = np.triu_indices(n, k=1)
    d = dist.entries[ii, jj]
    order = np.lexsort((jj, ii, d))
    entries = tuple(
        (CandidateRef(kind="pair", i=int(ii[k]), j=int(jj[k])), float(d[k]))
        for k in order
    )
    return IssueRanking(noise_type="near_duplicate", entries=entries)


def rank_label_errors(
    dist: DistanceMatrix, labels: Sequence[Optional[str]], k: int = 1
) -> IssueRanking:
    """Score each sample by intra/(intra+extra) nearest-label distances.

    intra is the distance to the k-th nearest neighbor sharing the sample's
    label; extra the same for any other label. Samples whose class has no
    other member get intra = the dataset's maximum pairwise distance, which
    ranks uncorroborated labels high without producing infinities.
    """
    n = dist.n
    if len(labels) != n:
        raise MissingLabel(f"got {len(labels)} labels for {n} samples")
    for idx, lab in enumerate(labels):
        if lab is None:
            raise MissingLabel(f"sample index {idx} has no label")
    if len(set(labels)) < 2:
        raise SingleClass("label-error ranking needs at least 2 distinct classes")
    if k < 1:
        raise ValueError("k must be >= 1")

    lab_arr = np.asarray(labels, dtype=object)
    max_dist = float(np.max(dist.entries))
    scores = np.empty(n, dtype=np.float64)
    for i in range(n):
        same = lab_arr == lab_arr[i]
        same[i] = False
        intra_pool = np.sort(dist.entries[i, same])
        extra_pool = np.sort(dist.entries[i, lab_arr != lab_arr[i]])
        intra = float(intra_pool[k - 1]) if intra_pool.size >= k else max_dist
        extra = float(extra_pool[k - 1]) if extra_pool.size >= k else max_dist
        denom = intra + extra
        # both neighbors at distance zero: equidistant, call it ambiguous
        scores[i] = 0.5 if denom == 0.0 else intra / denom

    order = np.lexsort((np.arange(n), -scores))
    entries = tuple(
        (CandidateRef(kind="single", i=int(i)), float(scores[i])) for i in order
    )
    return IssueRanking(noise_type="label_error", entries=entries)


def rank(
    dist: DistanceMatrix,
    noise_type: str,
    labels: Optional[Sequence[Optional[str]]] = None,
) -> IssueRanking:
    if noise_type == "irrelevant":
        return rank_irrelevant(dist)
    if noise_type == "near_duplicate":
        return rank_near_duplicates(dist)
    if noise_type == "label_error":
        if labels is None:
            raise MissingLabel("label-error ranking requires labels")
        return rank_label_errors(dist, labels)
    raise ValueError(f"bad noise type {noise_type!r}")


def save_ranking(
    ranking: IssueRanking, sample_ids: Sequence[str], path: str | Path
) -> None:
    """Serialize to JSONL; rank is the 0-based position."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for pos, (ref, score) in enumerate(ranking.entries):
            fh.write(
                json.dumps(
                    {"rank": pos, "kind": ref.kind, "ids": ref.ids(sample_ids), "score": score}
                )
                + "\n"
            )


def load_ranking(
    path: str | Path, sample_ids: Sequence[str], noise_type: str
) -> IssueRanking:
    index = {sid: i for i, sid in enumerate(sample_ids)}
    entries: list[tuple[CandidateRef, float]] = []
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                idxs = [index[sid] for sid in obj["ids"]]
                if obj["kind"] == "pair":
                    i, j = sorted(idxs)
                    ref = CandidateRef(kind="pair", i=i, j=j)
                else:
                    ref = CandidateRef(kind="single", i=idxs[0])
                entries.append((ref, float(obj["score"])))
            except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                raise ParseError(f"{path.name}:{lineno}: bad ranking line ({exc})") from exc
    if not entries:
        raise ParseError(f"{path.name}: ranking is empty")
    return IssueRanking(noise_type=noise_type, entries=tuple(entries))
