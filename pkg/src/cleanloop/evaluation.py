"""Ranking-quality metrics and before/after-cleaning performance deltas.

AUROC uses the rank-sum formulation with ties counted half. Average
precision steps through distinct-score thresholds, so a whole tie group is
consumed at once and constant scores give AP equal to the positive
prevalence (the best not-informed baseline). AUPRG follows the
precision-recall-gain construction: gains are (x - pi)/((1 - pi) x), the
curve is entered at recall-gain 0 by linearly interpolating the TP/FP counts
of the two straddling thresholds, and the area over recall-gain in [0, 1] is
the trapezoidal integral (linear interpolation is exact in PRG space);
negative areas are reported as-is.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import (
    DuplicateId,
    EmptyAfterCleaning,
    FormatError,
    NoPositives,
    OutOfRange,
    SingleClass,
    UnknownId,
)
from .rankers import CandidateRef, IssueRanking

METRIC_NAMES = ("auroc", "average_precision", "auprg")

FLAG_SIGNIFICANT = "*"
FLAG_BORDERLINE = "°"
FLAG_NONE = ""


@dataclass(frozen=True)
class ScoredBinarySet:
    """Model scores with binary reference labels, one row per unique id."""

    items: tuple[tuple[str, float, int], ...]

    def __post_init__(self):
        seen: set[str] = set()
        for sid, _score, label in self.items:
            if sid in seen:
                raise DuplicateId(f"duplicate id {sid!r} in scored set")
            seen.add(sid)
            if label not in (0, 1):
                raise OutOfRange(f"label for {sid!r} must be 0 or 1, got {label!r}")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [sid for sid, _, _ in self.items]

    @property
    def scores(self) -> np.ndarray:
        return np.asarray([s for _, s, _ in self.items], dtype=np.float64)

    @property
    def labels(self) -> np.ndarray:
        return np.asarray([l for _, _, l in self.items], dtype=np.int64)

    def restricted(self, keep_ids: set[str]) -> "ScoredBinarySet":
        return ScoredBinarySet(
            items=tuple(it for it in self.items if it[0] in keep_ids)
        )


def load_scores_csv(path: str | Path) -> ScoredBinarySet:
    """Read 'id,score,label' rows; label must be 0 or 1."""
    path = Path(path)
    items: list[tuple[str, float, int]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path.name}: empty CSV") from None
        if header != ["id", "score", "label"]:
            raise FormatError(f"{path.name}: header must be 'id,score,label'")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise FormatError(f"{path.name}:{lineno}: expected 3 fields")
            try:
                score = float(row[1])
                label = int(row[2])
            except ValueError as exc:
                raise FormatError(f"{path.name}:{lineno}: bad numeric field") from exc
            if label not in (0, 1):
                raise FormatError(f"{path.name}:{lineno}: label must be 0 or 1")
            items.append((row[0], score, label))
    if not items:
        raise FormatError(f"{path.name}: no score rows")
    return ScoredBinarySet(items=tuple(items))


# --- core metrics on arrays ---------------------------------------------------

def _check_both_classes(labels: np.ndarray) -> None:
    if labels.sum() == 0 or labels.sum() == len(labels):
        raise SingleClass("metric needs at least one positive and one negative")


def auroc_arrays(scores: np.ndarray, labels: np.ndarray) -> float:
    _check_both_classes(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    ranks = rankdata(scores)  # average ranks implement the ties-half rule
    rank_sum = float(ranks[labels == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def _threshold_counts(scores: np.ndarray, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative (TP, FP) after consuming each distinct-score group, best first."""
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    boundaries = np.nonzero(np.diff(s))[0]  # last index of each tie group but the final
    cut = np.concatenate([boundaries, [len(s) - 1]])
    tp = np.cumsum(y)[cut].astype(np.float64)
    fp = (cut + 1) - tp
    return tp, fp


def average_precision_arrays(scores: np.ndarray, labels: np.ndarray) -> float:
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise NoPositives("average precision needs at least one positive")
    tp, fp = _threshold_counts(scores, labels)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    prev_recall = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev_recall) * precision))


def auprg_arrays(scores: np.ndarray, labels: np.ndarray) -> float:
    _check_both_classes(labels)
    n = len(labels)
    n_pos = int(labels.sum())
    pi = n_pos / n
    tp, fp = _threshold_counts(scores, labels)

    def gains(tp_k: float, fp_k: float) -> tuple[float, float]:
        rec = tp_k / n_pos
        prec = tp_k / (tp_k + fp_k)
        rg = (rec - pi) / ((1.0 - pi) * rec)
        pg = (prec - pi) / ((1.0 - pi) * prec)
        return rg, pg

    # entry point at recall gain 0: interpolate TP/FP linearly between the
    # straddling thresholds (the virtual empty prediction set acts as (0, 0))
    target_tp = pi * n_pos
    k = int(np.searchsorted(tp, target_tp, side="left"))
    tp_prev, fp_prev = (0.0, 0.0) if k == 0 else (float(tp[k - 1]), float(fp[k - 1]))
    frac = (target_tp - tp_prev) / (float(tp[k]) - tp_prev)
    fp_star = fp_prev + frac * (float(fp[k]) - fp_prev)
    _, pg_star = gains(target_tp, fp_star)

    # keep rg == 0 thresholds: vertical drops at the window edge must move the
    # effective starting precision gain down to the last point on the edge
    points = [(0.0, pg_star)]
    for tp_k, fp_k in zip(tp, fp):
        if tp_k == 0.0:
            continue  # recall gain is -inf, strictly before the window
        rg, pg = gains(float(tp_k), float(fp_k))
        if rg >= 0.0:
            points.append((rg, pg))

    area = 0.0
    for (rg0, pg0), (rg1, pg1) in zip(points, points[1:]):
        area += (rg1 - rg0) * (pg0 + pg1) / 2.0
    return area


# --- set-level operations -------------------------------------------------------

def auroc(data: ScoredBinarySet) -> float:
    """Probability a random positive outranks a random negative (ties half)."""
    return auroc_arrays(data.scores, data.labels)


def average_precision(data: ScoredBinarySet) -> float:
    """Step-sum AP over distinct-score thresholds; constant scores give prevalence."""
    return average_precision_arrays(data.scores, data.labels)


def auprg(data: ScoredBinarySet) -> float:
    """Area under the precision-gain / recall-gain curve; may be negative."""
    return auprg_arrays(data.scores, data.labels)


@dataclass(frozen=True)
class RankingQuality:
    noise_type: str
    n_reference: int
    positive_fraction: float
    auroc: float
    average_precision: float
    auprg: float


def ranking_vs_reference(
    ranking: IssueRanking, reference: Mapping[CandidateRef, bool]
) -> RankingQuality:
    """Score the ranking as a classifier against confirmed/rejected labels.

    The caller restricts the reference to candidates annotated by everyone.
    For near duplicates a smaller score means a stronger candidate, so the
    classifier score is the negated distance; the other rankers already put
    larger scores first.
    """
    if not reference:
        raise EmptyAfterCleaning("reference contains no annotated candidates")
    score_of = {ref: s for ref, s in ranking.entries}
    flip = -1.0 if ranking.noise_type == "near_duplicate" else 1.0
    scores, labels = [], []
    for ref, confirmed in reference.items():
        if ref not in score_of:
            raise UnknownId(f"reference candidate {ref} not in ranking")
        scores.append(flip * score_of[ref])
        labels.append(1 if confirmed else 0)
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    return RankingQuality(
        noise_type=ranking.noise_type,
        n_reference=len(y),
        positive_fraction=float(y.mean()),
        auroc=auroc_arrays(s, y),
        average_precision=average_precision_arrays(s, y),
        auprg=auprg_arrays(s, y),
    )


@dataclass(frozen=True)
class DeltaReport:
    """Cleaned-minus-original metric difference, in percentage points."""

    metric: str
    median_delta: float
    ci_low: float
    ci_high: float
    flag: str
    reps: int
    skipped: int

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "median_delta": round(self.median_delta, 1),
            "ci": [round(self.ci_low, 1), round(self.ci_high, 1)],
            "flag": self.flag,
            "reps": self.reps,
            "skipped": self.skipped,
        }


def significance_flag(ci_low: float, ci_high: float) -> str:
    """'*' when zero is strictly outside the interval, '°' when a boundary is zero."""
    if ci_low > 0.0 or ci_high < 0.0:
        return FLAG_SIGNIFICANT
    if ci_low == 0.0 or ci_high == 0.0:
        return FLAG_BORDERLINE
    return FLAG_NONE


_METRIC_FNS = {
    "auroc": auroc_arrays,
    "average_precision": average_precision_arrays,
    "auprg": auprg_arrays,
}


def cleaning_delta(
    data: ScoredBinarySet,
    removed: set[str],
    reps: int = 1000,
    level: float = 95.0,
    seed: int = 0,
) -> dict[str, DeltaReport]:
    """Paired bootstrap of metric differences attributable to the removed items.

    Each replicate resamples the original items with replacement and computes
    every metric twice: on the replicate and on the replicate with removed
    ids dropped. Replicates on which either view is degenerate for a metric
    are skipped for that metric and counted.
    """
    if not 0.0 < level < 100.0:
        raise OutOfRange(f"level must lie in (0, 100), got {level}")
    if reps < 1:
        raise OutOfRange(f"reps must be >= 1, got {reps}")
    unknown = removed - set(data.ids)
    if unknown:
        raise UnknownId(f"removed ids not in the scored set: {sorted(unknown)[:5]}")
    retained_mask = np.asarray([sid not in removed for sid in data.ids], dtype=bool)
    scores, labels = data.scores, data.labels
    kept_labels = labels[retained_mask]
    if kept_labels.size == 0 or kept_labels.sum() in (0, kept_labels.size):
        raise EmptyAfterCleaning("cleaning removed one entire class from the point estimate")

    rng = np.random.default_rng(seed)
    deltas: dict[str, list[float]] = {m: [] for m in _METRIC_FNS}
    skipped: dict[str, int] = {m: 0 for m in _METRIC_FNS}
    n = len(data)
    for _ in range(reps):
        idx = rng.integers(0, n, size=n)
        rs, ry, rkeep = scores[idx], labels[idx], retained_mask[idx]
        cs, cy = rs[rkeep], ry[rkeep]
        for metric, fn in _METRIC_FNS.items():
            try:
                if cs.size == 0:
                    raise EmptyAfterCleaning("replicate empty after cleaning")
                original = fn(rs, ry)
                cleaned = fn(cs, cy)
            except (SingleClass, NoPositives, EmptyAfterCleaning):
                skipped[metric] += 1
                continue
            deltas[metric].append(100.0 * (cleaned - original))

    reports: dict[str, DeltaReport] = {}
    tail = (1.0 - level / 100.0) / 2.0
    for metric in _METRIC_FNS:
        values = deltas[metric]
        if not values:
            raise EmptyAfterCleaning(f"all replicates degenerate for {metric}")
        arr = np.sort(np.asarray(values))
        lo = float(arr[int(np.floor(tail * (len(arr) - 1)))])
        hi = float(arr[int(np.ceil((1.0 - tail) * (len(arr) - 1)))])
        reports[metric] = DeltaReport(
            metric=metric,
            median_delta=float(np.median(arr)),
            ci_low=lo,
            ci_high=hi,
            flag=significance_flag(lo, hi),
            reps=reps,
            skipped=skipped[metric],
        )
    return reports
