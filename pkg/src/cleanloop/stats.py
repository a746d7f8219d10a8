"""Agreement statistics, resampling utilities, and annotation-economy numbers.

Cohen's kappa compares one annotator pair on jointly-annotated items;
Krippendorff's alpha (nominal, coincidence-matrix form) measures overall
agreement and tolerates items missing from some annotators. Both are
chance-corrected: kappa = (p_o - p_e)/(1 - p_e), alpha = 1 - D_o/D_e.
Uncertainty comes from a percentile bootstrap over annotated items, and the
expert-vs-lay comparison uses a one-sided paired sign-flip permutation test.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    AllReplicatesDegenerate,
    CleanloopError,
    DegenerateMarginals,
    EmptyInput,
    InsufficientPairableValues,
    OutOfRange,
    ZeroAnnotated,
    ZeroExpectedDisagreement,
)

GOOD = "good"
QUESTIONABLE = "questionable"
UNACCEPTABLE = "unacceptable"

DEFAULT_REPS = 1000
DEFAULT_LEVEL = 95.0


def agreement_band(value: float) -> str:
    """Banding thresholds: >0.4 good, [0.2, 0.4] questionable, <0.2 unacceptable."""
    if not -1.0 <= value <= 1.0:
        raise OutOfRange(f"agreement value {value} outside [-1, 1]")
    if value > 0.4:
        return GOOD
    if value >= 0.2:
        return QUESTIONABLE
    return UNACCEPTABLE


@dataclass(frozen=True)
class AgreementResult:
    statistic: str  # "cohen_kappa" | "krippendorff_alpha"
    point: float
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None
    band: str = ""

    def __post_init__(self):
        if not self.band:
            object.__setattr__(self, "band", agreement_band(self.point))
        if self.ci_low is not None and self.ci_high is not None:
            if not self.ci_low <= self.point <= self.ci_high:
                raise OutOfRange(
                    f"point {self.point} outside CI [{self.ci_low}, {self.ci_high}]"
                )

    def with_ci(self, ci_low: float, ci_high: float) -> "AgreementResult":
        return AgreementResult(
            statistic=self.statistic,
            point=self.point,
            ci_low=ci_low,
            ci_high=ci_high,
            band=self.band,
        )


def cohen_kappa(a: Sequence, b: Sequence) -> AgreementResult:
    """Pairwise chance-corrected agreement on jointly-annotated items."""
    if len(a) != len(b):
        raise OutOfRange(f"verdict lists differ in length ({len(a)} vs {len(b)})")
    if len(a) == 0:
        raise EmptyInput("kappa needs at least one jointly-annotated item")
    n = len(a)
    values = sorted(set(a) | set(b))
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    p_e = sum(
        (sum(1 for x in a if x == v) / n) * (sum(1 for y in b if y == v) / n)
        for v in values
    )
    if p_e == 1.0:
        raise DegenerateMarginals("both raters are constant; kappa undefined")
    kappa = (p_o - p_e) / (1.0 - p_e)
    return AgreementResult(statistic="cohen_kappa", point=kappa)


def krippendorff_alpha(
    units: Mapping[Hashable, Sequence[Optional[Hashable]]]
) -> AgreementResult:
    """Nominal-level alpha over units with >= 2 non-missing annotations.

    Observed disagreement uses the coincidence matrix: each within-unit
    ordered value pair contributes 1/(m_u - 1). Expected disagreement comes
    from the marginal value totals.
    """
    coincidence: dict[tuple[Hashable, Hashable], float] = {}
    n_pairable = 0
    for values in units.values():
        present = [v for v in values if v is not None]
        m = len(present)
        if m < 2:
            continue  # unpaired annotations carry no agreement information
        n_pairable += m
        w = 1.0 / (m - 1)
        for idx, x in enumerate(present):
            for jdx, y in enumerate(present):
                if idx != jdx:
                    coincidence[(x, y)] = coincidence.get((x, y), 0.0) + w
    if n_pairable < 2:
        raise InsufficientPairableValues(
            "alpha needs at least 2 pairable values across units"
        )
    categories = sorted({c for pair in coincidence for c in pair}, key=repr)
    totals = {
        c: sum(coincidence.get((c, k), 0.0) for k in categories) for c in categories
    }
    d_o = sum(v for (c, k), v in coincidence.items() if c != k) / n_pairable
    d_e = sum(
        totals[c] * totals[k]
        for c in categories
        for k in categories
        if c != k
    ) / (n_pairable * (n_pairable - 1))
    if d_e == 0.0:
        raise ZeroExpectedDisagreement("all pairable values identical; alpha undefined")
    alpha = 1.0 - d_o / d_e
    return AgreementResult(statistic="krippendorff_alpha", point=alpha)


class BootstrapResult(NamedTuple):
    point: float
    ci_low: float
    ci_high: float
    skipped: int


def _percentile_order_stats(
    sorted_values: np.ndarray, q_low: float, q_high: float
) -> tuple[float, float]:
    # endpoints are actual order statistics: floor/ceil of q*(B-1)
    b = len(sorted_values)
    lo = sorted_values[int(np.floor(q_low * (b - 1)))]
    hi = sorted_values[int(np.ceil(q_high * (b - 1)))]
    return float(lo), float(hi)


def bootstrap_ci(
    statistic: Callable[[list], float],
    data: Sequence,
    reps: int = DEFAULT_REPS,
    level: float = DEFAULT_LEVEL,
    seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap over resampled units.

    Replicates on which the statistic raises a domain error (e.g. a resample
    where both raters are constant) are skipped; the skip count is returned so
    callers can report it.
    """
    if reps < 1:
        raise OutOfRange(f"reps must be >= 1, got {reps}")
    if not 0.0 < level < 100.0:
        raise OutOfRange(f"level must lie in (0, 100), got {level}")
    if len(data) == 0:
        raise EmptyInput("bootstrap needs non-empty data")
    data = list(data)
    point = float(statistic(data))
    rng = np.random.default_rng(seed)
    replicates: list[float] = []
    skipped = 0
    for _ in range(reps):
        idx = rng.integers(0, len(data), size=len(data))
        sample = [data[i] for i in idx]
        try:
            replicates.append(float(statistic(sample)))
        except CleanloopError:
            skipped += 1
    if not replicates:
        raise AllReplicatesDegenerate(f"all {reps} bootstrap replicates degenerate")
    tail = (1.0 - level / 100.0) / 2.0
    lo, hi = _percentile_order_stats(np.sort(np.asarray(replicates)), tail, 1.0 - tail)
    return BootstrapResult(point=point, ci_low=lo, ci_high=hi, skipped=skipped)


def paired_permutation_test(
    differences: Sequence[float],
    alternative: str = "greater",
    *,
    method: str = "auto",
    draws: int = 100_000,
    seed: int = 0,
) -> float:
    """One-sided sign-flip test on paired differences.

    The statistic is the sum of differences; the p-value is the fraction of
    sign assignments whose statistic is >= the observed one, with the observed
    assignment always included (so p is never 0 and, in exhaustive mode, is an
    exact rational with denominator 2^n).
    """
    if alternative != "greater":
        raise OutOfRange(f"only alternative='greater' is supported, got {alternative!r}")
    if method not in ("auto", "exhaustive", "montecarlo"):
        raise OutOfRange(f"bad method {method!r}")
    d = np.asarray(list(differences), dtype=np.float64)
    n = len(d)
    if n == 0:
        raise EmptyInput("no differences given")
    if method == "auto":
        method = "exhaustive" if n <= 20 else "montecarlo"
    if method == "exhaustive":
        sums = np.zeros(1)
        for di in d:
            sums = np.concatenate([sums + di, sums - di])
        # index 0 is the all-positive assignment; using it as the observed
        # value keeps tie comparisons consistent with the enumeration
        count = int(np.count_nonzero(sums >= sums[0]))
        return count / (1 << n)
    observed = float(d.sum())
    if draws < 100_000:
        raise OutOfRange(f"montecarlo needs >= 100000 draws, got {draws}")
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(draws, n)) * 2 - 1
    stats = signs @ d
    count = int(np.count_nonzero(stats >= observed))
    return (count + 1) / (draws + 1)  # observed assignment included


def speed_up(pool_size: int, annotated: int) -> Fraction:
    """Reciprocal fraction of the candidate pool that was actually annotated.

    Returned as an exact rational so bookkeeping identities hold without
    rounding; cast to float for display.
    """
    if annotated == 0:
        raise ZeroAnnotated("speed-up undefined with zero annotated items")
    if not 1 <= annotated <= pool_size:
        raise OutOfRange(f"annotated must lie in [1, {pool_size}], got {annotated}")
    return Fraction(pool_size, annotated)


def pair_pool_size(n: int) -> int:
    return n * (n - 1) // 2
