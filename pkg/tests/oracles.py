"""Independent brute-force reference implementations used to freeze expected
values. These deliberately avoid the library's code paths: plain loops,
exact rational arithmetic where it matters, no numpy vectorization tricks.
"""

from __future__ import annotations

import itertools
from fractions import Fraction


# --- single-linkage dendrogram by repeated minimum-edge merging ---------------

def brute_single_linkage(dist) -> list[tuple[frozenset, frozenset, float]]:
    """Merge list [(members_a, members_b, height)] by repeatedly joining the
    two clusters with the smallest minimum inter-point distance."""
    n = len(dist)
    clusters: list[frozenset] = [frozenset([i]) for i in range(n)]
    merges = []
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = min(dist[i][j] for i in clusters[a] for j in clusters[b])
                if best is None or d < best[0]:
                    best = (d, a, b)
        d, a, b = best
        ca, cb = clusters[a], clusters[b]
        merges.append((ca, cb, d))
        clusters = [c for k, c in enumerate(clusters) if k not in (a, b)]
        clusters.append(ca | cb)
    return merges


def brute_isolation_scores(dist) -> list[float]:
    """Last-minority-merge height per sample, normalized by the max height.
    Cardinality ties go to the later-formed side; full ties mark both sides."""
    n = len(dist)
    merges = brute_single_linkage(dist)
    formed_at: dict[frozenset, float] = {frozenset([i]): 0.0 for i in range(n)}
    last = [0.0] * n
    for ca, cb, h in merges:
        if len(ca) != len(cb):
            minority = ca if len(ca) < len(cb) else cb
        elif formed_at[ca] != formed_at[cb]:
            minority = ca if formed_at[ca] > formed_at[cb] else cb
        else:
            minority = ca | cb
        for m in minority:
            last[m] = h
        formed_at[ca | cb] = h
    top = merges[-1][2]
    return [s / top for s in last]


# --- stopping criterion ---------------------------------------------------------

def brute_stop_scan(verdicts: list[str], n_clean: int):
    """(stop_index, confirmed) where stop_index is the count of verdicts
    consumed when n_clean consecutive 'no' first complete, or None."""
    if n_clean == 0:
        return 0, 0
    streak = 0
    confirmed = 0
    for idx, v in enumerate(verdicts):
        if v == "no":
            streak += 1
        else:
            confirmed += 1
            streak = 0
        if streak >= n_clean:
            return idx + 1, confirmed
    return None, confirmed


# --- agreement -------------------------------------------------------------------

def brute_alpha(units: dict) -> Fraction:
    """Krippendorff's alpha from the definition: explicit observed and
    expected disagreement sums over all within-unit value pairs."""
    pairable = {
        u: [v for v in vals if v is not None]
        for u, vals in units.items()
        if sum(v is not None for v in vals) >= 2
    }
    n = sum(len(v) for v in pairable.values())
    d_o = Fraction(0)
    for vals in pairable.values():
        m = len(vals)
        mismatches = sum(
            1 for x, y in itertools.permutations(range(m), 2) if vals[x] != vals[y]
        )
        d_o += Fraction(mismatches, m - 1)
    d_o = d_o / n
    all_vals = [v for vals in pairable.values() for v in vals]
    categories = set(all_vals)
    totals = {c: all_vals.count(c) for c in categories}
    mismatch_mass = sum(
        Fraction(totals[c] * totals[k])
        for c in categories
        for k in categories
        if c != k
    )
    d_e = mismatch_mass / (n * (n - 1))
    if d_e == 0:
        raise ZeroDivisionError("expected disagreement zero")
    return 1 - d_o / d_e


def brute_kappa(a: list, b: list) -> Fraction:
    n = len(a)
    p_o = Fraction(sum(1 for x, y in zip(a, b) if x == y), n)
    values = set(a) | set(b)
    p_e = sum(
        Fraction(sum(1 for x in a if x == v), n) * Fraction(sum(1 for y in b if y == v), n)
        for v in values
    )
    return (p_o - p_e) / (1 - p_e)


# --- permutation test --------------------------------------------------------------

def brute_permutation_p(differences: list[float]) -> Fraction:
    n = len(differences)
    observed = sum(differences)
    count = 0
    for signs in itertools.product((1, -1), repeat=n):
        if sum(s * d for s, d in zip(signs, differences)) >= observed:
            count += 1
    return Fraction(count, 2 ** n)


# --- threshold-sweep metric oracles (exact rationals) ------------------------------

def _threshold_points(scores, labels):
    """(tp, fp) after each distinct-score threshold, highest scores first."""
    out = []
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 1)
        fp = sum(1 for s, y in zip(scores, labels) if s >= t and y == 0)
        out.append((Fraction(tp), Fraction(fp)))
    return out


def oracle_auroc(scores, labels) -> Fraction:
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = Fraction(0)
    for p in pos:
        for q in neg:
            if p > q:
                total += 1
            elif p == q:
                total += Fraction(1, 2)
    return total / (len(pos) * len(neg))


def oracle_average_precision(scores, labels) -> Fraction:
    n_pos = sum(labels)
    ap = Fraction(0)
    prev_recall = Fraction(0)
    for tp, fp in _threshold_points(scores, labels):
        recall = tp / n_pos
        precision = tp / (tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def oracle_auprg(scores, labels) -> Fraction:
    n = len(labels)
    n_pos = sum(labels)
    pi = Fraction(n_pos, n)

    def gains(tp, fp):
        rec = tp / n_pos
        prec = tp / (tp + fp)
        rg = (rec - pi) / ((1 - pi) * rec)
        pg = (prec - pi) / ((1 - pi) * prec)
        return rg, pg

    pts = _threshold_points(scores, labels)
    target = pi * n_pos
    k = next(i for i, (tp, _) in enumerate(pts) if tp >= target)
    tp_prev, fp_prev = (Fraction(0), Fraction(0)) if k == 0 else pts[k - 1]
    frac = (target - tp_prev) / (pts[k][0] - tp_prev)
    fp_star = fp_prev + frac * (pts[k][1] - fp_prev)
    _, pg_star = gains(target, fp_star)
    curve = [(Fraction(0), pg_star)]
    for tp, fp in pts:
        if tp == 0:
            continue
        rg, pg = gains(tp, fp)
        if rg >= 0:
            curve.append((rg, pg))
    area = Fraction(0)
    for (r0, p0), (r1, p1) in zip(curve, curve[1:]):
        area += (r1 - r0) * (p0 + p1) / 2
    return area
