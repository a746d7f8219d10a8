import logging

import numpy as np
import pytest

from cleanloop.aggregation import (
    MAJORITY,
    UNANIMOUS,
    VerdictTable,
    aggregate,
    build_clean_list,
    estimate_label_error_prevalence,
    write_clean_list,
)
from cleanloop.errors import MixedNoiseTypes, NoAnnotators, UnknownId
from cleanloop.protocol import next_candidate, submit_answer
from cleanloop.rankers import CandidateRef
from conftest import make_manifest, make_session


def table_from_votes(votes: dict[int, list[str]], noise_type="irrelevant") -> VerdictTable:
    """votes: candidate index -> per-annotator verdict ('yes'/'no'/'unseen')."""
    annotators = [f"a{k}" for k in range(len(next(iter(votes.values()))))]
    rows = {}
    for idx, verdicts in votes.items():
        row = {
            a: v for a, v in zip(annotators, verdicts) if v in ("yes", "no")
        }
        rows[CandidateRef(kind="single", i=idx)] = row
    return VerdictTable(noise_type=noise_type, annotators=tuple(annotators), rows=rows)


class TestAggregate:
    def test_two_yes_one_no(self):
        table = table_from_votes({0: ["yes", "yes", "no"]})
        assert aggregate(table, MAJORITY) == [CandidateRef(kind="single", i=0)]
        assert aggregate(table, UNANIMOUS) == []

    def test_unseen_counts_as_implicit_no(self):
        table = table_from_votes({0: ["yes", "yes", "unseen"]})
        assert aggregate(table, MAJORITY) == [CandidateRef(kind="single", i=0)]
        assert aggregate(table, UNANIMOUS) == []

    def test_unanimous_requires_all(self):
        table = table_from_votes({0: ["yes", "yes", "yes"], 1: ["yes", "no", "yes"]})
        assert aggregate(table, UNANIMOUS) == [CandidateRef(kind="single", i=0)]

    def test_even_count_requires_strict_majority(self):
        table = table_from_votes({0: ["yes", "yes", "no", "no"]})
        assert aggregate(table, MAJORITY) == []

    def test_unanimous_subset_of_majority(self, rng):
        for _ in range(300):
            n_annot = int(rng.integers(1, 5))
            votes = {
                i: [str(rng.choice(["yes", "no", "unseen"])) for _ in range(n_annot)]
                for i in range(int(rng.integers(1, 12)))
            }
            votes = {i: v for i, v in votes.items() if any(x != "unseen" for x in v)}
            if not votes:
                continue
            table = table_from_votes(votes)
            assert set(aggregate(table, UNANIMOUS)) <= set(aggregate(table, MAJORITY))

    def test_from_sessions(self):
        sessions = []
        for annotator, answers in (("a1", "yn"), ("a2", "yy")):
            s = make_session(4, annotator=annotator, session_id=annotator)
            for ch in answers:
                submit_answer(s, next_candidate(s), "yes" if ch == "y" else "no")
            sessions.append(s)
        table = VerdictTable.from_sessions(sessions)
        assert table.annotators == ("a1", "a2")
        confirmed = aggregate(table, UNANIMOUS)
        assert confirmed == [CandidateRef(kind="single", i=0)]

    def test_mixed_noise_types_rejected(self):
        s1 = make_session(3, noise_type="irrelevant", annotator="a1")
        s2 = make_session(3, noise_type="label_error", annotator="a2")
        with pytest.raises(MixedNoiseTypes):
            VerdictTable.from_sessions([s1, s2])

    def test_no_annotators(self):
        with pytest.raises(NoAnnotators):
            VerdictTable.from_sessions([])


class TestBuildCleanList:
    def test_mednode_shaped_counts(self):
        manifest = make_manifest(170)
        report = build_clean_list(
            manifest, ["s0", "s1", "s2"], [("s10", "s11")], seed=3
        )
        assert len(report.cleaned_ids) == 166
        assert report.confirmed_irrelevant == ("s0", "s1", "s2")
        assert len(report.removed_duplicates) == 1

    def test_pair_member_already_irrelevant_needs_no_action(self):
        manifest = make_manifest(5)
        report = build_clean_list(manifest, ["s0"], [("s0", "s1")], seed=0)
        assert "s1" in report.cleaned_ids
        assert report.removed_duplicates == ()

    def test_deterministic_under_seed(self):
        manifest = make_manifest(30)
        pairs = [("s1", "s2"), ("s5", "s9"), ("s10", "s20")]
        a = build_clean_list(manifest, ["s0"], pairs, seed=42)
        b = build_clean_list(manifest, ["s0"], pairs, seed=42)
        assert a.cleaned_ids == b.cleaned_ids

    def test_chained_component_keeps_one_member(self, caplog):
        manifest = make_manifest(6)
        pairs = [("s0", "s1"), ("s1", "s2"), ("s2", "s3")]
        with caplog.at_level(logging.WARNING):
            report = build_clean_list(manifest, [], pairs, seed=1)
        survivors = {"s0", "s1", "s2", "s3"} & set(report.cleaned_ids)
        assert len(survivors) == 1
        assert any("component" in rec.message for rec in caplog.records)

    def test_preserves_manifest_order(self):
        manifest = make_manifest(10)
        report = build_clean_list(manifest, ["s3"], [("s5", "s6")], seed=0)
        positions = {sid: i for i, sid in enumerate(manifest.ids)}
        got = [positions[sid] for sid in report.cleaned_ids]
        assert got == sorted(got)

    def test_unknown_id(self):
        with pytest.raises(UnknownId):
            build_clean_list(make_manifest(3), ["nope"], [], seed=0)
        with pytest.raises(UnknownId):
            build_clean_list(make_manifest(3), [], [("s0", "nope")], seed=0)

    def test_invariants_on_random_instances(self, rng):
        for _ in range(300):
            n = int(rng.integers(4, 40))
            manifest = make_manifest(n)
            ids = manifest.ids
            irrelevant = list(rng.choice(ids, size=int(rng.integers(0, n // 3 + 1)), replace=False))
            pairs = []
            for _ in range(int(rng.integers(0, 4))):
                i, j = rng.choice(n, size=2, replace=False)
                pairs.append((ids[min(i, j)], ids[max(i, j)]))
            report = build_clean_list(manifest, irrelevant, pairs, seed=int(rng.integers(1 << 30)))
            cleaned = set(report.cleaned_ids)
            assert not cleaned & set(irrelevant)
            for a, b in pairs:
                assert not (a in cleaned and b in cleaned)

    def test_prevalence_recorded_but_ids_untouched(self):
        manifest = make_manifest(100)
        report = build_clean_list(manifest, [], [], seed=0, label_error_count=7)
        assert report.label_error_count == 7
        assert report.label_error_prevalence == pytest.approx(0.07)
        assert len(report.cleaned_ids) == 100

    def test_clean_list_file_format(self, tmp_path):
        manifest = make_manifest(4)
        report = build_clean_list(manifest, ["s1"], [], seed=0)
        out = tmp_path / "clean.txt"
        write_clean_list(report, manifest, out)
        lines = out.read_text().splitlines()
        assert lines == ["img/s0.png", "img/s2.png", "img/s3.png"]


class TestPrevalence:
    def test_percentage_examples(self):
        assert estimate_label_error_prevalence(
            [f"s{i}" for i in range(15)], make_manifest(170)
        ) == pytest.approx(0.0882, abs=5e-4)
        assert estimate_label_error_prevalence([], make_manifest(200)) == 0.0
        assert estimate_label_error_prevalence(
            [f"s{i}" for i in range(8)], make_manifest(656)
        ) == pytest.approx(0.012, abs=5e-4)

    def test_unknown_id(self):
        with pytest.raises(UnknownId):
            estimate_label_error_prevalence(["bad"], make_manifest(2))
