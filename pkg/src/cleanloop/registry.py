"""On-disk dataset registry and session orchestration.

Layout under the data directory:

    datasets/<name>/manifest.jsonl       ingested manifest copy
    datasets/<name>/embeddings.scem      ingested embeddings (binary)
    datasets/<name>/meta.json            {name, n, d, image_root, metric}
    datasets/<name>/rankings/<noise>.jsonl
    datasets/<name>/cleaned_<mode>.txt   written by clean()
    datasets/<name>/clean_report_<mode>.json
    sessions/<session_id>.jsonl          append-only event journals

Everything observable is reconstructible from these files alone: datasets
re-ingest from their copies and sessions replay their journals, so a restart
between acknowledged answers lands in an identical state.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import aggregation, protocol, rankers
from .aggregation import CleanReport, VerdictTable
from .data import (
    DatasetManifest,
    DistanceMatrix,
    EmbeddingMatrix,
    baseline_embed,
    load_embeddings,
    load_manifest,
    pairwise_distance,
    save_embeddings,
    save_manifest,
)
from .errors import (
    CorruptLog,
    DuplicateId,
    MissingLabel,
    OutOfRange,
    UnknownDataset,
    UnknownSession,
)
from .protocol import AnnotationSession, SessionLog, StoppingParams
from .rankers import NOISE_TYPES, CandidateRef, IssueRanking


@dataclass
class DatasetState:
    name: str
    manifest: DatasetManifest
    embeddings: EmbeddingMatrix
    image_root: Path
    metric: str = "cosine"
    distances: Optional[DistanceMatrix] = None
    rankings: dict[str, IssueRanking] = field(default_factory=dict)

    def distance_matrix(self) -> DistanceMatrix:
        if self.distances is None:
            self.distances = pairwise_distance(self.embeddings, self.metric)
        return self.distances


class Registry:
    """Desk-scale persistence: plain files, no database."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        (self.data_dir / "datasets").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "sessions").mkdir(parents=True, exist_ok=True)
        self._datasets: dict[str, DatasetState] = {}
        self._sessions: dict[str, tuple[AnnotationSession, SessionLog]] = {}
        self._lock = threading.Lock()
        self._session_locks: dict[str, threading.Lock] = {}

    # --- datasets -------------------------------------------------------

    def _dataset_dir(self, name: str) -> Path:
        return self.data_dir / "datasets" / name

    def dataset_names(self) -> list[str]:
        return sorted(p.name for p in (self.data_dir / "datasets").iterdir() if p.is_dir())

    def register_dataset(
        self,
        name: str,
        manifest_path: str | Path,
        embeddings_path: Optional[str | Path] = None,
        *,
        baseline_side: Optional[int] = None,
        image_root: Optional[str | Path] = None,
        metric: str = "cosine",
    ) -> DatasetState:
        if (embeddings_path is None) == (baseline_side is None):
            raise OutOfRange("provide exactly one of embeddings_path or baseline_side")
        ddir = self._dataset_dir(name)
        if ddir.exists():
            raise DuplicateId(f"dataset {name!r} already registered")
        manifest = load_manifest(manifest_path, name=name)
        root = Path(image_root) if image_root else Path(manifest_path).resolve().parent
        if embeddings_path is not None:
            emb = load_embeddings(embeddings_path, manifest)
        else:
            emb = baseline_embed(manifest, root, side=baseline_side)
        ddir.mkdir(parents=True)
        (ddir / "rankings").mkdir()
        save_manifest(manifest, ddir / "manifest.jsonl")
        save_embeddings(emb, ddir / "embeddings.scem")
        (ddir / "meta.json").write_text(
            json.dumps(
                {
                    "name": name,
                    "n": emb.n,
                    "d": emb.d,
                    "image_root": str(root),
                    "metric": metric,
                }
            )
            + "\n",
            encoding="utf-8",
        )
        state = DatasetState(
            name=name, manifest=manifest, embeddings=emb, image_root=root, metric=metric
        )
        with self._lock:
            self._datasets[name] = state
        return state

    def dataset(self, name: str) -> DatasetState:
        with self._lock:
            if name in self._datasets:
                return self._datasets[name]
        ddir = self._dataset_dir(name)
        if not (ddir / "meta.json").is_file():
            raise UnknownDataset(f"no dataset named {name!r}")
        meta = json.loads((ddir / "meta.json").read_text(encoding="utf-8"))
        manifest = load_manifest(ddir / "manifest.jsonl", name=name)
        emb = load_embeddings(ddir / "embeddings.scem", manifest)
        state = DatasetState(
            name=name,
            manifest=manifest,
            embeddings=emb,
            image_root=Path(meta["image_root"]),
            metric=meta.get("metric", "cosine"),
        )
        for noise_type in NOISE_TYPES:
            rpath = ddir / "rankings" / f"{noise_type}.jsonl"
            if rpath.is_file():
                state.rankings[noise_type] = rankers.load_ranking(
                    rpath, manifest.ids, noise_type
                )
        with self._lock:
            self._datasets[name] = state
        return state

    def compute_ranking(
        self, name: str, noise_type: str, metric: Optional[str] = None
    ) -> IssueRanking:
        state = self.dataset(name)
        if metric is not None and metric != state.metric:
            state.metric = metric
            state.distances = None
            meta_path = self._dataset_dir(name) / "meta.json"
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
            meta["metric"] = metric
            meta_path.write_text(json.dumps(meta) + "\n", encoding="utf-8")
        dist = state.distance_matrix()
        if noise_type == "label_error":
            labels = state.manifest.labels
            if any(l is None for l in labels):
                raise MissingLabel("manifest has unlabeled samples")
            ranking = rankers.rank_label_errors(dist, labels)
        else:
            ranking = rankers.rank(dist, noise_type)
        state.rankings[noise_type] = ranking
        rankers.save_ranking(
            ranking, state.manifest.ids, self._dataset_dir(name) / "rankings" / f"{noise_type}.jsonl"
        )
        return ranking

    def ranking(self, name: str, noise_type: str) -> IssueRanking:
        state = self.dataset(name)
        if noise_type not in state.rankings:
            raise UnknownDataset(
                f"dataset {name!r} has no {noise_type} ranking; compute it first"
            )
        return state.rankings[noise_type]

    def image_path(self, name: str, sample_id: str) -> Path:
        state = self.dataset(name)
        for rec in state.manifest.samples:
            if rec.id == sample_id:
                return state.image_root / rec.path
        raise UnknownDataset(f"no sample {sample_id!r} in dataset {name!r}")

    # --- sessions -------------------------------------------------------

    def _session_path(self, session_id: str) -> Path:
        return self.data_dir / "sessions" / f"{session_id}.jsonl"

    def _session_lock(self, session_id: str) -> threading.Lock:
        with self._lock:
            return self._session_locks.setdefault(session_id, threading.Lock())

    def create_session(
        self,
        dataset: str,
        noise_type: str,
        annotator: str,
        p_plus: float = protocol.DEFAULT_P_PLUS,
        p_chance: float = protocol.DEFAULT_P_CHANCE,
    ) -> AnnotationSession:
        state = self.dataset(dataset)
        ranking = self.ranking(dataset, noise_type)
        params = StoppingParams(p_plus=p_plus, p_chance=p_chance)
        session_id = uuid.uuid4().hex[:12]
        while self._session_path(session_id).exists():
            session_id = uuid.uuid4().hex[:12]
        session = protocol.start_session(
            annotator,
            ranking,
            params,
            session_id=session_id,
            dataset=dataset,
            sample_ids=state.manifest.ids,
        )
        log = SessionLog(self._session_path(session_id))
        log.log_start(session)
        with self._lock:
            self._sessions[session_id] = (session, log)
        return session

    def session(self, session_id: str) -> AnnotationSession:
        with self._lock:
            if session_id in self._sessions:
                return self._sessions[session_id][0]
        # serialize the lazy replay per session: two concurrent first touches
        # must not install two divergent live instances
        with self._session_lock(session_id):
            with self._lock:
                if session_id in self._sessions:
                    return self._sessions[session_id][0]
            path = self._session_path(session_id)
            if not path.is_file():
                raise UnknownSession(f"no session {session_id!r}")
            events = protocol.read_log_events(path)
            if not events:
                raise CorruptLog(f"{path}: empty session log")
            head = events[0]
            state = self.dataset(head["dataset"])
            ranking = self.ranking(head["dataset"], head["noise_type"])
            session = protocol.replay_session(events, ranking, state.manifest.ids)
            log = SessionLog(path)
            with self._lock:
                self._sessions[session_id] = (session, log)
        return session

    def next_candidate(self, session_id: str) -> Optional[CandidateRef]:
        return protocol.next_candidate(self.session(session_id))

    def submit_answer(
        self, session_id: str, candidate_ids: Sequence[str], verdict: str
    ) -> AnnotationSession:
        session = self.session(session_id)
        with self._session_lock(session_id):
            log = self._sessions[session_id][1]
            current = protocol.next_candidate(session)
            ref = self._ref_for_ids(session, candidate_ids, current)
            snapshot = (session.cursor, session.streak, session.status, len(session.verdicts))
            protocol.submit_answer(session, ref, verdict)
            try:
                # journal before acknowledging; an unjournaled transition must
                # not survive in memory either
                log.log_answer(session, ref, verdict)
            except Exception:
                session.cursor, session.streak, session.status = snapshot[:3]
                del session.verdicts[snapshot[3]:]
                raise
        return session

    @staticmethod
    def _ref_for_ids(
        session: AnnotationSession,
        candidate_ids: Sequence[str],
        current: Optional[CandidateRef],
    ) -> CandidateRef:
        if current is not None and list(candidate_ids) == session.candidate_ids(current):
            return current
        # not the cursor candidate: map ids to a ref so the protocol layer
        # can reject with its own stale/terminated error
        index = {sid: i for i, sid in enumerate(session.sample_ids)}
        try:
            idxs = sorted(index[sid] for sid in candidate_ids)
        except KeyError as exc:
            raise UnknownDataset(f"unknown sample id {exc.args[0]!r}") from exc
        if len(idxs) == 2 and idxs[0] != idxs[1]:
            return CandidateRef(kind="pair", i=idxs[0], j=idxs[1])
        if len(idxs) == 1:
            return CandidateRef(kind="single", i=idxs[0])
        raise OutOfRange(f"candidate must name 1 or 2 distinct samples, got {list(candidate_ids)}")

    def candidate_payload(self, session_id: str) -> dict:
        """Annotator-facing view of the cursor candidate; no rank, score, or streak."""
        session = self.session(session_id)
        ref = protocol.next_candidate(session)
        if ref is None:
            return {"status": session.status, "annotated_count": session.annotated_count}
        ids = session.candidate_ids(ref)
        payload = {
            "kind": ref.kind,
            "ids": ids,
            "image_urls": [f"/datasets/{session.dataset}/images/{sid}" for sid in ids],
        }
        if session.noise_type == "label_error":
            state = self.dataset(session.dataset)
            payload["label"] = state.manifest.samples[ref.i].label
        return {
            "candidate": payload,
            "question": protocol.QUESTIONS[session.noise_type],
        }

    def list_sessions(
        self, dataset: Optional[str] = None, noise_type: Optional[str] = None
    ) -> list[AnnotationSession]:
        """Sessions in start-timestamp order (ties by id), replayed as needed."""
        found: list[tuple[str, str, str]] = []
        for path in (self.data_dir / "sessions").glob("*.jsonl"):
            events = protocol.read_log_events(path)
            if not events:
                raise CorruptLog(f"{path}: empty session log")
            head = events[0]
            if dataset is not None and head.get("dataset") != dataset:
                continue
            if noise_type is not None and head.get("noise_type") != noise_type:
                continue
            found.append((head.get("ts", ""), path.stem, head["dataset"]))
        found.sort()
        return [self.session(sid) for _, sid, _ in found]

    # --- aggregation and cleaning ----------------------------------------

    def verdict_table(self, dataset: str, noise_type: str) -> VerdictTable:
        sessions = self.list_sessions(dataset, noise_type)
        return VerdictTable.from_sessions(sessions)

    def aggregate(self, dataset: str, mode: str) -> dict[str, list[CandidateRef]]:
        """Confirmed candidates per noise type that has any sessions."""
        out: dict[str, list[CandidateRef]] = {}
        for noise_type in NOISE_TYPES:
            sessions = self.list_sessions(dataset, noise_type)
            if sessions:
                out[noise_type] = aggregation.aggregate(sessions, mode)
        return out

    def clean(self, dataset: str, mode: str, seed: int) -> CleanReport:
        state = self.dataset(dataset)
        confirmed = self.aggregate(dataset, mode)
        ids = state.manifest.ids
        irrelevant = [ids[ref.i] for ref in confirmed.get("irrelevant", [])]
        pair_refs = confirmed.get("near_duplicate", [])
        if pair_refs:
            rank_of = {
                ref: pos for pos, (ref, _) in enumerate(self.ranking(dataset, "near_duplicate").entries)
            }
            pair_refs = sorted(pair_refs, key=lambda r: rank_of[r])
        pairs = [(ids[ref.i], ids[ref.j]) for ref in pair_refs]
        label_errors = [ids[ref.i] for ref in confirmed.get("label_error", [])]
        report = aggregation.build_clean_list(
            state.manifest,
            irrelevant,
            pairs,
            seed,
            mode=mode,
            label_error_count=len(label_errors),
        )
        ddir = self._dataset_dir(dataset)
        aggregation.write_clean_list(report, state.manifest, ddir / f"cleaned_{mode}.txt")
        aggregation.write_clean_report(report, ddir / f"clean_report_{mode}.json")
        return report
