import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from cleanloop.data import DatasetManifest, SampleRecord, save_embeddings, EmbeddingMatrix
from cleanloop.protocol import StoppingParams, start_session
from cleanloop.rankers import CandidateRef, IssueRanking


def write_manifest(path: Path, records: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
    return path


def make_manifest(n: int, labels=None, name="t") -> DatasetManifest:
    return DatasetManifest(
        name=name,
        samples=tuple(
            SampleRecord(id=f"s{i}", path=f"img/s{i}.png", label=labels[i] if labels else None)
            for i in range(n)
        ),
    )


def make_single_ranking(n: int, noise_type: str = "irrelevant") -> IssueRanking:
    entries = tuple(
        (CandidateRef(kind="single", i=i), float(n - i)) for i in range(n)
    )
    return IssueRanking(noise_type=noise_type, entries=entries)


def make_session(n: int = 100, p_plus: float = 0.5, p_chance: float = 0.5, **kw):
    ranking = make_single_ranking(n, kw.pop("noise_type", "irrelevant"))
    return start_session(
        kw.pop("annotator", "a1"),
        ranking,
        StoppingParams(p_plus=p_plus, p_chance=p_chance),
        session_id=kw.pop("session_id", "sess1"),
        dataset=kw.pop("dataset", "t"),
        sample_ids=[f"s{i}" for i in range(n)],
    )


def params_for_n_clean(n: int) -> StoppingParams:
    # ln(p_chance)/ln(0.95) lands at n + 0.5, safely floored to n
    return StoppingParams(p_plus=0.05, p_chance=0.95 ** (n + 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tmp_embeddings(tmp_path):
    def _write(values: np.ndarray, name="emb.scem") -> Path:
        path = tmp_path / name
        save_embeddings(EmbeddingMatrix(values=values), path)
        return path

    return _write
