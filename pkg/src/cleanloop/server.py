"""HTTP API over the registry.

Annotator-facing payloads never include rank, score, or streak; module
errors cross the boundary as {"error": {"code", "message"}} with a stable
machine code and no stack trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import errors as err
from . import report as report_mod
from . import stats as stats_mod
from .aggregation import MODES
from .evaluation import cleaning_delta, load_scores_csv
from .protocol import DEFAULT_P_CHANCE, DEFAULT_P_PLUS, sensitivity_sweep
from .rankers import NOISE_TYPES
from .registry import Registry

# every module error surfaces as exactly one (status, code) pair
_STATUS_BY_CODE = {
    err.UnknownDataset.code: 404,
    err.UnknownSession.code: 404,
    err.StaleCandidate.code: 409,
    err.SessionTerminated.code: 409,
    err.DuplicateId.code: 409,
    err.CorruptLog.code: 500,
}
_DEFAULT_STATUS = 422


@dataclass(frozen=True)
class ServerConfig:
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8008
    p_plus: float = DEFAULT_P_PLUS
    p_chance: float = DEFAULT_P_CHANCE
    ui_dir: Optional[Path] = None


class RegisterDatasetBody(BaseModel):
    name: str
    manifest: str
    embeddings: Optional[str] = None
    baseline_side: Optional[int] = None
    image_root: Optional[str] = None
    metric: str = "cosine"


class RankBody(BaseModel):
    noise_type: str
    metric: Optional[str] = None


class CreateSessionBody(BaseModel):
    dataset: str
    noise_type: str
    annotator: str
    p_plus: Optional[float] = None
    p_chance: Optional[float] = None


class AnswerBody(BaseModel):
    ids: list[str]
    verdict: str


class CleanBody(BaseModel):
    mode: str = "unanimous"
    seed: int = 0


class EvaluateBody(BaseModel):
    scores_csv: str
    mode: str = "unanimous"
    reps: int = 1000
    seed: int = 0


def _session_view(session) -> dict:
    # deliberately no streak, no per-candidate rank or score
    return {
        "session_id": session.session_id,
        "annotator": session.annotator_id,
        "dataset": session.dataset,
        "noise_type": session.noise_type,
        "status": session.status,
        "annotated_count": session.annotated_count,
        "pool_size": session.pool_size,
        "n_clean": session.params.n_clean,
        "p_plus": session.params.p_plus,
        "p_chance": session.params.p_chance,
    }


def _parse_grid(raw: Optional[str]) -> Optional[list[tuple[float, float]]]:
    if raw is None:
        return None
    grid = []
    for chunk in raw.replace(";", ",").split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) != 2:
            raise err.OutOfRange(f"grid point {chunk!r} must be 'p_chance:p_plus'")
        try:
            grid.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise err.OutOfRange(f"grid point {chunk!r} is not numeric") from exc
    return grid


def create_app(config: ServerConfig) -> FastAPI:
    registry = Registry(config.data_dir)
    app = FastAPI(title="cleanloop", version="0.1.0")

    @app.exception_handler(err.CleanloopError)
    async def _domain_error(_request: Request, exc: err.CleanloopError):
        status = _STATUS_BY_CODE.get(exc.code, _DEFAULT_STATUS)
        body = {"error": {"code": exc.code, "message": str(exc)}}
        if isinstance(exc, err.CorruptLog):
            body["error"]["recovery"] = (
                "the journal is damaged; truncate the file at the reported "
                "byte offset (or restore it from backup) and restart"
            )
        return JSONResponse(status_code=status, content=body)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/datasets")
    def register_dataset(body: RegisterDatasetBody):
        if (body.embeddings is None) == (body.baseline_side is None):
            raise err.OutOfRange("provide exactly one of 'embeddings' or 'baseline_side'")
        state = registry.register_dataset(
            body.name,
            body.manifest,
            body.embeddings,
            baseline_side=body.baseline_side,
            image_root=body.image_root,
            metric=body.metric,
        )
        return {"name": state.name, "n": state.embeddings.n, "d": state.embeddings.d}

    @app.get("/datasets")
    def list_datasets():
        return {"datasets": registry.dataset_names()}

    @app.post("/datasets/{name}/rank")
    def rank_dataset(name: str, body: RankBody):
        if body.noise_type not in NOISE_TYPES:
            raise err.OutOfRange(f"noise_type must be one of {NOISE_TYPES}")
        ranking = registry.compute_ranking(name, body.noise_type, body.metric)
        return {
            "dataset": name,
            "noise_type": body.noise_type,
            "pool_size": len(ranking),
        }

    @app.get("/datasets/{name}/images/{sample_id}")
    def image(name: str, sample_id: str):
        path = registry.image_path(name, sample_id)
        if not path.is_file():
            raise err.MissingImage(f"image for {sample_id!r} not found")
        return FileResponse(path)

    @app.post("/sessions")
    def create_session(body: CreateSessionBody):
        session = registry.create_session(
            body.dataset,
            body.noise_type,
            body.annotator,
            p_plus=body.p_plus if body.p_plus is not None else config.p_plus,
            p_chance=body.p_chance if body.p_chance is not None else config.p_chance,
        )
        return {"session_id": session.session_id, "n_clean": session.params.n_clean}

    @app.get("/sessions/{session_id}/next")
    def next_candidate(session_id: str):
        return registry.candidate_payload(session_id)

    @app.post("/sessions/{session_id}/answer")
    def answer(session_id: str, body: AnswerBody):
        session = registry.submit_answer(session_id, body.ids, body.verdict)
        return {"status": session.status, "annotated_count": session.annotated_count}

    @app.get("/sessions/{session_id}/status")
    def session_status(session_id: str):
        return _session_view(registry.session(session_id))

    @app.get("/sessions/{session_id}/sensitivity")
    def sensitivity(session_id: str, grid: Optional[str] = Query(default=None)):
        session = registry.session(session_id)
        from .protocol import default_sensitivity_grid

        parsed = _parse_grid(grid) or default_sensitivity_grid()
        verdicts = [v for _, v in session.verdicts]
        points = sensitivity_sweep(verdicts, parsed)
        return {
            "session_id": session_id,
            "points": [
                {
                    "p_chance": p.p_chance,
                    "p_plus": p.p_plus,
                    "n_clean": p.n_clean,
                    "confirmed": p.confirmed,
                    "stop_index": p.stop_index,
                    "lower_bound": p.lower_bound,
                }
                for p in points
            ],
        }

    @app.get("/datasets/{name}/aggregate")
    def aggregate(name: str, mode: str = Query(default="unanimous")):
        if mode not in MODES:
            raise err.OutOfRange(f"mode must be one of {MODES}")
        state = registry.dataset(name)
        ids = state.manifest.ids
        confirmed = registry.aggregate(name, mode)
        out: dict = {"dataset": name, "mode": mode}
        for noise_type, refs in confirmed.items():
            if noise_type == "near_duplicate":
                out[noise_type] = [[ids[r.i], ids[r.j]] for r in refs]
            else:
                out[noise_type] = [ids[r.i] for r in refs]
        return out

    @app.post("/datasets/{name}/clean")
    def clean(name: str, body: CleanBody):
        if body.mode not in MODES:
            raise err.OutOfRange(f"mode must be one of {MODES}")
        report = registry.clean(name, body.mode, body.seed)
        return report.to_dict()

    @app.get("/datasets/{name}/stats/agreement")
    def agreement(
        name: str,
        noise_type: Optional[str] = Query(default=None),
        reps: int = Query(default=stats_mod.DEFAULT_REPS),
        seed: int = Query(default=0),
    ):
        registry.dataset(name)
        kinds = [noise_type] if noise_type else list(NOISE_TYPES)
        out: dict = {"dataset": name}
        for kind in kinds:
            if registry.list_sessions(name, kind):
                out[kind] = report_mod.agreement_stats(
                    registry, name, kind, reps=reps, seed=seed
                )
        return out

    @app.post("/datasets/{name}/evaluate")
    def evaluate(name: str, body: EvaluateBody):
        if body.mode not in MODES:
            raise err.OutOfRange(f"mode must be one of {MODES}")
        registry.dataset(name)
        scored = load_scores_csv(body.scores_csv)
        clean_report = registry.clean(name, body.mode, body.seed)
        removed = set(clean_report.confirmed_irrelevant) | set(clean_report.removed_duplicates)
        deltas = cleaning_delta(scored, removed, reps=body.reps, seed=body.seed)
        return {
            "dataset": name,
            "mode": body.mode,
            "removed": sorted(removed),
            "deltas": {m: d.to_dict() for m, d in deltas.items()},
        }

    @app.get("/datasets/{name}/report")
    def dataset_report(
        name: str,
        reps: int = Query(default=stats_mod.DEFAULT_REPS),
        seed: int = Query(default=0),
    ):
        return report_mod.build_report(registry, name, reps=reps, seed=seed)

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    app.state.registry = registry
    app.state.config = config
    return app


def serve(config: ServerConfig) -> None:
    """Run the service; raises BindError when the port is taken."""
    import uvicorn

    app = create_app(config)
    try:
        uvicorn.run(app, host=config.host, port=config.port, log_level="info")
    except OSError as exc:
        raise err.BindError(f"cannot bind {config.host}:{config.port} ({exc})") from exc
