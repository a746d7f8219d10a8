"""Operator CLI. A thin client over the core modules (not over HTTP), so the
full pipeline runs without the service started."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import protocol, report as report_mod, stats as stats_mod, synthetic
from .aggregation import MODES
from .errors import CleanloopError
from .evaluation import cleaning_delta, load_scores_csv
from .rankers import NOISE_TYPES
from .registry import Registry
from .server import ServerConfig, serve as run_server


def _registry(data_dir: str) -> Registry:
    return Registry(Path(data_dir))


def _echo_json(obj) -> None:
    click.echo(json.dumps(obj, indent=2))


@click.group()
def main():
    """Dataset-cleaning protocol engine."""


@main.command()
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--name", required=True)
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--embeddings", "embeddings_path", type=click.Path(exists=True), default=None)
@click.option("--baseline-side", type=int, default=None, help="Use the pixel baseline embedder at this resolution.")
@click.option("--image-root", type=click.Path(), default=None)
@click.option("--metric", type=click.Choice(["cosine", "euclidean"]), default="cosine")
def ingest(data_dir, name, manifest_path, embeddings_path, baseline_side, image_root, metric):
    """Register a dataset from a manifest plus embeddings or the pixel baseline."""
    state = _registry(data_dir).register_dataset(
        name,
        manifest_path,
        embeddings_path,
        baseline_side=baseline_side,
        image_root=image_root,
        metric=metric,
    )
    _echo_json({"name": state.name, "n": state.embeddings.n, "d": state.embeddings.d})


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--name", required=True)
@click.option("--noise-type", type=click.Choice(list(NOISE_TYPES)), required=True)
@click.option("--metric", type=click.Choice(["cosine", "euclidean"]), default=None)
def rank(data_dir, name, noise_type, metric):
    """Compute and persist the candidate ranking for one noise type."""
    ranking = _registry(data_dir).compute_ranking(name, noise_type, metric)
    _echo_json({"dataset": name, "noise_type": noise_type, "pool_size": len(ranking)})


@main.command()
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8008, type=int)
@click.option("--p-plus", default=protocol.DEFAULT_P_PLUS, type=float)
@click.option("--p-chance", default=protocol.DEFAULT_P_CHANCE, type=float)
@click.option("--ui-dir", type=click.Path(), default=None)
def serve(data_dir, host, port, p_plus, p_chance, ui_dir):
    """Run the annotation service."""
    run_server(
        ServerConfig(
            data_dir=Path(data_dir),
            host=host,
            port=port,
            p_plus=p_plus,
            p_chance=p_chance,
            ui_dir=Path(ui_dir) if ui_dir else None,
        )
    )


@main.command("simulate-annotator")
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--noise-type", type=click.Choice(list(NOISE_TYPES)), required=True)
@click.option("--annotator", required=True)
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True),
              help="JSON ground truth: ids (or id pairs) that get a 'yes'.")
@click.option("--p-plus", default=protocol.DEFAULT_P_PLUS, type=float)
@click.option("--p-chance", default=protocol.DEFAULT_P_CHANCE, type=float)
def simulate_annotator(data_dir, dataset, noise_type, annotator, truth_path, p_plus, p_chance):
    """Run a scripted session: answer 'yes' exactly for the listed candidates."""
    registry = _registry(data_dir)
    truth = synthetic.load_truth(truth_path)
    yes_singles = set(getattr(truth, noise_type)) if noise_type != "near_duplicate" else set()
    yes_pairs = {frozenset(p) for p in truth.near_duplicate} if noise_type == "near_duplicate" else set()
    session = registry.create_session(dataset, noise_type, annotator, p_plus, p_chance)
    while True:
        ref = registry.next_candidate(session.session_id)
        if ref is None:
            break
        ids = session.candidate_ids(ref)
        is_issue = (
            frozenset(ids) in yes_pairs if ref.kind == "pair" else ids[0] in yes_singles
        )
        registry.submit_answer(session.session_id, ids, "yes" if is_issue else "no")
    _echo_json(
        {
            "session_id": session.session_id,
            "status": session.status,
            "annotated": session.annotated_count,
            "confirmed": len(session.confirmed),
            "pool_size": session.pool_size,
        }
    )


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--mode", type=click.Choice(list(MODES)), default="unanimous")
def aggregate(data_dir, dataset, mode):
    """Print confirmed candidates per noise type."""
    registry = _registry(data_dir)
    state = registry.dataset(dataset)
    ids = state.manifest.ids
    out: dict = {"dataset": dataset, "mode": mode}
    for noise_type, refs in registry.aggregate(dataset, mode).items():
        if noise_type == "near_duplicate":
            out[noise_type] = [[ids[r.i], ids[r.j]] for r in refs]
        else:
            out[noise_type] = [ids[r.i] for r in refs]
    _echo_json(out)


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--mode", type=click.Choice(list(MODES)), default="unanimous")
@click.option("--seed", default=0, type=int)
def clean(data_dir, dataset, mode, seed):
    """Write the cleaned file list and report; print the report."""
    report = _registry(data_dir).clean(dataset, mode, seed)
    _echo_json(report.to_dict())


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--noise-type", type=click.Choice(list(NOISE_TYPES)), default=None)
@click.option("--reps", default=stats_mod.DEFAULT_REPS, type=int)
@click.option("--seed", default=0, type=int)
def stats(data_dir, dataset, noise_type, reps, seed):
    """Inter-annotator agreement statistics."""
    registry = _registry(data_dir)
    kinds = [noise_type] if noise_type else list(NOISE_TYPES)
    out: dict = {"dataset": dataset}
    for kind in kinds:
        if registry.list_sessions(dataset, kind):
            out[kind] = report_mod.agreement_stats(registry, dataset, kind, reps=reps, seed=seed)
    _echo_json(out)


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--session", "session_id", required=True)
@click.option("--grid", default=None, help="Comma-separated p_chance:p_plus pairs.")
def sensitivity(data_dir, session_id, grid):
    """Replay a session's verdicts under alternative stopping parameters."""
    registry = _registry(data_dir)
    session = registry.session(session_id)
    from .server import _parse_grid

    points = protocol.sensitivity_sweep(
        [v for _, v in session.verdicts],
        _parse_grid(grid) or protocol.default_sensitivity_grid(),
    )
    _echo_json(
        {
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
    )


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True))
@click.option("--mode", type=click.Choice(list(MODES)), default="unanimous")
@click.option("--reps", default=1000, type=int)
@click.option("--seed", default=0, type=int)
def evaluate(data_dir, dataset, scores_path, mode, reps, seed):
    """Before/after-cleaning performance deltas for external model scores."""
    registry = _registry(data_dir)
    scored = load_scores_csv(scores_path)
    clean_report = registry.clean(dataset, mode, seed)
    removed = set(clean_report.confirmed_irrelevant) | set(clean_report.removed_duplicates)
    deltas = cleaning_delta(scored, removed, reps=reps, seed=seed)
    _echo_json(
        {
            "dataset": dataset,
            "mode": mode,
            "removed": sorted(removed),
            "deltas": {m: d.to_dict() for m, d in deltas.items()},
        }
    )


@main.command()
@click.option("--data-dir", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True)
@click.option("--reps", default=stats_mod.DEFAULT_REPS, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", "out_path", type=click.Path(), default=None)
def report(data_dir, dataset, reps, seed, out_path):
    """Full statistics report: issues, agreement, speed-up, ranking quality."""
    payload = report_mod.build_report(_registry(data_dir), dataset, reps=reps, seed=seed)
    if out_path:
        Path(out_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
        click.echo(f"report written to {out_path}")
    else:
        _echo_json(payload)


def run() -> None:
    try:
        main(standalone_mode=True)
    except CleanloopError as exc:
        click.echo(f"error [{exc.code}]: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    run()
