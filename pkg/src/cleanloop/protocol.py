"""Annotation sessions and the consecutive-negative stopping criterion.

A session walks one issue ranking strictly in order. Each "no" extends the
clean streak; each "yes" resets it. Once the streak reaches

    n_clean = floor(ln(p_chance) / ln(1 - p_plus))

the probability that the observed clean run arose by chance (given a
per-item issue probability of at most p_plus) is below p_chance and the
session stops. Defaults p_plus = p_chance = 0.05 give n_clean = 58.

Sessions are journaled to an append-only JSONL event log and can be
reconstructed from it after a crash; the reconstruction is exact because
streak and status are pure functions of the event sequence.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from .errors import (
    CorruptLog,
    EmptyGrid,
    EmptyRanking,
    OutOfRange,
    SessionTerminated,
    StaleCandidate,
)
from .rankers import CandidateRef, IssueRanking

DEFAULT_P_PLUS = 0.05
DEFAULT_P_CHANCE = 0.05

ACTIVE = "active"
STOPPED_BY_CRITERION = "stopped_by_criterion"
EXHAUSTED = "exhausted"

YES = "yes"
NO = "no"

# Binary prompts, one per noise type; byte-fixed because annotation clients
# must render them verbatim.
QUESTIONS = {
    "irrelevant": (
        "Your task is to judge if the image shown is irrelevant. "
        "Select yes when the image is not a valid input for the task at hand."
    ),
    "near_duplicate": (
        "Your task is to judge whether the two images shown together are pictures "
        "of the same object. Note that pictures of the same object can be identical "
        "or different shots with the same object of interest."
    ),
    "label_error": (
        "Your task is to judge whether the image's label is correct. "
        "Please select that the label is an error only if you think it is wrong "
        "and not when there is low uncertainty or ambiguity."
    ),
}


def compute_n_clean(
    p_plus: float, p_chance: float, rounding: str = "floor"
) -> int:
    """Streak length after which the clean tail is significant at p_chance.

    The published constant (58 at the 0.05/0.05 defaults) comes from the
    floor form, which is the default; ceil is available because the
    underlying inequality arguably calls for it.
    """
    if not (0.0 < p_plus <= 1.0) or not (0.0 < p_chance <= 1.0):
        raise OutOfRange(f"p_plus and p_chance must lie in (0, 1], got ({p_plus}, {p_chance})")
    if rounding not in ("floor", "ceil"):
        raise OutOfRange(f"rounding must be 'floor' or 'ceil', got {rounding!r}")
    if p_plus == 1.0 or p_chance == 1.0:
        return 0
    ratio = math.log(p_chance) / math.log(1.0 - p_plus)
    return math.floor(ratio) if rounding == "floor" else math.ceil(ratio)


@dataclass(frozen=True)
class StoppingParams:
    p_plus: float = DEFAULT_P_PLUS
    p_chance: float = DEFAULT_P_CHANCE
    rounding: str = "floor"
    n_clean: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "n_clean", compute_n_clean(self.p_plus, self.p_chance, self.rounding)
        )


@dataclass
class AnnotationSession:
    """Mutable cursor over one ranking for one annotator.

    Invariants kept by submit_answer: cursor == len(verdicts) while active,
    streak == length of the trailing all-"no" run, and the session stops the
    moment the streak reaches params.n_clean (checked before exhaustion, so
    a streak completed on the final entry counts as a criterion stop).
    """

    session_id: str
    annotator_id: str
    dataset: str
    noise_type: str
    ranking: IssueRanking
    sample_ids: Sequence[str]
    params: StoppingParams = field(default_factory=StoppingParams)
    cursor: int = 0
    streak: int = 0
    verdicts: list[tuple[CandidateRef, str]] = field(default_factory=list)
    status: str = ACTIVE

    @property
    def pool_size(self) -> int:
        return len(self.ranking)

    @property
    def annotated_count(self) -> int:
        return len(self.verdicts)

    @property
    def fraction_annotated(self) -> float:
        return len(self.verdicts) / self.pool_size

    @property
    def confirmed(self) -> list[CandidateRef]:
        return [ref for ref, v in self.verdicts if v == YES]

    def candidate_ids(self, ref: CandidateRef) -> list[str]:
        return ref.ids(self.sample_ids)

    def verdict_map(self) -> dict[CandidateRef, str]:
        return dict(self.verdicts)


def start_session(
    annotator_id: str,
    ranking: IssueRanking,
    params: StoppingParams,
    *,
    session_id: str,
    dataset: str,
    sample_ids: Sequence[str],
) -> AnnotationSession:
    if len(ranking) == 0:
        raise EmptyRanking("cannot start a session over an empty ranking")
    session = AnnotationSession(
        session_id=session_id,
        annotator_id=annotator_id,
        dataset=dataset,
        noise_type=ranking.noise_type,
        ranking=ranking,
        sample_ids=sample_ids,
        params=params,
    )
    if params.n_clean == 0:
        # the empty streak already satisfies the criterion
        session.status = STOPPED_BY_CRITERION
    return session


def next_candidate(session: AnnotationSession) -> Optional[CandidateRef]:
    """Current candidate, or None once the session is terminal.

    The returned reference carries no rank or score; annotators must not see
    either.
    """
    if session.status != ACTIVE:
        return None
    return session.ranking.entries[session.cursor][0]


def submit_answer(
    session: AnnotationSession, candidate: CandidateRef, verdict: str
) -> str:
    """Record a verdict for the current candidate and advance; returns status."""
    if session.status != ACTIVE:
        raise SessionTerminated(f"session {session.session_id} is {session.status}")
    if verdict not in (YES, NO):
        raise OutOfRange(f"verdict must be 'yes' or 'no', got {verdict!r}")
    current = session.ranking.entries[session.cursor][0]
    if candidate != current:
        raise StaleCandidate(
            f"answer targets {candidate}, but the cursor is at {current}"
        )
    session.verdicts.append((candidate, verdict))
    session.cursor += 1
    session.streak = session.streak + 1 if verdict == NO else 0
    if session.streak >= session.params.n_clean:
        session.status = STOPPED_BY_CRITERION
    elif session.cursor >= len(session.ranking):
        session.status = EXHAUSTED
    return session.status


# --- event log ---------------------------------------------------------------

def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


class SessionLog:
    """Append-only JSONL journal; every line is fsynced before we return."""

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def _append(self, event: dict) -> None:
        with self.path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def log_start(self, session: AnnotationSession) -> None:
        self._append(
            {
                "ts": _now(),
                "session": session.session_id,
                "event": "start",
                "candidate": None,
                "verdict": None,
                "annotator": session.annotator_id,
                "dataset": session.dataset,
                "noise_type": session.noise_type,
                "p_plus": session.params.p_plus,
                "p_chance": session.params.p_chance,
                "rounding": session.params.rounding,
                "n_clean": session.params.n_clean,
            }
        )
        if session.status != ACTIVE:
            self.log_stop(session)

    def log_answer(self, session: AnnotationSession, candidate: CandidateRef, verdict: str) -> None:
        self._append(
            {
                "ts": _now(),
                "session": session.session_id,
                "event": "answer",
                "candidate": session.candidate_ids(candidate),
                "verdict": verdict,
            }
        )
        if session.status != ACTIVE:
            self.log_stop(session)

    def log_stop(self, session: AnnotationSession) -> None:
        self._append(
            {
                "ts": _now(),
                "session": session.session_id,
                "event": "stop",
                "candidate": None,
                "verdict": None,
                "status": session.status,
            }
        )


def read_log_events(path: str | Path) -> list[dict]:
    """Parse a session journal; a malformed or truncated line is fatal and is
    reported with its byte offset so the operator can truncate and recover."""
    raw = Path(path).read_bytes()
    events: list[dict] = []
    offset = 0
    while offset < len(raw):
        end = raw.find(b"\n", offset)
        if end == -1:
            raise CorruptLog(
                f"{path}: truncated final line at byte offset {offset}"
            )
        line = raw[offset:end]
        if line.strip():
            try:
                obj = json.loads(line.decode("utf-8"))
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise CorruptLog(
                    f"{path}: malformed event at byte offset {offset} ({exc})"
                ) from exc
            if not isinstance(obj, dict) or "event" not in obj:
                raise CorruptLog(f"{path}: non-event object at byte offset {offset}")
            events.append(obj)
        offset = end + 1
    return events


def replay_session(
    source: str | Path | Iterable[dict],
    ranking: IssueRanking,
    sample_ids: Sequence[str],
) -> AnnotationSession:
    """Rebuild a session from its journal; equals the live session field for field."""
    events = (
        read_log_events(source) if isinstance(source, (str, Path)) else list(source)
    )
    if not events:
        raise CorruptLog("empty event log")
    head = events[0]
    if head.get("event") != "start":
        raise CorruptLog("log does not begin with a start event")
    try:
        params = StoppingParams(
            p_plus=head["p_plus"],
            p_chance=head["p_chance"],
            rounding=head.get("rounding", "floor"),
        )
        session = start_session(
            head["annotator"],
            ranking,
            params,
            session_id=head["session"],
            dataset=head["dataset"],
            sample_ids=sample_ids,
        )
    except (KeyError, OutOfRange, EmptyRanking) as exc:
        raise CorruptLog(f"bad start event: {exc}") from exc
    if head.get("n_clean") is not None and head["n_clean"] != params.n_clean:
        raise CorruptLog(
            f"start event claims n_clean={head['n_clean']}, derived {params.n_clean}"
        )

    for ev in events[1:]:
        kind = ev.get("event")
        if kind == "answer":
            expected = next_candidate(session)
            if expected is None:
                raise CorruptLog("answer event after session terminated")
            if ev.get("candidate") != session.candidate_ids(expected):
                raise CorruptLog(
                    f"answer for {ev.get('candidate')} but cursor candidate is "
                    f"{session.candidate_ids(expected)}"
                )
            if ev.get("verdict") not in (YES, NO):
                raise CorruptLog(f"bad verdict {ev.get('verdict')!r}")
            submit_answer(session, expected, ev["verdict"])
        elif kind == "stop":
            if ev.get("status") != session.status:
                raise CorruptLog(
                    f"stop event claims {ev.get('status')!r}, state is {session.status!r}"
                )
        elif kind == "start":
            raise CorruptLog("duplicate start event")
        else:
            raise CorruptLog(f"unknown event type {kind!r}")
    return session


# --- parameter sensitivity ----------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    p_chance: float
    p_plus: float
    n_clean: int
    confirmed: int
    stop_index: Optional[int]  # 0-based count of verdicts consumed at the stop
    lower_bound: bool  # log ended before this n_clean could fire


def sensitivity_sweep(
    verdict_log: Sequence[str], grid: Sequence[tuple[float, float]]
) -> list[SweepPoint]:
    """Replay one annotator's verdict sequence under alternative stopping params.

    Grid points are (p_chance, p_plus) pairs. For each point the sequence is
    walked with that n_clean; the confirmed count is the number of "yes"
    verdicts seen strictly before the stop fires. If the log runs out while
    the replay is still active the count is only a lower bound and is flagged.
    """
    if not grid:
        raise EmptyGrid("sensitivity grid is empty")
    for v in verdict_log:
        if v not in (YES, NO):
            raise OutOfRange(f"verdict log entries must be 'yes'/'no', got {v!r}")
    points: list[SweepPoint] = []
    for p_chance, p_plus in grid:
        n_clean = compute_n_clean(p_plus, p_chance)
        confirmed = 0
        streak = 0
        stop_index: Optional[int] = None
        if n_clean == 0:
            stop_index = 0
        else:
            for idx, verdict in enumerate(verdict_log):
                if verdict == YES:
                    confirmed += 1
                    streak = 0
                else:
                    streak += 1
                if streak >= n_clean:
                    stop_index = idx + 1
                    break
        points.append(
            SweepPoint(
                p_chance=p_chance,
                p_plus=p_plus,
                n_clean=n_clean,
                confirmed=confirmed,
                stop_index=stop_index,
                lower_bound=stop_index is None,
            )
        )
    return points


def default_sensitivity_grid() -> list[tuple[float, float]]:
    """Default point plus one-at-a-time increases of each parameter to 1.0."""
    steps = (0.05, 0.1, 0.2, 0.5, 1.0)
    grid = [(DEFAULT_P_CHANCE, DEFAULT_P_PLUS)]
    grid += [(pc, DEFAULT_P_PLUS) for pc in steps[1:]]
    grid += [(DEFAULT_P_CHANCE, pp) for pp in steps[1:]]
    return grid
