"""Session plans and durable response records.

Both sessions and responses are append-only JSON Lines files; every write is
flushed and fsynced before the caller sees an acknowledgement, so accepted
responses survive a crash. A single lock serializes writers; reads of loaded
state are lock-free.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import secrets
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from phrasebreak.abx.manifest import StimulusManifest
from phrasebreak.errors import PhraseBreakError
from phrasebreak.evaluation import AbxComparison

CHOICES = ("A", "B", "none")
NO_PREFERENCE = "none"


class UnknownSessionError(PhraseBreakError):
    pass


class TrialOutOfRangeError(PhraseBreakError):
    pass


class DuplicateResponseError(PhraseBreakError):
    pass


class OutOfOrderError(PhraseBreakError):
    pass


@dataclass
class Trial:
    """One planned comparison with its per-session side assignment.

    condition_a/condition_b are the canonical manifest order; presented_a and
    presented_b say which condition actually plays as "Sample A"/"Sample B".
    The audio tokens are unguessable and hide condition identity from clients.
    """

    index: int
    story_id: str
    condition_a: str
    condition_b: str
    presented_a: str
    presented_b: str
    token_a: str
    token_b: str
    path_a: str
    path_b: str


@dataclass
class Session:
    session_id: str
    trials: list[Trial]
    created_at: str
    completed: bool = False
    answered: set[int] = field(default_factory=set)

    @property
    def trial_count(self) -> int:
        return len(self.trials)


@dataclass
class ResponseRecord:
    session_id: str
    trial: int
    story_id: str
    condition_a: str
    condition_b: str
    presented_choice: str
    preference: str
    responded_at: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def plan_session(manifest: StimulusManifest, session_id: str | None = None,
                 rng: random.Random | None = None) -> Session:
    """Build a session: every (story, comparison) pair once, shuffled, with a
    uniform per-trial side assignment."""
    session_id = session_id or secrets.token_urlsafe(12)
    if rng is None:
        # Session-specific seed: derived from the unguessable session id.
        seed = int.from_bytes(hashlib.sha256(session_id.encode()).digest()[:8], "big")
        rng = random.Random(seed)
    pairs = [
        (story, comparison)
        for story in manifest.stories
        for comparison in manifest.comparisons
    ]
    rng.shuffle(pairs)
    trials = []
    for index, (story, (cond_a, cond_b)) in enumerate(pairs):
        swap = rng.random() < 0.5
        presented_a, presented_b = (cond_b, cond_a) if swap else (cond_a, cond_b)
        trials.append(Trial(
            index=index,
            story_id=story.story_id,
            condition_a=cond_a,
            condition_b=cond_b,
            presented_a=presented_a,
            presented_b=presented_b,
            token_a=secrets.token_urlsafe(16),
            token_b=secrets.token_urlsafe(16),
            path_a=str(story.condition_audio[presented_a]),
            path_b=str(story.condition_audio[presented_b]),
        ))
    return Session(session_id=session_id, trials=trials, created_at=_utc_now())


class AbxStore:
    """Durable session and response storage over two JSONL files."""

    def __init__(self, responses_path, sessions_path=None):
        self.responses_path = Path(responses_path)
        self.sessions_path = (
            Path(sessions_path) if sessions_path is not None
            else self.responses_path.with_name(self.responses_path.name + ".sessions")
        )
        self._lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        self._load()

    def _load(self) -> None:
        if self.sessions_path.exists():
            with open(self.sessions_path, encoding="utf-8") as fh:
                for line_number, line in enumerate(fh, start=1):
                    if not line.strip():
                        continue
                    try:
                        event = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise ValueError(
                            f"{self.sessions_path}:{line_number}: corrupt session event: {exc}"
                        ) from exc
                    if event.get("type") == "session":
                        trials = [Trial(**t) for t in event["trials"]]
                        self.sessions[event["session_id"]] = Session(
                            session_id=event["session_id"],
                            trials=trials,
                            created_at=event["created_at"],
                        )
                    elif event.get("type") == "completed":
                        session = self.sessions.get(event["session_id"])
                        if session is not None:
                            session.completed = True
        if self.responses_path.exists():
            for record in read_response_records(self.responses_path):
                session = self.sessions.get(record.session_id)
                if session is not None:
                    session.answered.add(record.trial)

    def _append(self, path: Path, payload: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(payload + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def create_session(self, manifest: StimulusManifest,
                       rng: random.Random | None = None) -> Session:
        """Plan and persist a new session; durable before it is returned."""
        session = plan_session(manifest, rng=rng)
        event = {
            "type": "session",
            "session_id": session.session_id,
            "created_at": session.created_at,
            "trials": [asdict(t) for t in session.trials],
        }
        with self._lock:
            self._append(self.sessions_path, json.dumps(event, ensure_ascii=False))
            self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        session = self.sessions.get(session_id)
        if session is None:
            raise UnknownSessionError(f"unknown session {session_id!r}")
        return session

    def find_audio(self, token: str) -> str | None:
        for session in self.sessions.values():
            for trial in session.trials:
                if trial.token_a == token:
                    return trial.path_a
                if trial.token_b == token:
                    return trial.path_b
        return None

    def record_response(self, session_id: str, trial_index: int, choice: str,
                        enforce_order: bool = True) -> ResponseRecord:
        """Durably record one choice, resolving the side assignment.

        The stored preference is the canonical condition name (or "none"),
        whatever side it was presented on.
        """
        if choice not in CHOICES:
            raise ValueError(f"choice must be one of {CHOICES}, got {choice!r}")
        session = self.get_session(session_id)
        if not 0 <= trial_index < session.trial_count:
            raise TrialOutOfRangeError(
                f"trial {trial_index} out of range [0, {session.trial_count})"
            )
        with self._lock:
            if trial_index in session.answered:
                raise DuplicateResponseError(
                    f"trial {trial_index} of session {session_id} already answered"
                )
            if enforce_order:
                expected = min(set(range(session.trial_count)) - session.answered)
                if trial_index != expected:
                    raise OutOfOrderError(
                        f"trial {trial_index} submitted but trial {expected} is next"
                    )
            trial = session.trials[trial_index]
            if choice == "A":
                preference = trial.presented_a
            elif choice == "B":
                preference = trial.presented_b
            else:
                preference = NO_PREFERENCE
            record = ResponseRecord(
                session_id=session_id,
                trial=trial_index,
                story_id=trial.story_id,
                condition_a=trial.condition_a,
                condition_b=trial.condition_b,
                presented_choice=choice,
                preference=preference,
                responded_at=_utc_now(),
            )
            self._append(self.responses_path, record.to_json())
            session.answered.add(trial_index)
            if len(session.answered) == session.trial_count:
                session.completed = True
                self._append(
                    self.sessions_path,
                    json.dumps({"type": "completed", "session_id": session_id}),
                )
        return record

    def export_raw(self) -> str:
        """The raw response log, byte-for-byte."""
        if not self.responses_path.exists():
            return ""
        with open(self.responses_path, encoding="utf-8") as fh:
            return fh.read()


def read_response_records(path) -> list[ResponseRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
                record = ResponseRecord(**doc)
            except (json.JSONDecodeError, TypeError) as exc:
                raise ValueError(f"{path}:{line_number}: corrupt response record: {exc}") from exc
            if record.presented_choice not in CHOICES:
                raise ValueError(
                    f"{path}:{line_number}: bad choice {record.presented_choice!r}"
                )
            records.append(record)
    return records


def aggregate_records(records: list[ResponseRecord]) -> list[AbxComparison]:
    """Fold records into per-comparison counts, canonical condition order.

    Comparisons appear in first-seen order; count_a counts preferences for
    condition_a regardless of presentation side.
    """
    order: list[tuple[str, str]] = []
    tallies: dict[tuple[str, str], dict[str, int]] = {}
    for record in records:
        key = (record.condition_a, record.condition_b)
        if key not in tallies:
            order.append(key)
            tallies[key] = {"a": 0, "b": 0, "none": 0}
        if record.preference == record.condition_a:
            tallies[key]["a"] += 1
        elif record.preference == record.condition_b:
            tallies[key]["b"] += 1
        elif record.preference == NO_PREFERENCE:
            tallies[key]["none"] += 1
        else:
            raise ValueError(
                f"record for {key} prefers unknown condition {record.preference!r}"
            )
    return [
        AbxComparison(
            name_a=key[0], name_b=key[1],
            count_a=tallies[key]["a"], count_b=tallies[key]["b"],
            count_none=tallies[key]["none"],
        )
        for key in order
    ]


def export_responses(path) -> tuple[list[AbxComparison], list[ResponseRecord]]:
    """Aggregate a response log into comparisons, keeping the raw records."""
    records = read_response_records(path)
    return aggregate_records(records), records
