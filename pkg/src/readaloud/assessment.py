"""Reading-session orchestration and per-item proficiency tracking.

Proficiency per item is an exponential moving average of correct/incorrect
observations: transparent to teachers, trivial to audit, and monotone in the
right direction for a single observation. Items with enough evidence and a
low estimate turn into prioritized flags; a fully-practised band at a high
mean estimate marks the pupil ready for the next band.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from . import game_core
from .audio import AudioClip, loudness_dbfs
from .errors import ReadAloudError
from .game_core import GameConfig, GameEvent, GameState
from .item_bank import ItemBank, PhonicsItem, SelectionRequest, band_items, select_items
from .recognizer import (
    DEFAULT_REJECT_THRESHOLD,
    FeatureSequence,
    RecognitionResult,
    Template,
    classify,
    extract_features,
)

Clock = Callable[[], float]


class AssessmentError(ReadAloudError):
    pass


class RangeError(AssessmentError):
    pass


class SessionError(AssessmentError):
    """Failure while running a session, annotated with the session position."""


@dataclass(frozen=True)
class SessionConfig:
    flag_threshold: float = 0.5
    min_attempts: int = 3
    ema_alpha: float = 0.3
    prior_proficiency: float = 0.5
    progress_threshold: float = 0.8
    progress_min_attempts_per_item: int = 2
    items_per_session: int = 9
    reject_threshold: float = DEFAULT_REJECT_THRESHOLD

    def __post_init__(self):
        for name in ("flag_threshold", "ema_alpha", "prior_proficiency", "progress_threshold"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise RangeError(f"{name} must be in (0, 1), got {v}")
        for name in ("min_attempts", "progress_min_attempts_per_item", "items_per_session"):
            if getattr(self, name) < 1:
                raise RangeError(f"{name} must be >= 1")


@dataclass(frozen=True)
class PupilProfile:
    pupil_id: str
    ability_band: int = 1
    proficiency: dict[str, float] = field(default_factory=dict)
    attempts: dict[str, int] = field(default_factory=dict)
    confidence_history: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class Attempt:
    session_id: str
    item_id: str
    presented_at: float
    result: RecognitionResult
    correct: bool
    gaze_dwell_ms: int | None = None
    confidence: float | None = None

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "item_id": self.item_id,
            "presented_at": self.presented_at,
            "result": self.result.to_payload(),
            "correct": self.correct,
            "gaze_dwell_ms": self.gaze_dwell_ms,
            "confidence": self.confidence,
        }


@dataclass(frozen=True)
class Flag:
    pupil_id: str
    item_id: str
    proficiency: float
    attempts: int
    priority_rank: int
    raised_at: float

    def to_payload(self) -> dict:
        return {
            "pupil_id": self.pupil_id,
            "item_id": self.item_id,
            "proficiency": self.proficiency,
            "attempts": self.attempts,
            "priority_rank": self.priority_rank,
            "raised_at": self.raised_at,
        }


@dataclass(frozen=True)
class ProgressionResult:
    ready: bool
    band: int


def update_proficiency(prior: float, correct: bool, alpha: float) -> float:
    """EMA update: (1-alpha)*prior + alpha*(1 if correct else 0)."""
    if not (0.0 <= prior <= 1.0):
        raise RangeError(f"prior must be in [0, 1], got {prior}")
    if not (0.0 < alpha < 1.0):
        raise RangeError(f"alpha must be in (0, 1), got {alpha}")
    return (1.0 - alpha) * prior + (alpha if correct else 0.0)


def _clamp01(v: float) -> float:
    return min(1.0, max(0.0, v))


def confidence_index(
    gaze_dwell_ms: float | None = None,
    loudness_dbfs: float | None = None,
) -> float | None:
    """Blend dwell time (shorter is surer) and loudness (louder is surer).

    Loudness maps linearly from -60 dBFS to -20 dBFS onto [0, 1]; dwell maps
    0-5000 ms onto [1, 0]. Both present: equal-weight mean. One present: that
    component alone. Neither: None.
    """
    loud_component = None
    dwell_component = None
    if loudness_dbfs is not None:
        if loudness_dbfs > 0:
            raise RangeError(f"loudness_dbfs must be <= 0, got {loudness_dbfs}")
        loud_component = _clamp01((loudness_dbfs + 60.0) / 40.0)
    if gaze_dwell_ms is not None:
        if gaze_dwell_ms < 0:
            raise RangeError(f"gaze_dwell_ms must be >= 0, got {gaze_dwell_ms}")
        dwell_component = 1.0 - _clamp01(gaze_dwell_ms / 5000.0)
    if loud_component is None and dwell_component is None:
        return None
    if loud_component is None:
        return dwell_component
    if dwell_component is None:
        return loud_component
    return 0.5 * loud_component + 0.5 * dwell_component


def build_attempt(
    session_id: str,
    item_id: str,
    presented_at: float,
    result: RecognitionResult,
    gaze_dwell_ms: int | None = None,
) -> Attempt:
    """Attempt record from a recognition result; accepted-as-other-item is incorrect."""
    return Attempt(
        session_id=session_id,
        item_id=item_id,
        presented_at=presented_at,
        result=result,
        correct=result.accepted and result.item_id == item_id,
        gaze_dwell_ms=gaze_dwell_ms,
        confidence=confidence_index(gaze_dwell_ms, result.loudness_dbfs),
    )


def attempt_from_payload(payload: dict) -> Attempt:
    """Inverse of Attempt.to_payload, for rebuilding profiles from stored events."""
    result = payload.get("result", {})
    return Attempt(
        session_id=payload["session_id"],
        item_id=payload["item_id"],
        presented_at=payload["presented_at"],
        result=RecognitionResult(
            item_id=result.get("item_id"),
            best_score=result.get("best_score", 0.0),
            per_candidate_scores=dict(result.get("per_candidate_scores", {})),
            loudness_dbfs=result.get("loudness_dbfs"),
        ),
        correct=bool(payload["correct"]),
        gaze_dwell_ms=payload.get("gaze_dwell_ms"),
        confidence=payload.get("confidence"),
    )


def record_attempt(profile: PupilProfile, attempt: Attempt, config: SessionConfig) -> PupilProfile:
    """Fold one attempt into the profile; touches only the attempted item."""
    prior = profile.proficiency.get(attempt.item_id, config.prior_proficiency)
    proficiency = dict(profile.proficiency)
    proficiency[attempt.item_id] = update_proficiency(prior, attempt.correct, config.ema_alpha)
    attempts = dict(profile.attempts)
    attempts[attempt.item_id] = attempts.get(attempt.item_id, 0) + 1
    history = profile.confidence_history
    if attempt.confidence is not None:
        history = history + ((attempt.presented_at, attempt.confidence),)
    return replace(profile, proficiency=proficiency, attempts=attempts, confidence_history=history)


def generate_flags(profile: PupilProfile, config: SessionConfig, now: float = 0.0) -> list[Flag]:
    """Prioritized concerns: weak items with enough evidence, weakest first.

    Ordering is total and deterministic: ascending proficiency, then
    descending attempts, then item_id.
    """
    weak = [
        (item_id, profile.proficiency[item_id], profile.attempts.get(item_id, 0))
        for item_id in profile.proficiency
        if profile.attempts.get(item_id, 0) >= config.min_attempts
        and profile.proficiency[item_id] < config.flag_threshold
    ]
    weak.sort(key=lambda row: (row[1], -row[2], row[0]))
    return [
        Flag(
            pupil_id=profile.pupil_id,
            item_id=item_id,
            proficiency=prof,
            attempts=att,
            priority_rank=rank,
            raised_at=now,
        )
        for rank, (item_id, prof, att) in enumerate(weak, start=1)
    ]


def progression_check(profile: PupilProfile, bank: ItemBank, config: SessionConfig) -> ProgressionResult:
    """Ready when every item of the current band is practised and the mean is high."""
    items = band_items(bank, profile.ability_band)
    practised = all(
        profile.attempts.get(it.item_id, 0) >= config.progress_min_attempts_per_item
        for it in items
    )
    if practised:
        mean = sum(
            profile.proficiency.get(it.item_id, config.prior_proficiency) for it in items
        ) / len(items)
        ready = mean >= config.progress_threshold
    else:
        ready = False
    band = profile.ability_band
    if ready and (band + 1) in bank.bands:
        band += 1
    return ProgressionResult(ready=ready, band=band)


def step_clock(start: float = 0.0, step: float = 1.0) -> Clock:
    """Deterministic clock for scripted sessions: start, start+step, ..."""
    state = {"t": start - step}

    def clock() -> float:
        state["t"] += step
        return state["t"]

    return clock


@dataclass(frozen=True)
class SessionScript:
    """Inputs for one scripted session.

    ``utterance_for`` supplies the pupil's reading of a presented item (a
    clip, or pre-extracted features). ``launches_for`` is consulted at the
    start of each firing phase with the game state and must return commands
    affordable at that state. ``dwell_ms_for`` supplies optional gaze dwell.
    """

    utterance_for: Callable[[PhonicsItem], AudioClip | FeatureSequence]
    launches_for: Callable[[int, GameState], Iterable[tuple[float, float]]] = lambda r, s: ()
    dwell_ms_for: Callable[[PhonicsItem], int | None] = lambda item: None


@dataclass(frozen=True)
class RoundRecord:
    round_index: int
    items: tuple[str, ...]
    events: tuple[GameEvent, ...]
    score: int


@dataclass(frozen=True)
class SessionRecord:
    session_id: str
    pupil_id: str
    helper_id: str
    started_at: float
    ended_at: float
    attempts: tuple[Attempt, ...]
    rounds: tuple[RoundRecord, ...]
    final_score: int
    flags_after: tuple[Flag, ...]

    @property
    def game_events(self) -> list[tuple[int, GameEvent]]:
        """All game events in order, tagged with their round index."""
        return [(rr.round_index, ev) for rr in self.rounds for ev in rr.events]

    def to_payload(self) -> dict:
        return {
            "session_id": self.session_id,
            "pupil_id": self.pupil_id,
            "helper_id": self.helper_id,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
            "attempts": [a.to_payload() for a in self.attempts],
            "rounds": [
                {
                    "round_index": rr.round_index,
                    "items": list(rr.items),
                    "events": [ev.to_payload() for ev in rr.events],
                    "score": rr.score,
                }
                for rr in self.rounds
            ],
            "final_score": self.final_score,
            "flags_after": [f.to_payload() for f in self.flags_after],
        }


@dataclass(frozen=True)
class SessionResult:
    record: SessionRecord
    profile: PupilProfile
    final_state: GameState


def session_rounds(items_per_session: int, per_round: int) -> list[int]:
    """Item counts per round; the last round absorbs any remainder."""
    full, rest = divmod(items_per_session, per_round)
    counts = [per_round] * full
    if rest:
        counts.append(rest)
    return counts


def run_session(
    profile: PupilProfile,
    bank: ItemBank,
    templates: dict[str, Template],
    game_config: GameConfig,
    session_config: SessionConfig,
    script: SessionScript,
    *,
    session_id: str = "session",
    helper_id: str = "helper",
    clock: Clock | None = None,
) -> SessionResult:
    """Run one full scripted session: rounds of read-then-fire.

    Each round is an independent game (the game phase machine never runs
    backwards); the session seeds round r with game_config.seed + r and
    excludes items already presented. The candidate set for each attempt is
    the round's on-screen items plus the presented item.
    """
    clock = clock or step_clock()
    started_at = clock()
    attempts: list[Attempt] = []
    rounds: list[RoundRecord] = []
    presented: set[str] = set()
    final_state: GameState | None = None

    counts = session_rounds(session_config.items_per_session, game_config.bubbles_per_powerup_phase)
    for round_index, count in enumerate(counts, start=1):
        where = f"round {round_index}"
        try:
            items = select_items(
                bank,
                SelectionRequest(
                    target_band=profile.ability_band,
                    count=count,
                    seed=game_config.seed + round_index,
                    exclude=frozenset(presented),
                ),
            )
        except ReadAloudError as exc:
            raise SessionError(f"{where}: item selection failed: {exc}") from exc

        round_config = replace(
            game_config,
            bubbles_per_powerup_phase=len(items),
            seed=game_config.seed + round_index,
        )
        state = game_core.new_game(round_config)

        candidate_ids = {it.item_id for it in items}
        for item in items:
            where = f"round {round_index}, item {item.item_id}"
            candidates = []
            for cid in sorted(candidate_ids | {item.item_id}):
                tpl = templates.get(cid)
                if tpl is None:
                    raise SessionError(f"{where}: no template for candidate {cid!r}")
                candidates.append(tpl)
            spoken = script.utterance_for(item)
            if isinstance(spoken, AudioClip):
                features = extract_features(spoken)
                loud = loudness_dbfs(spoken)
            else:
                features, loud = spoken, None
            try:
                result = classify(features, candidates, session_config.reject_threshold)
            except ReadAloudError as exc:
                raise SessionError(f"{where}: classification failed: {exc}") from exc
            result = RecognitionResult(
                item_id=result.item_id,
                best_score=result.best_score,
                per_candidate_scores=result.per_candidate_scores,
                loudness_dbfs=loud,
            )
            attempt = build_attempt(
                session_id, item.item_id, clock(), result, script.dwell_ms_for(item)
            )
            attempts.append(attempt)
            profile = record_attempt(profile, attempt, session_config)
            presented.add(item.item_id)
            state = game_core.apply_reading_outcome(state, attempt.correct)

        for angle_deg, speed in script.launches_for(round_index, state):
            where = f"round {round_index}, launch at tick {state.tick_index}"
            try:
                state = game_core.launch_bubble(state, angle_deg, speed)
            except ReadAloudError as exc:
                raise SessionError(f"{where}: {exc}") from exc
            state = game_core.run_until_resolved(state)
            if state.phase == game_core.PHASE_OVER:
                break

        rounds.append(
            RoundRecord(
                round_index=round_index,
                items=tuple(it.item_id for it in items),
                events=state.event_log,
                score=state.score,
            )
        )
        final_state = state

    flags = generate_flags(profile, session_config, now=clock())
    record = SessionRecord(
        session_id=session_id,
        pupil_id=profile.pupil_id,
        helper_id=helper_id,
        started_at=started_at,
        ended_at=clock(),
        attempts=tuple(attempts),
        rounds=tuple(rounds),
        final_score=sum(rr.score for rr in rounds),
        flags_after=tuple(flags),
    )
    return SessionResult(record=record, profile=profile, final_state=final_state)
