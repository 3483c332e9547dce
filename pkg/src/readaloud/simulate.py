"""Whole-class simulation: scripted pupils play scripted sessions end to end.

Each simulated pupil gets a skill level drawn deterministically from the run
seed. Skill shows up in two ways, both of which the recognizer must cope
with: weak readers sometimes produce the utterance for a *different*
on-screen item (a misreading), and their clips carry more synthetic noise.
Everything downstream — classification, proficiency tracking, flagging,
game rounds, record keeping — runs through the real modules in-process.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import game_core
from .assessment import (
    Flag,
    PupilProfile,
    SessionConfig,
    SessionRecord,
    SessionScript,
    progression_check,
    run_session,
    step_clock,
)
from .audio import synth_utterance
from .errors import ReadAloudError
from .game_core import GameConfig
from .item_bank import ItemBank, PhonicsItem, band_items, default_bank
from .recognizer import Template, build_template
from .records import EventStore

# Noise applied to a zero-skill pupil's clips, in units of signal RMS.
NOISE_SCALE = 1.4
# Probability that a zero-skill pupil reads the wrong item off the screen.
MISREAD_SCALE = 0.6
# Pupils below this skill form the low-skill cohort in the report.
SKILL_SPLIT = 0.5


class SimulationError(ReadAloudError):
    pass


@dataclass(frozen=True)
class SimulationSpec:
    pupil_count: int = 30
    items_per_session: int = 9
    sessions_per_pupil: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.pupil_count < 1:
            raise SimulationError(f"pupil_count must be >= 1, got {self.pupil_count}")
        if self.items_per_session < 1 or self.sessions_per_pupil < 1:
            raise SimulationError("items_per_session and sessions_per_pupil must be >= 1")


@dataclass(frozen=True)
class SimulatedPupil:
    pupil_id: str
    skill: float
    ability_band: int = 1


@dataclass(frozen=True)
class PupilOutcome:
    pupil: SimulatedPupil
    profile: PupilProfile
    sessions: tuple[SessionRecord, ...]
    flags: tuple[Flag, ...]

    @property
    def attempt_count(self) -> int:
        return sum(len(s.attempts) for s in self.sessions)

    @property
    def correct_count(self) -> int:
        return sum(1 for s in self.sessions for a in s.attempts if a.correct)

    @property
    def mean_proficiency(self) -> float:
        if not self.profile.proficiency:
            return 0.0
        return sum(self.profile.proficiency.values()) / len(self.profile.proficiency)


@dataclass(frozen=True)
class SimulationResult:
    spec: SimulationSpec
    outcomes: tuple[PupilOutcome, ...]

    def cohorts(self) -> tuple[list[PupilOutcome], list[PupilOutcome]]:
        """(low-skill, high-skill) split at SKILL_SPLIT."""
        low = [o for o in self.outcomes if o.pupil.skill < SKILL_SPLIT]
        high = [o for o in self.outcomes if o.pupil.skill >= SKILL_SPLIT]
        return low, high

    def mean_flags(self, outcomes: list[PupilOutcome]) -> float:
        if not outcomes:
            return 0.0
        return sum(len(o.flags) for o in outcomes) / len(outcomes)


def cohort_pupils(spec: SimulationSpec) -> list[SimulatedPupil]:
    """The deterministic class roster for a spec: evenly spread skills, shuffled."""
    rng = random.Random(f"cohort:{spec.seed}")
    n = spec.pupil_count
    skills = [0.05 + 0.9 * (i / (n - 1) if n > 1 else 0.5) for i in range(n)]
    rng.shuffle(skills)
    return [
        SimulatedPupil(pupil_id=f"p{i + 1:03d}", skill=round(skills[i], 4))
        for i in range(n)
    ]


@dataclass
class _PupilReader:
    """Produces one pupil's utterances and launches for a session."""

    pupil: SimulatedPupil
    spec: SimulationSpec
    session_index: int
    bank: ItemBank

    def _rng(self, tag: str) -> random.Random:
        return random.Random(
            f"sim:{self.spec.seed}:{self.pupil.pupil_id}:{self.session_index}:{tag}"
        )

    def utterance_for(self, item: PhonicsItem):
        rng = self._rng(f"read:{item.item_id}")
        spoken_id = item.item_id
        if rng.random() < MISREAD_SCALE * (1.0 - self.pupil.skill):
            # a misreading: the pupil says some other item from their band
            others = [
                other.item_id
                for other in band_items(self.bank, item.band)
                if other.item_id != item.item_id
            ]
            if others:
                spoken_id = rng.choice(others)
        sigma = NOISE_SCALE * (1.0 - self.pupil.skill)
        clip_seed = rng.getrandbits(63)
        return synth_utterance(spoken_id, seed=clip_seed, noise_sigma=sigma)

    def launches_for(self, round_index: int, state: game_core.GameState):
        rng = self._rng(f"launch:{round_index}")
        launches = []
        power = state.power
        speed = 8.0
        while power >= speed and len(launches) < 4:
            launches.append((rng.uniform(25.0, 155.0), speed))
            power -= speed
        return launches

    def dwell_ms_for(self, item: PhonicsItem) -> int:
        rng = self._rng(f"dwell:{item.item_id}")
        base = 600.0 + 3600.0 * (1.0 - self.pupil.skill)
        return int(base + rng.uniform(-150.0, 150.0))


def build_cohort_templates(bank: ItemBank, seed: int) -> dict[str, Template]:
    return {
        item.item_id: build_template(item.item_id, synth_utterance(item.item_id, seed=seed))
        for item in bank.items
    }


def run_simulation(
    spec: SimulationSpec,
    bank: ItemBank | None = None,
    store: EventStore | None = None,
) -> SimulationResult:
    """Run the full cohort; optionally persist every event to a store."""
    bank = bank or default_bank()
    templates = build_cohort_templates(bank, seed=spec.seed + 7919)
    session_config = SessionConfig(items_per_session=spec.items_per_session)
    outcomes = []
    for pupil_index, pupil in enumerate(cohort_pupils(spec)):
        profile = PupilProfile(pupil_id=pupil.pupil_id, ability_band=pupil.ability_band)
        sessions = []
        try:
            for session_index in range(1, spec.sessions_per_pupil + 1):
                reader = _PupilReader(pupil, spec, session_index, bank)
                game_config = GameConfig(
                    seed=(spec.seed * 1_000_003 + pupil_index * 101 + session_index) & 0x7FFFFFFF
                )
                script = SessionScript(
                    utterance_for=reader.utterance_for,
                    launches_for=reader.launches_for,
                    dwell_ms_for=reader.dwell_ms_for,
                )
                result = run_session(
                    profile,
                    bank,
                    templates,
                    game_config,
                    session_config,
                    script,
                    session_id=f"{pupil.pupil_id}-s{session_index}",
                    helper_id="sim-helper",
                    clock=step_clock(start=float(session_index * 10_000), step=1.0),
                )
                profile = result.profile
                sessions.append(result.record)
                if store is not None:
                    _persist_session(store, result.record)
        except ReadAloudError as exc:
            raise SimulationError(f"pupil {pupil.pupil_id} (#{pupil_index}): {exc}") from exc
        flags = tuple(sessions[-1].flags_after) if sessions else ()
        if store is not None:
            for flag in flags:
                store.append(
                    pupil_id=pupil.pupil_id,
                    at=sessions[-1].ended_at,
                    kind="FlagRaised",
                    author="sim-helper",
                    payload=flag.to_payload(),
                )
        outcomes.append(PupilOutcome(pupil=pupil, profile=profile, sessions=tuple(sessions), flags=flags))
    return SimulationResult(spec=spec, outcomes=tuple(outcomes))


def _persist_session(store: EventStore, record: SessionRecord) -> None:
    bodies = [
        {
            "pupil_id": record.pupil_id,
            "at": attempt.presented_at,
            "kind": "AttemptLogged",
            "author": record.helper_id,
            "payload": attempt.to_payload(),
        }
        for attempt in record.attempts
    ]
    bodies.append(
        {
            "pupil_id": record.pupil_id,
            "at": record.ended_at,
            "kind": "SessionCompleted",
            "author": record.helper_id,
            "payload": record.to_payload(),
        }
    )
    store.append_many(bodies)


def render_report(result: SimulationResult, bank: ItemBank | None = None) -> str:
    """Stable plain-text class report: per-pupil lines, flag detail, summary."""
    bank = bank or default_bank()
    lines = []
    lines.append("[pupils]")
    lines.append("pupil_id\tskill\tband\tsessions\tattempts\tcorrect\tmean_proficiency\tflags\tprogression_ready")
    for outcome in sorted(result.outcomes, key=lambda o: o.pupil.pupil_id):
        config = SessionConfig(items_per_session=result.spec.items_per_session)
        ready = progression_check(outcome.profile, bank, config).ready
        lines.append(
            "\t".join(
                (
                    outcome.pupil.pupil_id,
                    f"{outcome.pupil.skill:.4f}",
                    str(outcome.pupil.ability_band),
                    str(len(outcome.sessions)),
                    str(outcome.attempt_count),
                    str(outcome.correct_count),
                    f"{outcome.mean_proficiency:.4f}",
                    str(len(outcome.flags)),
                    "yes" if ready else "no",
                )
            )
        )
    lines.append("")
    lines.append("[flags]")
    lines.append("pupil_id\trank\titem_id\tproficiency\tattempts")
    for outcome in sorted(result.outcomes, key=lambda o: o.pupil.pupil_id):
        for flag in outcome.flags:
            lines.append(
                "\t".join(
                    (
                        outcome.pupil.pupil_id,
                        str(flag.priority_rank),
                        flag.item_id,
                        f"{flag.proficiency:.4f}",
                        str(flag.attempts),
                    )
                )
            )
    lines.append("")
    lines.append("[summary]")
    low, high = result.cohorts()
    total_sessions = sum(len(o.sessions) for o in result.outcomes)
    total_attempts = sum(o.attempt_count for o in result.outcomes)
    flagged = sum(1 for o in result.outcomes if o.flags)
    lines.append(f"pupils\t{len(result.outcomes)}")
    lines.append(f"sessions\t{total_sessions}")
    lines.append(f"attempts\t{total_attempts}")
    lines.append(f"flagged_pupils\t{flagged}")
    lines.append(f"low_skill_pupils\t{len(low)}")
    lines.append(f"high_skill_pupils\t{len(high)}")
    lines.append(f"low_skill_mean_flags\t{result.mean_flags(low):.4f}")
    lines.append(f"high_skill_mean_flags\t{result.mean_flags(high):.4f}")
    return "\n".join(lines) + "\n"
