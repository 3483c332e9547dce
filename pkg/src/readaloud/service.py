"""HTTP facade: helpers run live sessions, teachers and parents read results.

Role rules mirror the school's accountability structure:

    role     sessions & attempts   profile read   records/flags read   items
    teacher  yes                   any pupil      any pupil            yes
    helper   yes                   any pupil      no                   yes
    parent   no                    no             own children only    yes

Tokens come from a static table in the config file. All bodies are UTF-8
JSON with unknown fields rejected; attempt audio may be a base64 WAV field
or a multipart file part. Every error body is {"status", "code", "message"}.
"""

from __future__ import annotations

import base64
import hashlib
import json
import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, ValidationError as PydanticValidationError

from . import assessment, audio, game_core, records
from .assessment import Attempt, PupilProfile, SessionConfig
from .errors import ReadAloudError
from .game_core import GameConfig, GameState
from .item_bank import (
    ItemBank,
    PhonicsItem,
    SelectionRequest,
    default_bank,
    load_bank_file,
    select_items,
)
from .recognizer import (
    FeatureSequence,
    RecognitionResult,
    Template,
    build_template,
    classify,
    extract_features,
    znormalize,
)
from .records import EventStore

ROLE_TEACHER = "teacher"
ROLE_HELPER = "helper"
ROLE_PARENT = "parent"
ROLES = (ROLE_TEACHER, ROLE_HELPER, ROLE_PARENT)

# below this much power a round cannot meaningfully launch, so the session
# moves on to the next power-up phase
MIN_USEFUL_POWER = 1.0

DEFAULT_PORT = 8077
PORT_ENV_VAR = "READALOUD_PORT"


class ServiceError(ReadAloudError):
    pass


class ApiException(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


@dataclass(frozen=True)
class TokenEntry:
    token: str
    role: str
    name: str
    scope: tuple[str, ...] = ()


@dataclass(frozen=True)
class PupilEntry:
    pupil_id: str
    ability_band: int = 1
    display_name: str = ""


@dataclass(frozen=True)
class ServiceConfig:
    store_path: str
    tokens: tuple[TokenEntry, ...]
    pupils: tuple[PupilEntry, ...]
    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    bank_path: str | None = None
    templates_dir: str | None = None
    template_seed: int = 1234
    selection_seed: int = 0
    static_dir: str | None = None
    game: GameConfig = field(default_factory=GameConfig)
    session: SessionConfig = field(default_factory=SessionConfig)


def load_service_config(path: str | Path) -> ServiceConfig:
    """Read the JSON config file; game/session keys override the defaults."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ServiceError(f"cannot read config {path}: {exc}") from exc
    try:
        tokens = tuple(
            TokenEntry(
                token=entry["token"],
                role=entry["role"],
                name=entry.get("name", f"{entry['role']}-{i + 1}"),
                scope=tuple(entry.get("scope", ())),
            )
            for i, entry in enumerate(raw.get("tokens", ()))
        )
        pupils = tuple(
            PupilEntry(
                pupil_id=entry["pupil_id"],
                ability_band=int(entry.get("ability_band", 1)),
                display_name=entry.get("display_name", ""),
            )
            for entry in raw.get("pupils", ())
        )
        config = ServiceConfig(
            store_path=raw["store_path"],
            tokens=tokens,
            pupils=pupils,
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", DEFAULT_PORT)),
            bank_path=raw.get("bank_path"),
            templates_dir=raw.get("templates_dir"),
            template_seed=int(raw.get("template_seed", 1234)),
            selection_seed=int(raw.get("selection_seed", 0)),
            static_dir=raw.get("static_dir"),
            game=GameConfig(**raw.get("game", {})),
            session=SessionConfig(**raw.get("session", {})),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ServiceError(f"malformed config {path}: {exc}") from exc
    for entry in config.tokens:
        if entry.role not in ROLES:
            raise ServiceError(f"unknown role {entry.role!r} for token entry {entry.name!r}")
        if entry.role == ROLE_PARENT and not entry.scope:
            raise ServiceError(f"parent token {entry.name!r} must scope at least one pupil")
    seen = set()
    for entry in config.tokens:
        if entry.token in seen:
            raise ServiceError("tokens must be unique")
        seen.add(entry.token)
    return config


def load_templates(bank: ItemBank, templates_dir: str | Path | None, template_seed: int) -> dict[str, Template]:
    """Templates from a built directory, or synthesized for the whole bank."""
    templates: dict[str, Template] = {}
    if templates_dir is None:
        for item in bank.items:
            clip = audio.synth_utterance(item.item_id, seed=template_seed, noise_sigma=0.0)
            templates[item.item_id] = build_template(item.item_id, clip)
        return templates
    root = Path(templates_dir)
    for item in bank.items:
        path = root / f"{item.item_id}.json"
        if not path.exists():
            raise ServiceError(f"missing template file for item {item.item_id!r}: {path}")
        payload = json.loads(path.read_text(encoding="utf-8"))
        seq = FeatureSequence.from_payload(payload)
        if not seq.normalized:
            seq = FeatureSequence(frames=znormalize(seq.frames), normalized=True)
        templates[item.item_id] = Template(item_id=item.item_id, features=seq)
    return templates


def _item_payload(item: PhonicsItem) -> dict:
    return {"item_id": item.item_id, "text": item.text, "kind": item.kind, "band": item.band}


def _event_payloads(events) -> list[dict]:
    return [ev.to_payload() for ev in events]


@dataclass
class LiveSession:
    session_id: str
    pupil_id: str
    helper_name: str
    started_at: float
    round_counts: list[int]
    round_index: int = 0                      # 1-based once started
    items: list[PhonicsItem] = field(default_factory=list)
    presented_idx: int = 0
    state: GameState | None = None
    presented_all: set[str] = field(default_factory=set)
    attempts: list[Attempt] = field(default_factory=list)
    rounds_done: list[assessment.RoundRecord] = field(default_factory=list)
    complete: bool = False
    finished: bool = False
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def current_item(self) -> PhonicsItem | None:
        if self.state is not None and self.state.phase == game_core.PHASE_POWERUP:
            return self.items[self.presented_idx]
        return None

    def cumulative_score(self) -> int:
        done = sum(rr.score for rr in self.rounds_done)
        return done + (self.state.score if self.state is not None else 0)


class SessionCreateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    pupil_id: str
    helper_token: str


class AttemptRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    item_id: str
    audio_b64: str | None = None
    features: dict | None = None
    gaze_dwell_ms: int | None = None


class LaunchRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    angle_deg: float
    speed: float


class RemarkRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    date: str
    material: str
    remarks: str
    author_initials: str | None = None


class AppState:
    def __init__(self, config: ServiceConfig, clock: Callable[[], float]):
        self.config = config
        self.clock = clock
        self.bank = load_bank_file(config.bank_path) if config.bank_path else default_bank()
        self.templates = load_templates(self.bank, config.templates_dir, config.template_seed)
        self.store = EventStore(config.store_path)
        self.pupils = {p.pupil_id: p for p in config.pupils}
        self.tokens = {t.token: t for t in config.tokens}
        self.sessions: dict[str, LiveSession] = {}
        self.lock = threading.Lock()
        self._session_counter = 0
        self.profiles: dict[str, PupilProfile] = {
            p.pupil_id: PupilProfile(pupil_id=p.pupil_id, ability_band=p.ability_band)
            for p in config.pupils
        }
        self._replay_store()

    def _replay_store(self) -> None:
        for ev in self.store.events():
            if ev.kind != "AttemptLogged" or ev.pupil_id not in self.profiles:
                continue
            attempt = assessment.attempt_from_payload(ev.payload)
            self.profiles[ev.pupil_id] = assessment.record_attempt(
                self.profiles[ev.pupil_id], attempt, self.config.session
            )

    def principal(self, token: str | None) -> TokenEntry:
        entry = self.tokens.get(token or "")
        if entry is None:
            raise ApiException(401, "unknown_token", "missing or unknown token")
        return entry

    def pupil(self, pupil_id: str) -> PupilEntry:
        entry = self.pupils.get(pupil_id)
        if entry is None:
            raise ApiException(404, "unknown_pupil", f"no pupil {pupil_id!r}")
        return entry

    def session(self, session_id: str) -> LiveSession:
        sess = self.sessions.get(session_id)
        if sess is None:
            raise ApiException(404, "unknown_session", f"no session {session_id!r}")
        return sess

    def new_session_id(self, pupil_id: str) -> str:
        with self.lock:
            self._session_counter += 1
            counter = self._session_counter
        return f"s-{pupil_id}-{counter:04d}"

    def selection_seed(self, session_id: str, round_index: int) -> int:
        digest = hashlib.sha256(
            f"{self.config.selection_seed}:{session_id}:{round_index}".encode()
        ).digest()
        return int.from_bytes(digest[:8], "big")

    def start_round(self, sess: LiveSession) -> None:
        sess.round_index += 1
        count = sess.round_counts[sess.round_index - 1]
        profile = self.profiles[sess.pupil_id]
        try:
            items = select_items(
                self.bank,
                SelectionRequest(
                    target_band=profile.ability_band,
                    count=count,
                    seed=self.selection_seed(sess.session_id, sess.round_index),
                    exclude=frozenset(sess.presented_all),
                ),
            )
        except ReadAloudError as exc:
            raise ApiException(409, "no_items", f"cannot select items: {exc}") from exc
        sess.items = items
        sess.presented_idx = 0
        sess.state = game_core.new_game(
            replace(
                self.config.game,
                bubbles_per_powerup_phase=len(items),
                seed=self.selection_seed(sess.session_id, sess.round_index) & 0xFFFFFFFF,
            )
        )

    def close_round(self, sess: LiveSession) -> None:
        sess.rounds_done.append(
            assessment.RoundRecord(
                round_index=sess.round_index,
                items=tuple(it.item_id for it in sess.items),
                events=sess.state.event_log,
                score=sess.state.score,
            )
        )

    def maybe_advance_round(self, sess: LiveSession) -> bool:
        """Close a spent round; start the next one unless the session is done."""
        state = sess.state
        spent = state.phase == game_core.PHASE_OVER or (
            state.phase == game_core.PHASE_FIRING
            and not state.projectiles
            and state.power < MIN_USEFUL_POWER
        )
        if not spent:
            return False
        self.close_round(sess)
        if sess.round_index >= len(sess.round_counts):
            sess.complete = True
        else:
            self.start_round(sess)
        return True


def _session_payload(sess: LiveSession, state_fields: bool = True) -> dict:
    payload = {
        "session_id": sess.session_id,
        "pupil_id": sess.pupil_id,
        "round": sess.round_index,
        "rounds_total": len(sess.round_counts),
        "session_complete": sess.complete,
    }
    if state_fields and sess.state is not None:
        payload.update(
            {
                "phase": sess.state.phase,
                "power": sess.state.power,
                "score": sess.cumulative_score(),
                "flood_level": sess.state.flood_level,
            }
        )
    return payload


def create_app(config: ServiceConfig, *, clock: Callable[[], float] = time.time) -> FastAPI:
    app = FastAPI(title="readaloud", docs_url=None, redoc_url=None)
    state = AppState(config, clock)
    app.state.domain = state

    @app.exception_handler(ApiException)
    async def api_exception_handler(request: Request, exc: ApiException):
        return JSONResponse(
            status_code=exc.status,
            content={"status": exc.status, "code": exc.code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"status": 422, "code": "validation_error", "message": str(exc.errors()[:3])},
        )

    def bearer_token(request: Request) -> str | None:
        header = request.headers.get("authorization", "")
        if header.lower().startswith("bearer "):
            return header[7:].strip()
        return None

    def require_role(request: Request, *roles: str) -> TokenEntry:
        principal = state.principal(bearer_token(request))
        if principal.role not in roles:
            raise ApiException(403, "forbidden", f"role {principal.role} may not call this endpoint")
        return principal

    def require_pupil_scope(principal: TokenEntry, pupil_id: str) -> None:
        if principal.role == ROLE_PARENT and pupil_id not in principal.scope:
            raise ApiException(403, "out_of_scope", "pupil not in this parent's scope")

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/api/v1/sessions", status_code=201)
    async def create_session(body: SessionCreateRequest):
        principal = state.principal(body.helper_token)
        if principal.role not in (ROLE_HELPER, ROLE_TEACHER):
            raise ApiException(403, "forbidden", "only helpers and teachers run sessions")
        state.pupil(body.pupil_id)
        per_phase = state.config.game.bubbles_per_powerup_phase
        counts = assessment.session_rounds(state.config.session.items_per_session, per_phase)
        sess = LiveSession(
            session_id=state.new_session_id(body.pupil_id),
            pupil_id=body.pupil_id,
            helper_name=principal.name,
            started_at=state.clock(),
            round_counts=counts,
        )
        state.start_round(sess)
        with state.lock:
            state.sessions[sess.session_id] = sess
        payload = _session_payload(sess)
        payload["items"] = [_item_payload(it) for it in sess.items]
        return payload

    async def _attempt_body(request: Request) -> AttemptRequest:
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("audio")
            if upload is None:
                raise ApiException(422, "bad_audio", "multipart attempt needs an 'audio' part")
            data = await upload.read() if hasattr(upload, "read") else str(upload).encode()
            dwell = form.get("gaze_dwell_ms")
            return AttemptRequest(
                item_id=str(form.get("item_id", "")),
                audio_b64=base64.b64encode(data).decode("ascii"),
                gaze_dwell_ms=int(dwell) if dwell not in (None, "") else None,
            )
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            raise ApiException(422, "validation_error", "body must be JSON or multipart") from exc
        try:
            return AttemptRequest.model_validate(body)
        except PydanticValidationError as exc:
            raise ApiException(422, "validation_error", str(exc.errors()[:3])) from exc

    @app.post("/api/v1/sessions/{session_id}/attempts")
    async def post_attempt(session_id: str, request: Request):
        require_role(request, ROLE_HELPER, ROLE_TEACHER)
        sess = state.session(session_id)
        body = await _attempt_body(request)
        with sess.lock:
            if sess.finished or sess.complete:
                raise ApiException(409, "session_complete", "session already complete")
            if sess.state.phase != game_core.PHASE_POWERUP:
                raise ApiException(409, "wrong_phase", f"phase is {sess.state.phase}, not PowerUp")
            current = sess.current_item
            if body.item_id != current.item_id:
                raise ApiException(
                    409, "wrong_item", f"presented item is {current.item_id!r}, not {body.item_id!r}"
                )
            if (body.audio_b64 is None) == (body.features is None):
                raise ApiException(422, "bad_audio", "provide exactly one of audio_b64 or features")
            loud = None
            if body.audio_b64 is not None:
                try:
                    clip = audio.read_wav(base64.b64decode(body.audio_b64, validate=True))
                except (audio.AudioError, ValueError) as exc:
                    raise ApiException(422, "bad_audio", f"unreadable audio: {exc}") from exc
                try:
                    features = extract_features(clip)
                except ReadAloudError as exc:
                    raise ApiException(422, "bad_audio", f"cannot extract features: {exc}") from exc
                loud = audio.loudness_dbfs(clip)
            else:
                try:
                    features = FeatureSequence.from_payload(body.features)
                except ReadAloudError as exc:
                    raise ApiException(422, "bad_audio", f"bad feature payload: {exc}") from exc
                if not features.normalized:
                    features = FeatureSequence(frames=znormalize(features.frames), normalized=True)

            candidate_ids = sorted({it.item_id for it in sess.items} | {current.item_id})
            candidates = [state.templates[cid] for cid in candidate_ids if cid in state.templates]
            result = classify(features, candidates, state.config.session.reject_threshold)
            result = RecognitionResult(
                item_id=result.item_id,
                best_score=result.best_score,
                per_candidate_scores=result.per_candidate_scores,
                loudness_dbfs=loud,
            )
            attempt = assessment.build_attempt(
                sess.session_id, current.item_id, state.clock(), result, body.gaze_dwell_ms
            )
            sess.attempts.append(attempt)
            sess.presented_all.add(current.item_id)
            with state.lock:
                state.profiles[sess.pupil_id] = assessment.record_attempt(
                    state.profiles[sess.pupil_id], attempt, state.config.session
                )
            state.store.append(
                pupil_id=sess.pupil_id,
                at=attempt.presented_at,
                kind="AttemptLogged",
                author=sess.helper_name,
                payload=attempt.to_payload(),
            )
            sess.presented_idx += 1
            sess.state = game_core.apply_reading_outcome(sess.state, attempt.correct)
            payload = _session_payload(sess)
            payload["recognition"] = result.to_payload()
            payload["correct"] = attempt.correct
            next_item = sess.current_item
            payload["next_item"] = _item_payload(next_item) if next_item else None
            return payload

    @app.post("/api/v1/sessions/{session_id}/launch")
    async def post_launch(session_id: str, body: LaunchRequest, request: Request):
        require_role(request, ROLE_HELPER, ROLE_TEACHER)
        sess = state.session(session_id)
        with sess.lock:
            if sess.finished or sess.complete:
                raise ApiException(409, "session_complete", "session already complete")
            before = len(sess.state.event_log)
            try:
                sess.state = game_core.launch_bubble(sess.state, body.angle_deg, body.speed)
            except game_core.InsufficientPowerError as exc:
                raise ApiException(422, "insufficient_power", str(exc)) from exc
            except game_core.OutOfRangeError as exc:
                raise ApiException(422, "out_of_range", str(exc)) from exc
            except game_core.WrongPhaseError as exc:
                raise ApiException(409, "wrong_phase", str(exc)) from exc
            sess.state = game_core.run_until_resolved(sess.state)
            events = sess.state.event_log[before:]
            payload = _session_payload(sess)
            payload["events"] = _event_payloads(events)
            if state.maybe_advance_round(sess):
                payload.update(_session_payload(sess))
                if not sess.complete:
                    payload["items"] = [_item_payload(it) for it in sess.items]
            return payload

    @app.post("/api/v1/sessions/{session_id}/finish")
    async def finish_session(session_id: str, request: Request):
        require_role(request, ROLE_HELPER, ROLE_TEACHER)
        sess = state.session(session_id)
        with sess.lock:
            if sess.finished:
                raise ApiException(409, "already_finished", "session already finished")
            if sess.state is not None and (
                not sess.rounds_done or sess.rounds_done[-1].round_index != sess.round_index
            ):
                state.close_round(sess)
            now = state.clock()
            profile = state.profiles[sess.pupil_id]
            flags = assessment.generate_flags(profile, state.config.session, now=now)
            record = assessment.SessionRecord(
                session_id=sess.session_id,
                pupil_id=sess.pupil_id,
                helper_id=sess.helper_name,
                started_at=sess.started_at,
                ended_at=now,
                attempts=tuple(sess.attempts),
                rounds=tuple(sess.rounds_done),
                final_score=sum(rr.score for rr in sess.rounds_done),
                flags_after=tuple(flags),
            )
            bodies = [
                {
                    "pupil_id": sess.pupil_id,
                    "at": now,
                    "kind": "SessionCompleted",
                    "author": sess.helper_name,
                    "payload": record.to_payload(),
                }
            ]
            bodies.extend(
                {
                    "pupil_id": sess.pupil_id,
                    "at": now,
                    "kind": "FlagRaised",
                    "author": sess.helper_name,
                    "payload": flag.to_payload(),
                }
                for flag in flags
            )
            state.store.append_many(bodies)
            sess.finished = True
            return record.to_payload()

    @app.get("/api/v1/pupils/{pupil_id}/profile")
    async def get_profile(pupil_id: str, request: Request):
        require_role(request, ROLE_TEACHER, ROLE_HELPER)
        state.pupil(pupil_id)
        profile = state.profiles[pupil_id]
        progression = assessment.progression_check(profile, state.bank, state.config.session)
        return {
            "pupil_id": profile.pupil_id,
            "ability_band": profile.ability_band,
            "proficiency": dict(sorted(profile.proficiency.items())),
            "attempts": dict(sorted(profile.attempts.items())),
            "confidence_history": [list(entry) for entry in profile.confidence_history],
            "progression": {"ready": progression.ready, "band": progression.band},
        }

    @app.get("/api/v1/pupils/{pupil_id}/records")
    async def get_records(
        pupil_id: str,
        request: Request,
        from_ts: float | None = None,
        to_ts: float | None = None,
        kind: str | None = None,
    ):
        principal = require_role(request, ROLE_TEACHER, ROLE_PARENT)
        require_pupil_scope(principal, pupil_id)
        state.pupil(pupil_id)
        kinds = [kind] if kind else None
        events = state.store.query(pupil_id, from_ts=from_ts, to_ts=to_ts, kinds=kinds)
        return {
            "pupil_id": pupil_id,
            "events": [
                {
                    "event_id": ev.event_id,
                    "pupil_id": ev.pupil_id,
                    "at": ev.at,
                    "kind": ev.kind,
                    "author": ev.author,
                    "payload": ev.payload,
                }
                for ev in events
            ],
        }

    @app.get("/api/v1/pupils/{pupil_id}/flags")
    async def get_flags(pupil_id: str, request: Request):
        principal = require_role(request, ROLE_TEACHER, ROLE_PARENT)
        require_pupil_scope(principal, pupil_id)
        state.pupil(pupil_id)
        flags = assessment.generate_flags(
            state.profiles[pupil_id], state.config.session, now=state.clock()
        )
        return {"pupil_id": pupil_id, "flags": [f.to_payload() for f in flags]}

    @app.get("/api/v1/items")
    async def get_items(request: Request, band: int | None = None):
        state.principal(bearer_token(request))
        if band is None:
            items = state.bank.items
        else:
            if band not in state.bank.bands:
                raise ApiException(404, "unknown_band", f"no band {band}")
            items = tuple(it for it in state.bank.items if it.band == band)
        return {"items": [_item_payload(it) for it in items]}

    @app.post("/api/v1/pupils/{pupil_id}/remarks", status_code=201)
    async def post_remark(pupil_id: str, body: RemarkRequest, request: Request):
        principal = require_role(request, ROLE_TEACHER)
        state.pupil(pupil_id)
        try:
            when, inferred = records.parse_legacy_date(body.date)
        except records.LegacyParseError as exc:
            raise ApiException(422, "bad_date", str(exc)) from exc
        if not body.remarks.strip():
            raise ApiException(422, "validation_error", "remarks must be non-empty")
        remark = records.Remark(
            date=when,
            material=body.material,
            remarks=body.remarks,
            author_initials=body.author_initials,
            year_inferred=inferred,
        )
        ev = state.store.append(
            pupil_id=pupil_id,
            at=state.clock(),
            kind="RemarkAdded",
            author=principal.name,
            payload=remark.to_payload(),
        )
        return {"event_id": ev.event_id, "kind": ev.kind, "payload": ev.payload}

    if config.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app
