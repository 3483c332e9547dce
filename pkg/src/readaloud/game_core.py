"""Deterministic simulation of one game round.

A round has two phases: reading bubbles correctly charges power, then the
player spends power launching bubbles at natives roaming the island before
the flood covers it. Everything is a pure state transition on value objects;
replaying the same config and command script reproduces the event log
byte for byte.

Projectile integration uses the exact constant-acceleration step (the
position update includes the 0.5*g*dt^2 term), so simulated positions track
the closed-form trajectory to rounding error at every tick.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import ReadAloudError

TICK_DT = 1.0 / 30.0

PHASE_POWERUP = "PowerUp"
PHASE_FIRING = "Firing"
PHASE_OVER = "Over"

OVER_FLOODED = "Flooded"
OVER_ALL_CAPTURED = "AllCaptured"

SCORE_PER_CAPTURE = 100


class GameError(ReadAloudError):
    pass


class InvalidConfigError(GameError):
    pass


class WrongPhaseError(GameError):
    pass


class InsufficientPowerError(GameError):
    pass


class OutOfRangeError(GameError):
    pass


class ReplayError(GameError):
    """A scripted command could not be applied; carries the offending tick."""

    def __init__(self, tick: int, message: str):
        super().__init__(f"tick {tick}: {message}")
        self.tick = tick


@dataclass(frozen=True)
class GameConfig:
    gravity: float = 9.8
    island_half_width: float = 10.0
    launch_height: float = 1.0
    bubble_radius: float = 0.5
    native_radius: float = 0.5
    native_speed: float = 1.0
    flood_rate: float = 0.02
    island_height: float = 2.0
    power_per_correct: float = 10.0
    max_speed: float = 30.0
    bubbles_per_powerup_phase: int = 3
    dt: float = TICK_DT
    native_count: int = 3
    seed: int = 0


@dataclass(frozen=True)
class Native:
    x: float
    vx: float
    captured: bool = False


@dataclass(frozen=True)
class Projectile:
    x: float
    y: float
    vx: float
    vy: float


@dataclass(frozen=True)
class GameEvent:
    tick: int
    kind: str
    payload: Mapping[str, object] = field(default_factory=dict)

    def to_payload(self) -> dict:
        return {"tick": self.tick, "kind": self.kind, **self.payload}


@dataclass(frozen=True)
class GameState:
    config: GameConfig
    phase: str
    power: float
    tick_index: int
    flood_level: float
    score: int
    natives: tuple[Native, ...]
    projectiles: tuple[Projectile, ...]
    remaining_powerup_items: int
    event_log: tuple[GameEvent, ...]
    over_reason: str | None = None

    def uncaptured(self) -> list[int]:
        return [i for i, nat in enumerate(self.natives) if not nat.captured]


def _validate_config(config: GameConfig) -> None:
    positive = (
        "gravity", "island_half_width", "launch_height", "bubble_radius",
        "native_radius", "native_speed", "flood_rate", "island_height",
        "power_per_correct", "max_speed",
    )
    for name in positive:
        if getattr(config, name) <= 0:
            raise InvalidConfigError(f"{name} must be positive, got {getattr(config, name)}")
    if config.bubbles_per_powerup_phase < 1:
        raise InvalidConfigError("bubbles_per_powerup_phase must be >= 1")
    if config.native_count < 1:
        raise InvalidConfigError(f"native_count must be >= 1, got {config.native_count}")
    if config.dt != TICK_DT:
        raise InvalidConfigError(f"dt is fixed at 1/30 s, got {config.dt}")


def new_game(config: GameConfig) -> GameState:
    """Fresh round: natives placed from the seed, power at zero, ready to read."""
    _validate_config(config)
    rng = random.Random(f"game:{config.seed}")
    natives = tuple(
        Native(
            x=rng.uniform(-config.island_half_width, config.island_half_width),
            vx=config.native_speed * rng.choice((-1.0, 1.0)),
        )
        for _ in range(config.native_count)
    )
    return GameState(
        config=config,
        phase=PHASE_POWERUP,
        power=0.0,
        tick_index=0,
        flood_level=0.0,
        score=0,
        natives=natives,
        projectiles=(),
        remaining_powerup_items=config.bubbles_per_powerup_phase,
        event_log=(),
    )


def _log(state: GameState, events: list[GameEvent], kind: str, **payload) -> None:
    events.append(GameEvent(tick=state.tick_index, kind=kind, payload=payload))


def apply_reading_outcome(state: GameState, correct: bool) -> GameState:
    """Consume one power-up bubble; a correct reading adds power."""
    if state.phase != PHASE_POWERUP:
        raise WrongPhaseError(f"reading outcomes only apply in PowerUp phase, not {state.phase}")
    if state.remaining_powerup_items <= 0:
        raise WrongPhaseError("no power-up items remaining")
    events: list[GameEvent] = []
    power = state.power
    if correct:
        power += state.config.power_per_correct
        _log(state, events, "PowerGained", amount=state.config.power_per_correct)
    remaining = state.remaining_powerup_items - 1
    phase = PHASE_FIRING if remaining == 0 else PHASE_POWERUP
    return replace(
        state,
        power=power,
        remaining_powerup_items=remaining,
        phase=phase,
        event_log=state.event_log + tuple(events),
    )


def launch_bubble(state: GameState, angle_deg: float, speed: float) -> GameState:
    """Spend `speed` power to put a bubble in flight at `angle_deg` (0-180)."""
    cfg = state.config
    if state.phase != PHASE_FIRING:
        raise WrongPhaseError(f"launching requires Firing phase, not {state.phase}")
    if not (0.0 < angle_deg < 180.0):
        raise OutOfRangeError(f"angle_deg must be in (0, 180), got {angle_deg}")
    if not (0.0 < speed <= cfg.max_speed):
        raise OutOfRangeError(f"speed must be in (0, {cfg.max_speed}], got {speed}")
    if speed > state.power:
        raise InsufficientPowerError(f"launch at speed {speed} needs more than power {state.power}")
    theta = math.radians(angle_deg)
    projectile = Projectile(
        x=0.0,
        y=cfg.launch_height,
        vx=speed * math.cos(theta),
        vy=speed * math.sin(theta),
    )
    events: list[GameEvent] = []
    _log(state, events, "BubbleLaunched", angle_deg=angle_deg, speed=speed)
    return replace(
        state,
        power=state.power - speed,
        projectiles=state.projectiles + (projectile,),
        event_log=state.event_log + tuple(events),
    )


def trajectory(angle_deg: float, speed: float, t: float, config: GameConfig) -> tuple[float, float]:
    """Closed-form launch position at time t."""
    if t < 0:
        raise OutOfRangeError(f"t must be >= 0, got {t}")
    theta = math.radians(angle_deg)
    x = speed * math.cos(theta) * t
    y = config.launch_height + speed * math.sin(theta) * t - 0.5 * config.gravity * t * t
    return (x, y)


def tick(state: GameState) -> GameState:
    """Advance the firing phase by one fixed 1/30 s step."""
    if state.phase != PHASE_FIRING:
        raise WrongPhaseError(f"tick requires Firing phase, not {state.phase}")
    cfg = state.config
    dt = cfg.dt
    n = state.tick_index + 1
    events: list[GameEvent] = []

    projectiles = [
        Projectile(
            x=p.x + p.vx * dt,
            y=p.y + p.vy * dt - 0.5 * cfg.gravity * dt * dt,
            vx=p.vx,
            vy=p.vy - cfg.gravity * dt,
        )
        for p in state.projectiles
    ]

    natives = list(state.natives)
    for i, nat in enumerate(natives):
        if nat.captured:
            continue
        x = nat.x + nat.vx * dt
        vx = nat.vx
        if x > cfg.island_half_width:
            vx = -abs(vx)
        elif x < -cfg.island_half_width:
            vx = abs(vx)
        natives[i] = replace(nat, x=x, vx=vx)

    # recomputed from the tick count rather than accumulated, so the level is
    # exact at every tick (no drift across thousands of additions)
    flood = cfg.flood_rate * dt * n
    events.append(GameEvent(tick=n, kind="FloodAdvanced", payload={"level": flood}))

    score = state.score
    capture_range = cfg.bubble_radius + cfg.native_radius
    surviving: list[Projectile] = []
    for p in projectiles:
        hit = None
        for i, nat in enumerate(natives):
            if nat.captured:
                continue
            if math.hypot(p.x - nat.x, p.y) <= capture_range:
                hit = i
                break
        if hit is None:
            surviving.append(p)
        else:
            natives[hit] = replace(natives[hit], captured=True)
            score += SCORE_PER_CAPTURE
            events.append(GameEvent(tick=n, kind="NativeCaptured", payload={"index": hit}))

    in_flight: list[Projectile] = []
    for p in surviving:
        if p.y < flood:
            events.append(GameEvent(tick=n, kind="BubbleExpired", payload={}))
        else:
            in_flight.append(p)

    phase = PHASE_FIRING
    over_reason = None
    if flood >= cfg.island_height:
        phase, over_reason = PHASE_OVER, OVER_FLOODED
    elif all(nat.captured for nat in natives):
        phase, over_reason = PHASE_OVER, OVER_ALL_CAPTURED
    if phase == PHASE_OVER:
        events.append(GameEvent(tick=n, kind="GameOver", payload={"reason": over_reason}))

    return replace(
        state,
        phase=phase,
        over_reason=over_reason,
        tick_index=n,
        flood_level=flood,
        score=score,
        natives=tuple(natives),
        projectiles=tuple(in_flight),
        event_log=state.event_log + tuple(events),
    )


@dataclass(frozen=True)
class Command:
    """One scripted input: a reading outcome, a launch, or a wait-until-tick."""

    tick: int
    kind: str                      # "read" | "launch" | "wait"
    correct: bool | None = None
    angle_deg: float | None = None
    speed: float | None = None

    @staticmethod
    def read(tick: int, correct: bool) -> "Command":
        return Command(tick=tick, kind="read", correct=correct)

    @staticmethod
    def launch(tick: int, angle_deg: float, speed: float) -> "Command":
        return Command(tick=tick, kind="launch", angle_deg=angle_deg, speed=speed)

    @staticmethod
    def wait(tick: int) -> "Command":
        return Command(tick=tick, kind="wait")


def advance_to(state: GameState, target_tick: int) -> GameState:
    """Tick the firing phase forward until target_tick (or the game ends)."""
    while state.tick_index < target_tick and state.phase == PHASE_FIRING:
        state = tick(state)
    return state


def run_until_resolved(state: GameState) -> GameState:
    """Tick until no projectile remains in flight (or the game ends)."""
    while state.phase == PHASE_FIRING and state.projectiles:
        state = tick(state)
    return state


def apply_command(state: GameState, cmd: Command) -> GameState:
    state = advance_to(state, cmd.tick)
    if state.tick_index != cmd.tick:
        raise ReplayError(cmd.tick, f"unreachable from tick {state.tick_index} in phase {state.phase}")
    try:
        if cmd.kind == "read":
            return apply_reading_outcome(state, bool(cmd.correct))
        if cmd.kind == "launch":
            return launch_bubble(state, float(cmd.angle_deg), float(cmd.speed))
        if cmd.kind == "wait":
            return state
    except GameError as exc:
        raise ReplayError(cmd.tick, str(exc)) from exc
    raise ReplayError(cmd.tick, f"unknown command kind {cmd.kind!r}")


def replay(config: GameConfig, inputs: Iterable[Command]) -> GameState:
    """Run a command script from a fresh game; identical inputs, identical log."""
    state = new_game(config)
    last_tick = 0
    for cmd in inputs:
        if cmd.tick < last_tick:
            raise ReplayError(cmd.tick, f"command ticks must be non-decreasing (after {last_tick})")
        last_tick = cmd.tick
        state = apply_command(state, cmd)
    return state


def event_log_lines(state_or_events) -> list[str]:
    """Canonical one-line-per-event serialization (replay files, log diffing)."""
    events = state_or_events.event_log if isinstance(state_or_events, GameState) else state_or_events
    return [
        json.dumps(ev.to_payload(), sort_keys=True, separators=(",", ":"))
        for ev in events
    ]
