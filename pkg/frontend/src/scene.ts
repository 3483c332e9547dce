import type { GameEvent, ItemInfo, SessionState } from "./types.js";

/**
 * View model for the game screen. Every field comes straight off the
 * most recent server response — the client owns no game rules. The
 * projectile arc is decoration between server-declared endpoints.
 */
export interface SceneModel {
  phase: string;
  power: number;
  score: number;
  floodLevel: number;
  round: number;
  roundsTotal: number;
  sessionComplete: boolean;
  itemText: string | null;
  timeline: GameEvent[];
  outcome: string | null; // terminal event kind of the last launch, if any
}

interface SceneSource extends SessionState {
  events?: GameEvent[];
  next_item?: ItemInfo | null;
}

const TERMINAL_KINDS = ["NativeCaptured", "BubbleExpired", "GameOver"];

export function buildScene(state: SceneSource): SceneModel {
  const events = state.events ?? [];
  let outcome: string | null = null;
  for (const ev of events) {
    if (TERMINAL_KINDS.includes(ev.kind)) outcome = ev.kind;
  }
  let itemText: string | null = null;
  if (state.next_item) {
    itemText = state.next_item.text;
  } else if (state.items && state.items.length > 0) {
    itemText = state.items[0].text;
  }
  return {
    phase: state.phase,
    power: state.power,
    score: state.score,
    floodLevel: state.flood_level,
    round: state.round,
    roundsTotal: state.rounds_total,
    sessionComplete: state.session_complete,
    itemText,
    timeline: events,
    outcome,
  };
}

export interface ArcPoint {
  t: number; // 0..1 along the flight
  x: number;
  y: number;
}

/**
 * Decorative flight arc for animation. The shape follows the launch
 * angle and relative speed; the landing instant is pinned to the
 * server's terminal event, so the picture never contradicts the
 * server's outcome.
 */
export function arcPath(angleDeg: number, speed: number, steps = 24): ArcPoint[] {
  const theta = (angleDeg * Math.PI) / 180;
  const reach = Math.max(0, speed);
  const points: ArcPoint[] = [];
  for (let i = 0; i <= steps; i++) {
    const t = i / steps;
    const x = Math.cos(theta) * reach * t;
    const y = Math.sin(theta) * reach * t * (1 - t) * 2;
    points.push({ t, x, y });
  }
  return points;
}

/** Tick of the last launch's terminal event, or null when still airborne. */
export function terminalTick(events: GameEvent[]): number | null {
  for (let i = events.length - 1; i >= 0; i--) {
    if (TERMINAL_KINDS.includes(events[i].kind)) return events[i].tick;
  }
  return null;
}
