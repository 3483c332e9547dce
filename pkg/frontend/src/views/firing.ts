import type { ApiClient } from "../api.js";
import { ApiError } from "../api.js";
import type { LaunchResponse } from "../types.js";
import { buildScene } from "../scene.js";

export interface FiringDeps {
  api: ApiClient;
  onResponse: (resp: LaunchResponse) => void;
}

const SPEED_PER_PIXEL = 0.2;
// Server-side launch ceiling; the server stays authoritative (a 422
// out_of_range response shakes the gauge just like insufficient_power).
const DEFAULT_MAX_SPEED = 30;

interface DragPoint {
  clientX: number;
  clientY: number;
}

/**
 * Aim-and-fire screen. A drag on the pad picks direction and speed
 * (screen-up is 90°); releasing submits the launch. Score, power and
 * flood afterwards are whatever the server said, and the projectile
 * animation replays the server's event list.
 */
export class FiringView {
  private root: HTMLElement;
  private deps: FiringDeps;
  private sessionId: string;
  private power: number;
  private dragStart: DragPoint | null = null;
  private angle = 90;
  private speed = 0;
  private busy = false;

  constructor(root: HTMLElement, sessionId: string, power: number, deps: FiringDeps) {
    this.root = root;
    this.sessionId = sessionId;
    this.power = power;
    this.deps = deps;
    this.root.innerHTML = `
      <div class="aim-pad" data-role="pad"></div>
      <div class="readout">
        angle <span data-role="angle">90</span>°
        · speed <span data-role="speed">0.0</span>
      </div>
      <div class="gauges" data-role="gauges">
        power <span data-role="power">${power.toFixed(1)}</span>
        · score <span data-role="score">0</span>
        · flood <span data-role="flood">0.000</span>
      </div>
      <div class="status" data-role="status"></div>
    `;
    const pad = this.el("pad");
    pad.addEventListener("pointerdown", ((ev: Event) => this.dragBegan(ev as unknown as DragPoint)) as EventListener);
    pad.addEventListener("pointermove", ((ev: Event) => this.dragMoved(ev as unknown as DragPoint)) as EventListener);
    pad.addEventListener("pointerup", (() => void this.dragEnded()) as EventListener);
  }

  private el(role: string): HTMLElement {
    const node = this.root.querySelector(`[data-role="${role}"]`);
    if (!node) throw new Error(`missing element ${role}`);
    return node as HTMLElement;
  }

  renderGauges(state: { power: number; score: number; flood_level: number }): void {
    this.power = state.power;
    this.el("power").textContent = state.power.toFixed(1);
    this.el("score").textContent = String(state.score);
    this.el("flood").textContent = state.flood_level.toFixed(3);
  }

  /** Drag vector → (angle in degrees, speed capped by available power). */
  aimFromDrag(start: DragPoint, current: DragPoint): { angle: number; speed: number } {
    const dx = current.clientX - start.clientX;
    const dy = start.clientY - current.clientY; // screen up is positive
    let angle = (Math.atan2(dy, dx) * 180) / Math.PI;
    angle = Math.min(179, Math.max(1, angle));
    const raw = Math.hypot(dx, dy) * SPEED_PER_PIXEL;
    const speed = Math.min(raw, this.power, DEFAULT_MAX_SPEED);
    return { angle, speed };
  }

  private dragBegan(point: DragPoint): void {
    if (this.busy) return;
    this.dragStart = { clientX: point.clientX, clientY: point.clientY };
  }

  private dragMoved(point: DragPoint): void {
    if (!this.dragStart) return;
    const aim = this.aimFromDrag(this.dragStart, point);
    this.angle = aim.angle;
    this.speed = aim.speed;
    this.el("angle").textContent = aim.angle.toFixed(0);
    this.el("speed").textContent = aim.speed.toFixed(1);
  }

  private async dragEnded(): Promise<void> {
    if (!this.dragStart || this.busy) {
      this.dragStart = null;
      return;
    }
    this.dragStart = null;
    if (this.speed <= 0) return;
    await this.fire(this.angle, this.speed);
  }

  async fire(angleDeg: number, speed: number): Promise<void> {
    this.busy = true;
    try {
      const resp = await this.deps.api.launch(this.sessionId, angleDeg, speed);
      this.renderGauges(resp);
      const scene = buildScene(resp);
      if (scene.outcome === "NativeCaptured") {
        this.el("status").textContent = "capture!";
      } else if (scene.outcome === "GameOver" || resp.phase === "Over" || resp.session_complete) {
        this.el("status").textContent = `game over — final score ${resp.score}`;
      } else if (scene.outcome === "BubbleExpired") {
        this.el("status").textContent = "missed";
      }
      this.deps.onResponse(resp);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        // not enough power (or out of range): shake the gauge, nothing moves
        this.el("gauges").classList.add("shake");
        this.el("status").textContent = err.message;
        return;
      }
      if (err instanceof ApiError) {
        this.el("status").textContent = `${err.code}: ${err.message}`;
        return;
      }
      throw err;
    } finally {
      this.busy = false;
    }
  }
}
