import type { ApiClient } from "../api.js";
import { ApiError } from "../api.js";
import type { Clock } from "../clock.js";
import type { ClipSource } from "../capture.js";
import type { AttemptResponse, ItemInfo } from "../types.js";
import { silentClip } from "../wav.js";

export interface PowerUpDeps {
  api: ApiClient;
  clock: Clock;
  clipSource: ClipSource;
  onResponse: (resp: AttemptResponse) => void;
}

/**
 * Reading screen: one bubble of text, a record button, and the
 * microphone-denied manual controls. Dwell is the time from the bubble
 * appearing to the record press; the power gauge and correct/incorrect
 * verdict come only from the server response.
 */
export class PowerUpView {
  private root: HTMLElement;
  private deps: PowerUpDeps;
  private sessionId: string;
  private item: ItemInfo | null = null;
  private displayedAt = 0;
  private busy = false;

  constructor(root: HTMLElement, sessionId: string, deps: PowerUpDeps) {
    this.root = root;
    this.sessionId = sessionId;
    this.deps = deps;
    this.root.innerHTML = `
      <div class="bubble" data-role="bubble"></div>
      <div class="gauges">
        power <span data-role="power">0.0</span>
        · score <span data-role="score">0</span>
        · flood <span data-role="flood">0.000</span>
      </div>
      <button data-role="record">Record reading</button>
      <details data-role="manual-wrap">
        <summary>No microphone?</summary>
        <button data-role="manual-correct">Mark heard correct</button>
        <button data-role="manual-incorrect">Mark heard incorrect</button>
      </details>
      <div class="status" data-role="status"></div>
    `;
    this.el("record").addEventListener("click", () => void this.recordPressed());
    this.el("manual-correct").addEventListener("click", () => void this.manualPressed("correct"));
    this.el("manual-incorrect").addEventListener("click", () => void this.manualPressed("incorrect"));
  }

  private el(role: string): HTMLElement {
    const node = this.root.querySelector(`[data-role="${role}"]`);
    if (!node) throw new Error(`missing element ${role}`);
    return node as HTMLElement;
  }

  /** Present the next item and start the dwell timer. */
  show(item: ItemInfo): void {
    this.item = item;
    this.displayedAt = this.deps.clock.now();
    this.el("bubble").textContent = item.text;
    this.el("status").textContent = "";
  }

  renderGauges(state: { power: number; score: number; flood_level: number }): void {
    this.el("power").textContent = state.power.toFixed(1);
    this.el("score").textContent = String(state.score);
    this.el("flood").textContent = state.flood_level.toFixed(3);
  }

  private setBusy(flag: boolean): void {
    this.busy = flag;
    // the response may have replaced this view already, so the buttons
    // are allowed to be gone by the time a submission settles
    for (const role of ["record", "manual-correct", "manual-incorrect"]) {
      const node = this.root.querySelector(`[data-role="${role}"]`);
      if (node) (node as HTMLButtonElement).disabled = flag;
    }
  }

  private async recordPressed(): Promise<void> {
    if (this.busy || !this.item) return;
    const dwell = this.deps.clock.now() - this.displayedAt;
    this.setBusy(true);
    try {
      const clip = await this.deps.clipSource();
      await this.submit(clip, dwell, null);
    } finally {
      this.setBusy(false);
    }
  }

  private async manualPressed(marking: "correct" | "incorrect"): Promise<void> {
    if (this.busy || !this.item) return;
    const dwell = this.deps.clock.now() - this.displayedAt;
    this.setBusy(true);
    try {
      await this.submit(silentClip(), dwell, marking);
    } finally {
      this.setBusy(false);
    }
  }

  private async submit(
    clip: Uint8Array,
    dwell: number,
    manualMarking: "correct" | "incorrect" | null,
  ): Promise<void> {
    if (!this.item) return;
    try {
      const resp = await this.deps.api.submitAttempt(this.sessionId, this.item.item_id, clip, dwell);
      this.renderGauges(resp);
      const heard = resp.recognition.item_id ?? "nothing recognizable";
      let verdict = resp.correct ? `correct — heard "${heard}"` : `incorrect — heard ${heard}`;
      if (manualMarking) {
        verdict += ` (helper marked ${manualMarking}; no audio was captured)`;
      }
      this.el("status").textContent = verdict;
      this.deps.onResponse(resp);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        // retry prompt; the bubble and its dwell timer stay as they were
        this.el("status").textContent = `upload rejected (${err.code}) — please try again`;
        return;
      }
      if (err instanceof ApiError) {
        this.el("status").textContent = `${err.code}: ${err.message}`;
        return;
      }
      throw err;
    }
  }
}
