import { ApiClient, ApiError } from "./api.js";
import type { Clock } from "./clock.js";
import { systemClock } from "./clock.js";
import type { ClipSource } from "./capture.js";
import { microphoneSource } from "./capture.js";
import type {
  AttemptResponse,
  ItemInfo,
  LaunchResponse,
  SessionRecordPayload,
  SessionState,
} from "./types.js";
import { PowerUpView } from "./views/powerup.js";
import { FiringView } from "./views/firing.js";
import { DashboardView } from "./views/dashboard.js";

export interface AppDeps {
  clock: Clock;
  clipSource: ClipSource;
  fetchFn?: typeof fetch;
}

function parseRoster(text: string): string[] {
  return text
    .split(/[\n,]/)
    .map((entry) => entry.trim())
    .filter((entry) => entry.length > 0);
}

/**
 * Drives one play session: reading items power up the launcher, then
 * the firing phase spends that power, round after round until the
 * server declares the session over. All transitions follow the phase
 * the server reports — the shell never advances the game on its own.
 */
export class PlayController {
  private api: ApiClient;
  private stage: HTMLElement;
  private deps: AppDeps;
  private session: SessionState;
  private powerUp: PowerUpView | null = null;
  private firing: FiringView | null = null;
  onFinished: ((record: SessionRecordPayload) => void) | null = null;

  constructor(stage: HTMLElement, api: ApiClient, session: SessionState, deps: AppDeps) {
    this.stage = stage;
    this.api = api;
    this.session = session;
    this.deps = deps;
    this.enterPowerUp(session.items ?? []);
  }

  private enterPowerUp(items: ItemInfo[]): void {
    this.firing = null;
    this.powerUp = new PowerUpView(this.stage, this.session.session_id, {
      api: this.api,
      clock: this.deps.clock,
      clipSource: this.deps.clipSource,
      onResponse: (resp) => void this.attemptReturned(resp),
    });
    this.powerUp.renderGauges(this.session);
    if (items.length > 0) {
      this.powerUp.show(items[0]);
    }
  }

  private enterFiring(state: SessionState): void {
    this.powerUp = null;
    this.firing = new FiringView(this.stage, this.session.session_id, state.power, {
      api: this.api,
      onResponse: (resp) => void this.launchReturned(resp),
    });
    this.firing.renderGauges(state);
  }

  private async attemptReturned(resp: AttemptResponse): Promise<void> {
    this.session = resp;
    // session_complete outranks phase: the server leaves the phase at
    // whatever ended the final round
    if (resp.session_complete) {
      await this.finish();
      return;
    }
    if (resp.phase === "PowerUp" && resp.next_item) {
      this.powerUp?.show(resp.next_item);
      return;
    }
    if (resp.phase === "Firing") {
      this.enterFiring(resp);
      return;
    }
    if (resp.phase === "Over") {
      await this.finish();
    }
  }

  private async launchReturned(resp: LaunchResponse): Promise<void> {
    this.session = resp;
    if (resp.session_complete || resp.phase === "Over") {
      await this.finish();
      return;
    }
    if (resp.phase === "PowerUp") {
      this.enterPowerUp(resp.items ?? []);
      return;
    }
    // phase Firing: more shots left this round
  }

  private async finish(): Promise<void> {
    const record = await this.api.finishSession(this.session.session_id);
    this.renderSummary(record);
    this.onFinished?.(record);
  }

  private renderSummary(record: SessionRecordPayload): void {
    const correct = record.attempts.filter((a) => a.correct).length;
    this.stage.innerHTML = `
      <h2>Session complete</h2>
      <p data-role="final-score">final score ${record.final_score}</p>
      <p data-role="read-count">${correct} of ${record.attempts.length} read correctly</p>
      <ul data-role="read-list"></ul>
    `;
    const list = this.stage.querySelector('[data-role="read-list"]') as HTMLElement;
    for (const attempt of record.attempts) {
      const entry = document.createElement("li");
      entry.textContent = `${attempt.item_id}: ${attempt.correct ? "read" : "missed"}`;
      list.appendChild(entry);
    }
  }
}

export class App {
  private root: HTMLElement;
  private deps: AppDeps;
  controller: PlayController | null = null;
  dashboard: DashboardView | null = null;

  constructor(root: HTMLElement, deps?: Partial<AppDeps>) {
    this.root = root;
    this.deps = {
      clock: deps?.clock ?? systemClock,
      clipSource: deps?.clipSource ?? microphoneSource(),
      fetchFn: deps?.fetchFn,
    };
    this.renderLogin();
  }

  private el(role: string): HTMLElement {
    const node = this.root.querySelector(`[data-role="${role}"]`);
    if (!node) throw new Error(`missing element ${role}`);
    return node as HTMLElement;
  }

  private field(role: string): string {
    return (this.el(role) as HTMLInputElement | HTMLTextAreaElement).value.trim();
  }

  /** Tokens are pasted fresh each visit and held only in memory. */
  private renderLogin(): void {
    this.root.innerHTML = `
      <h1>Read-aloud practice</h1>
      <label>server <input data-role="base-url" placeholder="http://localhost:8000"></label>
      <label>access token <input data-role="token" type="password"></label>
      <fieldset>
        <legend>play a session</legend>
        <label>pupil id <input data-role="pupil"></label>
        <label>helper token <input data-role="helper-token" type="password"></label>
        <button data-role="start-play">Start session</button>
      </fieldset>
      <fieldset>
        <legend>review</legend>
        <label>pupils to review (one per line)
          <textarea data-role="roster"></textarea>
        </label>
        <button data-role="open-dashboard">Open dashboard</button>
      </fieldset>
      <div class="status" data-role="login-status"></div>
      <div data-role="stage"></div>
    `;
    this.el("start-play").addEventListener("click", () => void this.startPlay());
    this.el("open-dashboard").addEventListener("click", () => void this.openDashboard());
  }

  private makeClient(): ApiClient {
    return new ApiClient(this.field("token"), {
      baseUrl: this.field("base-url"),
      fetchFn: this.deps.fetchFn,
    });
  }

  async startPlay(): Promise<void> {
    const status = this.el("login-status");
    status.textContent = "";
    const api = this.makeClient();
    try {
      const session = await api.createSession(this.field("pupil"), this.field("helper-token"));
      this.controller = new PlayController(this.el("stage"), api, session, this.deps);
    } catch (err) {
      if (err instanceof ApiError) {
        status.textContent = `could not start: ${err.code} — ${err.message}`;
        return;
      }
      throw err;
    }
  }

  async openDashboard(): Promise<void> {
    const status = this.el("login-status");
    status.textContent = "";
    const roster = parseRoster(this.field("roster"));
    if (roster.length === 0) {
      status.textContent = "enter at least one pupil id to review";
      return;
    }
    this.dashboard = new DashboardView(this.el("stage"), roster, { api: this.makeClient() });
    try {
      await this.dashboard.load();
    } catch (err) {
      if (err instanceof ApiError) {
        status.textContent = `dashboard failed: ${err.code} — ${err.message}`;
        return;
      }
      throw err;
    }
  }
}

export function startApp(root: HTMLElement, deps?: Partial<AppDeps>): App {
  return new App(root, deps);
}
