import type { ApiClient } from "../api.js";
import { ApiError } from "../api.js";
import type { FlagRow, ProfileResponse, RecordEventRow } from "../types.js";

export interface DashboardDeps {
  api: ApiClient;
}

export interface PupilPanel {
  pupilId: string;
  flags: FlagRow[];
  profile: ProfileResponse | null;
}

function dayStamp(epochSeconds: number): string {
  return new Date(epochSeconds * 1000).toISOString().slice(0, 10);
}

/**
 * Review screen for teachers and parents. The caller supplies the list
 * of pupils to look up; the server decides per pupil whether this token
 * may see them. Only pupils whose flag lookup succeeded are rendered —
 * a denied or unknown pupil never appears, so a parent's page can only
 * ever show their own children.
 */
export class DashboardView {
  private root: HTMLElement;
  private deps: DashboardDeps;
  private roster: string[];
  panels: PupilPanel[] = [];
  deniedCount = 0;

  constructor(root: HTMLElement, roster: string[], deps: DashboardDeps) {
    this.root = root;
    this.roster = roster;
    this.deps = deps;
    this.root.innerHTML = `
      <h2>Reading concerns</h2>
      <div data-role="pupils"></div>
      <div class="status" data-role="status"></div>
      <div class="timeline" data-role="timeline"></div>
    `;
  }

  private el(role: string): HTMLElement {
    const node = this.root.querySelector(`[data-role="${role}"]`);
    if (!node) throw new Error(`missing element ${role}`);
    return node as HTMLElement;
  }

  async load(): Promise<void> {
    this.panels = [];
    this.deniedCount = 0;
    for (const pupilId of this.roster) {
      let flags: FlagRow[];
      try {
        const resp = await this.deps.api.getFlags(pupilId);
        flags = resp.flags;
      } catch (err) {
        if (err instanceof ApiError && (err.status === 403 || err.status === 404)) {
          this.deniedCount += 1;
          continue;
        }
        throw err;
      }
      let profile: ProfileResponse | null = null;
      try {
        profile = await this.deps.api.getProfile(pupilId);
      } catch (err) {
        // parents may not read profiles; the panel just omits the badge
        if (!(err instanceof ApiError && (err.status === 403 || err.status === 404))) {
          throw err;
        }
      }
      this.panels.push({ pupilId, flags, profile });
    }
    this.render();
  }

  visiblePupils(): string[] {
    return this.panels.map((panel) => panel.pupilId);
  }

  private render(): void {
    const host = this.el("pupils");
    host.textContent = "";
    if (this.panels.length === 0) {
      this.el("status").textContent =
        this.deniedCount > 0
          ? "access denied — none of these pupils are visible to this account"
          : "no pupils to show";
      return;
    }
    this.el("status").textContent = "";
    for (const panel of this.panels) {
      const section = document.createElement("section");
      section.className = "pupil-panel";
      section.dataset.pupil = panel.pupilId;

      const heading = document.createElement("h3");
      heading.textContent = panel.pupilId;
      section.appendChild(heading);

      if (panel.profile && panel.profile.progression.ready) {
        const badge = document.createElement("span");
        badge.className = "badge";
        badge.dataset.role = "progression";
        badge.textContent = `ready for band ${panel.profile.progression.band}`;
        section.appendChild(badge);
      }

      if (panel.flags.length === 0) {
        const note = document.createElement("p");
        note.className = "no-concerns";
        note.textContent = "no current concerns";
        section.appendChild(note);
      } else {
        section.appendChild(this.flagsTable(panel.flags));
      }

      const historyButton = document.createElement("button");
      historyButton.textContent = "history";
      historyButton.dataset.role = "history";
      historyButton.addEventListener("click", () => void this.showRecords(panel.pupilId));
      section.appendChild(historyButton);

      host.appendChild(section);
    }
  }

  /** Rows appear exactly in server order — the server already ranked them. */
  private flagsTable(flags: FlagRow[]): HTMLTableElement {
    const table = document.createElement("table");
    table.className = "flags";
    const head = table.insertRow();
    for (const label of ["item", "proficiency", "attempts", "rank", "raised"]) {
      const cell = document.createElement("th");
      cell.textContent = label;
      head.appendChild(cell);
    }
    for (const flag of flags) {
      const row = table.insertRow();
      row.insertCell().textContent = flag.item_id;
      row.insertCell().textContent = flag.proficiency.toFixed(2);
      row.insertCell().textContent = String(flag.attempts);
      row.insertCell().textContent = String(flag.priority_rank);
      row.insertCell().textContent = dayStamp(flag.raised_at);
    }
    return table;
  }

  async showRecords(pupilId: string): Promise<void> {
    const host = this.el("timeline");
    host.textContent = "";
    let events: RecordEventRow[];
    try {
      const resp = await this.deps.api.getRecords(pupilId);
      events = resp.events;
    } catch (err) {
      if (err instanceof ApiError) {
        host.textContent = `${err.code}: ${err.message}`;
        return;
      }
      throw err;
    }
    const heading = document.createElement("h3");
    heading.textContent = `history — ${pupilId}`;
    host.appendChild(heading);
    const list = document.createElement("ul");
    for (const ev of events) {
      const entry = document.createElement("li");
      entry.textContent = `${dayStamp(ev.at)} ${ev.kind} (${ev.author})`;
      list.appendChild(entry);
    }
    if (events.length === 0) {
      const entry = document.createElement("li");
      entry.textContent = "no recorded events";
      list.appendChild(entry);
    }
    host.appendChild(list);
  }
}
