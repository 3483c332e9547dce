import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import type { FlagRow, ProfileResponse } from "../src/types.js";
import { DashboardView } from "../src/views/dashboard.js";
import { MockServer, apiError } from "./mock_server.js";

function flag(pupilId: string, itemId: string, rank: number, proficiency = 0.2): FlagRow {
  return {
    pupil_id: pupilId,
    item_id: itemId,
    proficiency,
    attempts: 4,
    priority_rank: rank,
    raised_at: 1_755_000_000,
  };
}

function profile(pupilId: string, ready: boolean): ProfileResponse {
  return {
    pupil_id: pupilId,
    ability_band: 2,
    proficiency: { cat: 0.9 },
    attempts: { cat: 6 },
    confidence_history: [[1_755_000_000, 0.8]],
    progression: { ready, band: 3 },
  };
}

describe("DashboardView", () => {
  let root: HTMLElement;
  let server: MockServer;

  beforeEach(() => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById("root") as HTMLElement;
    server = new MockServer();
  });

  function makeView(roster: string[]): DashboardView {
    const api = new ApiClient("tok-parent", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    return new DashboardView(root, roster, { api });
  }

  it("renders only pupils the server lets this token see", async () => {
    server.route("GET", /^\/api\/v1\/pupils\/p-own\/flags$/, () => ({
      body: { pupil_id: "p-own", flags: [flag("p-own", "ship", 1)] },
    }));
    server.route("GET", /^\/api\/v1\/pupils\/p-other\/flags$/, () =>
      apiError(403, "out_of_scope", "pupil not in this parent's scope"),
    );
    server.route("GET", /^\/api\/v1\/pupils\/p-own\/profile$/, () =>
      apiError(403, "forbidden", "role not allowed"),
    );
    const view = makeView(["p-own", "p-other"]);
    await view.load();
    expect(view.visiblePupils()).toEqual(["p-own"]);
    expect(root.innerHTML).toContain("p-own");
    expect(root.innerHTML).not.toContain("p-other");
  });

  it("shows an access-denied page when every pupil is out of scope", async () => {
    server.route("GET", /^\/api\/v1\/pupils\/[^/]+\/flags$/, () =>
      apiError(403, "out_of_scope", "pupil not in this parent's scope"),
    );
    const view = makeView(["pa", "pb"]);
    await view.load();
    expect(view.visiblePupils()).toEqual([]);
    expect(root.innerHTML).toContain("access denied");
    expect(root.innerHTML).not.toContain("pa");
  });

  it("keeps flag rows in the server's priority order", async () => {
    server.route("GET", /^\/api\/v1\/pupils\/p1\/flags$/, () => ({
      body: {
        pupil_id: "p1",
        flags: [flag("p1", "thumb", 1, 0.1), flag("p1", "ship", 2, 0.3), flag("p1", "cat", 3, 0.5)],
      },
    }));
    server.route("GET", /^\/api\/v1\/pupils\/p1\/profile$/, () => ({ body: profile("p1", false) }));
    const view = makeView(["p1"]);
    await view.load();
    const cells = Array.from(root.querySelectorAll("table.flags tr td:first-child"));
    expect(cells.map((cell) => cell.textContent)).toEqual(["thumb", "ship", "cat"]);
    expect(root.querySelector('[data-role="progression"]')).toBeNull();
  });

  it("celebrates an empty flag list and a ready progression", async () => {
    server.route("GET", /^\/api\/v1\/pupils\/p1\/flags$/, () => ({
      body: { pupil_id: "p1", flags: [] },
    }));
    server.route("GET", /^\/api\/v1\/pupils\/p1\/profile$/, () => ({ body: profile("p1", true) }));
    const view = makeView(["p1"]);
    await view.load();
    expect(root.innerHTML).toContain("no current concerns");
    const badge = root.querySelector('[data-role="progression"]') as HTMLElement;
    expect(badge.textContent).toBe("ready for band 3");
  });

  it("opens a pupil's event history on demand", async () => {
    server.route("GET", /^\/api\/v1\/pupils\/p1\/flags$/, () => ({
      body: { pupil_id: "p1", flags: [] },
    }));
    server.route("GET", /^\/api\/v1\/pupils\/p1\/profile$/, () => ({ body: profile("p1", false) }));
    server.route("GET", /^\/api\/v1\/pupils\/p1\/records$/, () => ({
      body: {
        pupil_id: "p1",
        events: [
          {
            event_id: 1,
            pupil_id: "p1",
            at: 1_755_000_000,
            kind: "session",
            author: "helper:ms-lee",
            payload: {},
          },
        ],
      },
    }));
    const view = makeView(["p1"]);
    await view.load();
    (root.querySelector('[data-role="history"]') as HTMLButtonElement).click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(root.innerHTML).toContain("history — p1");
    expect(root.innerHTML).toContain("session (helper:ms-lee)");
  });
});
