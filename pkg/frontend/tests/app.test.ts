import { beforeEach, describe, expect, it } from "vitest";
import { App } from "../src/app.js";
import { ManualClock } from "../src/clock.js";
import { silentClip } from "../src/wav.js";
import {
  MockServer,
  apiError,
  attemptResponse,
  item,
  launchResponse,
  sessionState,
} from "./mock_server.js";
import type { RouteResult } from "./mock_server.js";

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function setField(root: HTMLElement, role: string, value: string): void {
  (root.querySelector(`[data-role="${role}"]`) as HTMLInputElement).value = value;
}

function press(root: HTMLElement, role: string): void {
  (root.querySelector(`[data-role="${role}"]`) as HTMLButtonElement).click();
}

function text(root: HTMLElement, role: string): string {
  return (root.querySelector(`[data-role="${role}"]`) as HTMLElement).textContent ?? "";
}

/** Drag 25px straight up on the aim pad and release: a 90°, speed-5 shot. */
function dragAndFire(root: HTMLElement): void {
  const pad = root.querySelector('[data-role="pad"]') as HTMLElement;
  for (const [type, x, y] of [
    ["pointerdown", 200, 300],
    ["pointermove", 200, 275],
    ["pointerup", 200, 275],
  ] as const) {
    const ev = new Event(type, { bubbles: true });
    Object.assign(ev, { clientX: x, clientY: y });
    pad.dispatchEvent(ev);
  }
}

describe("App", () => {
  let root: HTMLElement;
  let server: MockServer;

  beforeEach(() => {
    document.body.innerHTML = '<div id="app"></div>';
    root = document.getElementById("app") as HTMLElement;
    server = new MockServer();
    new App(root, {
      clock: new ManualClock(),
      clipSource: async () => silentClip(500),
      fetchFn: server.fetchFn,
    });
    setField(root, "base-url", "http://svc");
    setField(root, "token", "tok-helper");
  });

  it("walks a whole session by following the server's phases", async () => {
    const attemptScript: RouteResult[] = [
      { status: 201, body: attemptResponse({ next_item: item("ship", "ship") }) },
      { status: 201, body: attemptResponse({ phase: "Firing", next_item: null, power: 10 }) },
      {
        status: 201,
        body: attemptResponse({ phase: "Firing", next_item: null, round: 2, power: 10 }),
      },
    ];
    const launchScript: RouteResult[] = [
      { body: launchResponse([{ tick: 2, kind: "NativeCaptured" }], { power: 5 }) },
      {
        body: launchResponse([{ tick: 5, kind: "BubbleExpired" }], {
          phase: "PowerUp",
          round: 2,
          items: [item("thumb", "thumb")],
        }),
      },
      {
        // the real service leaves phase at "Firing" when rounds run out;
        // session_complete alone marks the end
        body: launchResponse([{ tick: 9, kind: "GameOver" }], {
          phase: "Firing",
          session_complete: true,
          score: 55,
        }),
      },
    ];
    server.route("POST", /^\/api\/v1\/sessions$/, () => ({
      status: 201,
      body: sessionState({ items: [item("cat", "cat"), item("ship", "ship")] }),
    }));
    server.route("POST", /^\/api\/v1\/sessions\/sess-1\/attempts$/, () => {
      const next = attemptScript.shift();
      if (!next) throw new Error("attempt script exhausted");
      return next;
    });
    server.route("POST", /^\/api\/v1\/sessions\/sess-1\/launch$/, () => {
      const next = launchScript.shift();
      if (!next) throw new Error("launch script exhausted");
      return next;
    });
    server.route("POST", /^\/api\/v1\/sessions\/sess-1\/finish$/, () => ({
      body: {
        session_id: "sess-1",
        pupil_id: "p1",
        helper_id: "helper:ms-lee",
        started_at: 1,
        ended_at: 2,
        attempts: [
          {
            session_id: "sess-1",
            item_id: "cat",
            presented_at: 1,
            result: {},
            correct: true,
            gaze_dwell_ms: 300,
            confidence: 0.8,
          },
          {
            session_id: "sess-1",
            item_id: "ship",
            presented_at: 1.5,
            result: {},
            correct: false,
            gaze_dwell_ms: 210,
            confidence: 0.2,
          },
        ],
        final_score: 55,
      },
    }));

    setField(root, "pupil", "p1");
    setField(root, "helper-token", "tok-helper");
    press(root, "start-play");
    await flush();
    // round 1 reading: the first bubble comes from the session's item list
    expect(text(root, "bubble")).toBe("cat");

    press(root, "record");
    await flush();
    expect(text(root, "bubble")).toBe("ship");

    press(root, "record");
    await flush();
    // the server flipped to Firing, so the aim pad replaces the bubble
    expect(root.querySelector('[data-role="pad"]')).not.toBeNull();

    dragAndFire(root);
    await flush();
    // still Firing after the first shot
    expect(root.querySelector('[data-role="pad"]')).not.toBeNull();

    dragAndFire(root);
    await flush();
    // back to PowerUp for round 2 with the new item list
    expect(text(root, "bubble")).toBe("thumb");

    press(root, "record");
    await flush();
    dragAndFire(root);
    await flush();
    await flush();
    expect(text(root, "final-score")).toBe("final score 55");
    expect(text(root, "read-count")).toBe("1 of 2 read correctly");
  });

  it("surfaces a session-creation failure on the login screen", async () => {
    server.route("POST", /^\/api\/v1\/sessions$/, () =>
      apiError(403, "forbidden", "role may not run sessions"),
    );
    setField(root, "pupil", "p1");
    setField(root, "helper-token", "tok-parent");
    press(root, "start-play");
    await flush();
    expect(text(root, "login-status")).toContain("forbidden");
  });

  it("asks for a roster before opening the dashboard", async () => {
    press(root, "open-dashboard");
    await flush();
    expect(text(root, "login-status")).toContain("at least one pupil");
  });
});
