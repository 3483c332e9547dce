import { beforeEach, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { ManualClock } from "../src/clock.js";
import { silentClip, validateClip } from "../src/wav.js";
import type { AttemptResponse } from "../src/types.js";
import { PowerUpView } from "../src/views/powerup.js";
import {
  MockServer,
  apiError,
  attemptResponse,
  clipFromRequest,
  item,
} from "./mock_server.js";
import type { RouteResult } from "./mock_server.js";

const ATTEMPTS = /^\/api\/v1\/sessions\/sess-1\/attempts$/;

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function text(root: HTMLElement, role: string): string {
  return (root.querySelector(`[data-role="${role}"]`) as HTMLElement).textContent ?? "";
}

function press(root: HTMLElement, role: string): void {
  (root.querySelector(`[data-role="${role}"]`) as HTMLButtonElement).click();
}

describe("PowerUpView", () => {
  let root: HTMLElement;
  let server: MockServer;
  let clock: ManualClock;
  let script: RouteResult[];
  let view: PowerUpView;

  beforeEach(() => {
    document.body.innerHTML = '<div id="root"></div>';
    root = document.getElementById("root") as HTMLElement;
    server = new MockServer();
    clock = new ManualClock(50_000);
    script = [];
    server.route("POST", ATTEMPTS, () => {
      const next = script.shift();
      if (!next) throw new Error("no scripted response left");
      return next;
    });
    const api = new ApiClient("tok-helper", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    view = new PowerUpView(root, "sess-1", {
      api,
      clock,
      clipSource: async () => silentClip(800),
      onResponse: () => {},
    });
  });

  function ok(resp: AttemptResponse): RouteResult {
    return { status: 201, body: resp };
  }

  it("shows the bubble text and measures dwell from display to press", async () => {
    view.show(item("cat", "cat"));
    expect(text(root, "bubble")).toBe("cat");
    clock.advance(1234);
    script.push(ok(attemptResponse()));
    press(root, "record");
    await flush();
    expect(server.requests[0].body?.gaze_dwell_ms).toBe(1234);
  });

  it("uploads a clip that satisfies the WAV contract", async () => {
    view.show(item("cat"));
    script.push(ok(attemptResponse()));
    press(root, "record");
    await flush();
    const info = validateClip(clipFromRequest(server.requests[0]));
    expect(info.sampleRate).toBe(16000);
    expect(info.channels).toBe(1);
    expect(info.durationSeconds).toBeLessThanOrEqual(5);
  });

  it("renders gauges verbatim from the response", async () => {
    view.show(item("cat"));
    script.push(ok(attemptResponse({ power: 3.5, score: 7, flood_level: 0.125 })));
    press(root, "record");
    await flush();
    expect(text(root, "power")).toBe("3.5");
    expect(text(root, "score")).toBe("7");
    expect(text(root, "flood")).toBe("0.125");
  });

  it("keeps the bubble and dwell origin on an upload rejection", async () => {
    view.show(item("cat", "cat"));
    clock.advance(600);
    script.push(apiError(422, "bad_audio", "unreadable clip"));
    press(root, "record");
    await flush();
    expect(text(root, "status")).toContain("upload rejected (bad_audio)");
    expect(text(root, "bubble")).toBe("cat");
    clock.advance(400);
    script.push(ok(attemptResponse()));
    press(root, "record");
    await flush();
    // dwell still counts from the original display of this bubble
    expect(server.requests[1].body?.gaze_dwell_ms).toBe(1000);
  });

  it("manual marking sends a silent clip and labels the verdict locally", async () => {
    view.show(item("cat"));
    clock.advance(900);
    script.push(
      ok(
        attemptResponse({
          correct: false,
          recognition: {
            item_id: null,
            decision: "reject",
            best_score: 0.1,
            per_candidate_scores: {},
            loudness_dbfs: null,
          },
        }),
      ),
    );
    press(root, "manual-correct");
    await flush();
    const req = server.requests[0];
    expect(req.body?.gaze_dwell_ms).toBe(900);
    const info = validateClip(clipFromRequest(req));
    expect(info.durationSeconds).toBeCloseTo(0.6, 3);
    expect(text(root, "status")).toContain("helper marked correct; no audio was captured");
  });

  it("ignores presses while a submission is in flight", async () => {
    view.show(item("cat"));
    script.push(ok(attemptResponse()), ok(attemptResponse()));
    press(root, "record");
    press(root, "record"); // lands while the first is still in flight
    await flush();
    expect(server.requestsTo(ATTEMPTS)).toHaveLength(1);
  });
});
