import { describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { ManualClock } from "../src/clock.js";
import { encodeWav, floatTo16, validateClip } from "../src/wav.js";
import type { AttemptResponse, LaunchResponse } from "../src/types.js";
import { PowerUpView } from "../src/views/powerup.js";
import { FiringView } from "../src/views/firing.js";
import { DashboardView } from "../src/views/dashboard.js";
import {
  MockServer,
  apiError,
  attemptResponse,
  clipFromRequest,
  item,
  launchResponse,
} from "./mock_server.js";

const ATTEMPTS = /^\/api\/v1\/sessions\/sess-1\/attempts$/;
const LAUNCH = /^\/api\/v1\/sessions\/sess-1\/launch$/;

function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

function text(root: HTMLElement, role: string): string {
  return (root.querySelector(`[data-role="${role}"]`) as HTMLElement).textContent ?? "";
}

function toneClip(seconds: number): Uint8Array {
  const samples = new Float32Array(Math.round(seconds * 16000));
  for (let i = 0; i < samples.length; i++) {
    samples[i] = 0.4 * Math.sin((2 * Math.PI * 440 * i) / 16000);
  }
  return encodeWav(floatTo16(samples));
}

function mount(): { powerRoot: HTMLElement; fireRoot: HTMLElement } {
  document.body.innerHTML = '<div id="power-root"></div><div id="fire-root"></div>';
  return {
    powerRoot: document.getElementById("power-root") as HTMLElement,
    fireRoot: document.getElementById("fire-root") as HTMLElement,
  };
}

describe("webapp acceptance", () => {
  it("[SECONDARY] gauge displays equal server response values over 20 scripted exchanges", async () => {
    const { powerRoot, fireRoot } = mount();
    const server = new MockServer();
    const attemptScript: AttemptResponse[] = [];
    const launchScript: LaunchResponse[] = [];
    server.route("POST", ATTEMPTS, () => ({ status: 201, body: attemptScript.shift() }));
    server.route("POST", LAUNCH, () => ({ body: launchScript.shift() }));
    const api = new ApiClient("tok-helper", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    const clock = new ManualClock();
    const powerView = new PowerUpView(powerRoot, "sess-1", {
      api,
      clock,
      clipSource: async () => toneClip(0.8),
      onResponse: () => {},
    });
    const fireView = new FiringView(fireRoot, "sess-1", 99, { api, onResponse: () => {} });

    let exchanges = 0;
    for (let i = 0; i < 10; i++) {
      // scripted gauge values are arbitrary, so a display can only match
      // by echoing the response, never by computing anything locally
      const power = i * 1.3 + 0.7;
      const score = i * 3 + 1;
      const flood = i * 0.037;

      attemptScript.push(attemptResponse({ power, score, flood_level: flood }));
      powerView.show(item(`w${i}`));
      clock.advance(250);
      (powerRoot.querySelector('[data-role="record"]') as HTMLButtonElement).click();
      await flush();
      expect(text(powerRoot, "power")).toBe(power.toFixed(1));
      expect(text(powerRoot, "score")).toBe(String(score));
      expect(text(powerRoot, "flood")).toBe(flood.toFixed(3));
      exchanges += 1;

      const launchPower = 50 - i * 2.1;
      const launchScore = 100 - i * 4;
      const launchFlood = 1 - i * 0.05;
      launchScript.push(
        launchResponse([{ tick: i, kind: "BubbleExpired" }], {
          power: launchPower,
          score: launchScore,
          flood_level: launchFlood,
        }),
      );
      await fireView.fire(45 + i, 2 + i);
      expect(text(fireRoot, "power")).toBe(launchPower.toFixed(1));
      expect(text(fireRoot, "score")).toBe(String(launchScore));
      expect(text(fireRoot, "flood")).toBe(launchFlood.toFixed(3));
      exchanges += 1;
    }
    expect(exchanges).toBe(20);
    expect(server.requestsTo(ATTEMPTS)).toHaveLength(10);
    expect(server.requestsTo(LAUNCH)).toHaveLength(10);
    console.log("[SECONDARY] gauge displays equal server response values over 20 exchanges: PASS");
  });

  it("[SECONDARY] uploaded clips validate against the WAV contract (16 kHz mono PCM16, at most 5 s)", async () => {
    const { powerRoot } = mount();
    const server = new MockServer();
    server.route("POST", ATTEMPTS, () => ({ status: 201, body: attemptResponse() }));
    const api = new ApiClient("tok-helper", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    const clips = [toneClip(0.8), toneClip(4.9), toneClip(0.05)];
    let cursor = 0;
    const view = new PowerUpView(powerRoot, "sess-1", {
      api,
      clock: new ManualClock(),
      clipSource: async () => clips[cursor++],
      onResponse: () => {},
    });
    for (let i = 0; i < clips.length; i++) {
      view.show(item(`w${i}`));
      (powerRoot.querySelector('[data-role="record"]') as HTMLButtonElement).click();
      await flush();
    }
    // the microphone-denied manual control uploads too
    view.show(item("w-manual"));
    (powerRoot.querySelector('[data-role="manual-incorrect"]') as HTMLButtonElement).click();
    await flush();

    const uploads = server.requestsTo(ATTEMPTS);
    expect(uploads).toHaveLength(4);
    for (const req of uploads) {
      const info = validateClip(clipFromRequest(req));
      expect(info.sampleRate).toBe(16000);
      expect(info.channels).toBe(1);
      expect(info.bitsPerSample).toBe(16);
      expect(info.durationSeconds).toBeLessThanOrEqual(5);
    }
    console.log("[SECONDARY] uploaded clips validate against the WAV contract: PASS");
  });

  it("[SECONDARY] dwell timing is exact under an injected clock", async () => {
    const { powerRoot } = mount();
    const server = new MockServer();
    server.route("POST", ATTEMPTS, () => ({ status: 201, body: attemptResponse() }));
    const api = new ApiClient("tok-helper", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    const clock = new ManualClock(123_456);
    const view = new PowerUpView(powerRoot, "sess-1", {
      api,
      clock,
      clipSource: async () => toneClip(0.3),
      onResponse: () => {},
    });
    const dwells = [148, 1_011, 37, 2_905, 600];
    for (const [index, dwell] of dwells.entries()) {
      view.show(item(`w${index}`));
      clock.advance(dwell);
      (powerRoot.querySelector('[data-role="record"]') as HTMLButtonElement).click();
      await flush();
      expect(server.requests[index].body?.gaze_dwell_ms).toBe(dwell);
    }
    console.log("[SECONDARY] dwell timing exact under an injected clock: PASS");
  });

  it("[SECONDARY] parent-scope dashboard never renders out-of-scope pupils", async () => {
    document.body.innerHTML = '<div id="dash"></div>';
    const root = document.getElementById("dash") as HTMLElement;
    const server = new MockServer();
    const inScope = ["p-amy", "p-ben"];
    const outOfScope = ["p-cls-1", "p-cls-2", "p-cls-3"];
    for (const pupil of inScope) {
      server.route("GET", new RegExp(`^/api/v1/pupils/${pupil}/flags$`), () => ({
        body: {
          pupil_id: pupil,
          flags: [
            {
              pupil_id: pupil,
              item_id: "ship",
              proficiency: 0.21,
              attempts: 5,
              priority_rank: 1,
              raised_at: 1_755_000_000,
            },
          ],
        },
      }));
    }
    server.route("GET", /^\/api\/v1\/pupils\/[^/]+\/flags$/, () =>
      apiError(403, "out_of_scope", "pupil not in this parent's scope"),
    );
    server.route("GET", /^\/api\/v1\/pupils\/[^/]+\/profile$/, () =>
      apiError(403, "forbidden", "role not allowed"),
    );
    server.route("GET", /^\/api\/v1\/pupils\/[^/]+\/records$/, () =>
      apiError(403, "out_of_scope", "pupil not in this parent's scope"),
    );
    const api = new ApiClient("tok-parent", { baseUrl: "http://svc", fetchFn: server.fetchFn });
    const view = new DashboardView(root, [...outOfScope, ...inScope], { api });
    await view.load();
    expect(view.visiblePupils()).toEqual(inScope);
    for (const pupil of outOfScope) {
      expect(root.innerHTML).not.toContain(pupil);
    }
    // even a forced history request for a hidden pupil leaks nothing
    await view.showRecords("p-cls-1");
    for (const pupil of outOfScope) {
      expect(root.innerHTML).not.toContain(pupil);
    }
    console.log("[SECONDARY] parent-scope dashboard never renders out-of-scope pupils: PASS");
  });
});
