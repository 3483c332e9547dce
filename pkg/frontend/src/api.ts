import type {
  AttemptResponse,
  FlagsResponse,
  ItemsResponse,
  LaunchResponse,
  ProfileResponse,
  RecordsResponse,
  SessionRecordPayload,
  SessionState,
} from "./types.js";
import { toBase64 } from "./wav.js";

export class ApiError extends Error {
  status: number;
  code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.status = status;
    this.code = code;
  }
}

export interface ApiClientOptions {
  baseUrl?: string;
  fetchFn?: typeof fetch;
}

/**
 * Thin typed wrapper over the documented /api/v1 endpoints.
 *
 * The token rides in the Authorization header everywhere except
 * session creation, which names the session runner in the body.
 */
export class ApiClient {
  readonly baseUrl: string;
  private token: string;
  private fetchFn: typeof fetch;

  constructor(token: string, options: ApiClientOptions = {}) {
    this.token = token;
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchFn = options.fetchFn ?? fetch.bind(globalThis);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { Authorization: `Bearer ${this.token}` };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status}`;
      try {
        const payload = await resp.json();
        if (payload && typeof payload.code === "string") {
          code = payload.code;
          message = payload.message ?? message;
        } else if (payload && typeof payload.detail === "string") {
          message = payload.detail;
        }
      } catch {
        // non-JSON error body; keep the fallback
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  createSession(pupilId: string, helperToken: string): Promise<SessionState> {
    return this.request<SessionState>("POST", "/api/v1/sessions", {
      pupil_id: pupilId,
      helper_token: helperToken,
    });
  }

  submitAttempt(
    sessionId: string,
    itemId: string,
    clip: Uint8Array,
    gazeDwellMs?: number | null,
  ): Promise<AttemptResponse> {
    const body: Record<string, unknown> = {
      item_id: itemId,
      audio_b64: toBase64(clip),
    };
    if (gazeDwellMs !== undefined && gazeDwellMs !== null) {
      body.gaze_dwell_ms = Math.round(gazeDwellMs);
    }
    return this.request<AttemptResponse>("POST", `/api/v1/sessions/${sessionId}/attempts`, body);
  }

  launch(sessionId: string, angleDeg: number, speed: number): Promise<LaunchResponse> {
    return this.request<LaunchResponse>("POST", `/api/v1/sessions/${sessionId}/launch`, {
      angle_deg: angleDeg,
      speed,
    });
  }

  finishSession(sessionId: string): Promise<SessionRecordPayload> {
    return this.request<SessionRecordPayload>("POST", `/api/v1/sessions/${sessionId}/finish`);
  }

  getProfile(pupilId: string): Promise<ProfileResponse> {
    return this.request<ProfileResponse>("GET", `/api/v1/pupils/${pupilId}/profile`);
  }

  getRecords(pupilId: string): Promise<RecordsResponse> {
    return this.request<RecordsResponse>("GET", `/api/v1/pupils/${pupilId}/records`);
  }

  getFlags(pupilId: string): Promise<FlagsResponse> {
    return this.request<FlagsResponse>("GET", `/api/v1/pupils/${pupilId}/flags`);
  }

  getItems(band?: number): Promise<ItemsResponse> {
    const suffix = band === undefined ? "" : `?band=${band}`;
    return this.request<ItemsResponse>("GET", `/api/v1/items${suffix}`);
  }

  addRemark(pupilId: string, date: string, material: string, remarks: string): Promise<unknown> {
    return this.request("POST", `/api/v1/pupils/${pupilId}/remarks`, {
      date,
      material,
      remarks,
    });
  }
}
