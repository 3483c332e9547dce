/** Wire shapes of the /api/v1 service, as returned by the server. */

export interface ItemInfo {
  item_id: string;
  text: string;
  kind: string;
  band: number;
}

export interface SessionState {
  session_id: string;
  pupil_id: string;
  round: number;
  rounds_total: number;
  session_complete: boolean;
  phase: string;
  power: number;
  score: number;
  flood_level: number;
  items?: ItemInfo[];
}

export interface RecognitionResult {
  item_id: string | null;
  decision: string;
  best_score: number;
  per_candidate_scores: Record<string, number>;
  loudness_dbfs: number | null;
}

export interface AttemptResponse extends SessionState {
  correct: boolean;
  recognition: RecognitionResult;
  next_item: ItemInfo | null;
}

export interface GameEvent {
  tick: number;
  kind: string;
  [key: string]: unknown;
}

export interface LaunchResponse extends SessionState {
  events: GameEvent[];
}

export interface AttemptRecord {
  session_id: string;
  item_id: string;
  presented_at: number;
  result: RecognitionResult;
  correct: boolean;
  gaze_dwell_ms: number | null;
  confidence: number | null;
}

export interface SessionRecordPayload {
  session_id: string;
  pupil_id: string;
  helper_id: string;
  started_at: number;
  ended_at: number;
  attempts: AttemptRecord[];
  final_score: number;
  [key: string]: unknown;
}

export interface FlagRow {
  pupil_id: string;
  item_id: string;
  proficiency: number;
  attempts: number;
  priority_rank: number;
  raised_at: number;
}

export interface FlagsResponse {
  pupil_id: string;
  flags: FlagRow[];
}

export interface ProfileResponse {
  pupil_id: string;
  ability_band: number;
  proficiency: Record<string, number>;
  attempts: Record<string, number>;
  confidence_history: [number, number][];
  progression: { ready: boolean; band: number };
}

export interface RecordEventRow {
  event_id: number;
  pupil_id: string;
  at: number;
  kind: string;
  author: string;
  payload: Record<string, unknown>;
}

export interface RecordsResponse {
  pupil_id: string;
  events: RecordEventRow[];
}

export interface ItemsResponse {
  items: ItemInfo[];
}

export interface ApiErrorBody {
  status: number;
  code: string;
  message: string;
}
