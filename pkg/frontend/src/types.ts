/** Wire types for the runtime's control API. */

export type TopPair = [label: string, score: number];

export interface PredictionEvent {
  type: "prediction";
  model_id: string;
  window_index: number;
  window_start_iso: string;
  top_k: TopPair[];
  recording_time_s: number;
  inference_time_ms: number;
  total_time_ms: number;
}

export interface BucketEvent {
  type: "telemetry-bucket";
  bucket_start_iso: string;
  model_id: string;
  scenario: string;
  count: number;
  temp_mean: number | null;
  temp_max: number | null;
  lat_mean_ms: number | null;
  lat_p95_ms: number | null;
}

export interface ThermalEvent {
  type: "thermal-event";
  bucket_index: number;
  bucket_start_iso: string;
  direction: "up" | "down";
  max_temp_c: number;
}

export type EngineEvent = PredictionEvent | BucketEvent | ThermalEvent;

export interface Counters {
  windows_dropped: number;
  backend_failures: number;
  stream_gaps: number;
  write_failures: number;
}

export interface StatusView {
  run_id: string;
  model_id: string | null;
  scenario: string;
  uptime_s: number;
  last_prediction: Omit<PredictionEvent, "type"> | null;
  counters: Counters;
  cpu_temp_c: number | null;
  save_audio: boolean;
  top_k: number;
  predictions: number;
  subscribers: number;
}

export interface ModelInfo {
  model_id: string;
  pipeline_kind: string;
}

export interface ModelsResponse {
  models: ModelInfo[];
  active: string | null;
}

export type ControlCommand =
  | { kind: "change_model"; manifest_id: string }
  | { kind: "set_topk"; value: 1 | 3 }
  | { kind: "set_save_audio"; value: boolean }
  | { kind: "end_process" };

export interface CommandResult {
  ok: boolean;
  error?: string;
  latency_ms?: number;
}
