/** Console state and pure reducers. All substantive state comes from
 * server events; the UI only owns view concerns (selection, toasts,
 * connection phase) and optimistic edits that roll back on rejection. */

import type {
  BucketEvent,
  CommandResult,
  ControlCommand,
  EngineEvent,
  ModelInfo,
  PredictionEvent,
  StatusView,
  ThermalEvent,
} from "./types.js";

export type Phase = "connecting" | "live" | "disconnected" | "ending" | "ended";

export interface PendingCommand {
  command: ControlCommand;
  /** snapshot for rollback when the server rejects the command */
  previousK: 1 | 3;
}

export interface UiState {
  phase: Phase;
  status: StatusView | null;
  lastPrediction: PredictionEvent | null;
  buckets: BucketEvent[];
  thermal: ThermalEvent[];
  models: ModelInfo[];
  modelLabel: string | null;
  selectedK: 1 | 3;
  pending: PendingCommand | null;
  toast: string | null;
}

/** Rolling chart buffer horizon; older bucket events are discarded. */
export const BUCKET_HORIZON_MS = 30 * 60 * 1000;
const THERMAL_KEEP = 50;

export function initialState(): UiState {
  return {
    phase: "connecting",
    status: null,
    lastPrediction: null,
    buckets: [],
    thermal: [],
    models: [],
    modelLabel: null,
    selectedK: 3,
    pending: null,
    toast: null,
  };
}

export function pruneBuckets(buckets: BucketEvent[]): BucketEvent[] {
  if (buckets.length === 0) return buckets;
  const newest = Date.parse(buckets[buckets.length - 1].bucket_start_iso);
  return buckets.filter(
    (b) => newest - Date.parse(b.bucket_start_iso) < BUCKET_HORIZON_MS,
  );
}

export function applyStatus(state: UiState, status: StatusView): UiState {
  const next: UiState = { ...state, status, modelLabel: status.model_id };
  // The server's k is authoritative unless an optimistic edit is in flight.
  if (state.pending === null && (status.top_k === 1 || status.top_k === 3)) {
    next.selectedK = status.top_k;
  }
  return next;
}

export function applyModels(state: UiState, models: ModelInfo[]): UiState {
  return { ...state, models };
}

export function applyEvent(state: UiState, event: EngineEvent): UiState {
  switch (event.type) {
    case "prediction":
      return { ...state, lastPrediction: event, modelLabel: event.model_id };
    case "telemetry-bucket":
      return { ...state, buckets: pruneBuckets([...state.buckets, event]) };
    case "thermal-event":
      return { ...state, thermal: [...state.thermal, event].slice(-THERMAL_KEEP) };
    default:
      return state;
  }
}

/** At most one command is in flight; a second request is refused. */
export function beginCommand(
  state: UiState,
  command: ControlCommand,
): { state: UiState; accepted: boolean } {
  if (state.pending !== null || state.phase === "ended") {
    return { state, accepted: false };
  }
  const pending: PendingCommand = { command, previousK: state.selectedK };
  let next: UiState = { ...state, pending, toast: null };
  if (command.kind === "set_topk") {
    next = { ...next, selectedK: command.value };
  }
  if (command.kind === "end_process") {
    next = { ...next, phase: "ending" };
  }
  return { state: next, accepted: true };
}

export function resolveCommand(
  state: UiState,
  result: CommandResult,
): UiState {
  const pending = state.pending;
  if (pending === null) return state;
  if (result.ok) {
    return { ...state, pending: null };
  }
  // Roll the optimistic edit back and surface the rejection.
  let next: UiState = {
    ...state,
    pending: null,
    toast: result.error ?? "command rejected",
  };
  if (pending.command.kind === "set_topk") {
    next = { ...next, selectedK: pending.previousK };
  }
  if (pending.command.kind === "end_process" && state.phase === "ending") {
    next = { ...next, phase: "live" };
  }
  return next;
}

export function markConnected(state: UiState): UiState {
  if (state.phase === "ending" || state.phase === "ended") return state;
  return { ...state, phase: "live" };
}

export function markDisconnected(state: UiState): UiState {
  if (state.phase === "ended") return state;
  // A drop while ending means the engine honoured End Process.
  if (state.phase === "ending") return { ...state, phase: "ended" };
  return { ...state, phase: "disconnected" };
}

export function markEnded(state: UiState): UiState {
  return { ...state, phase: "ended" };
}

export function clearToast(state: UiState): UiState {
  return { ...state, toast: null };
}
