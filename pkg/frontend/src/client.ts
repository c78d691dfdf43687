/** Thin fetch wrapper over the runtime's control API. */

import { parseSseStream, streamChunks } from "./sse.js";
import type {
  CommandResult,
  ControlCommand,
  EngineEvent,
  ModelsResponse,
  StatusView,
} from "./types.js";

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  async status(): Promise<StatusView> {
    const resp = await fetch(`${this.baseUrl}/api/status`);
    if (!resp.ok) throw new Error(`status request failed: ${resp.status}`);
    return (await resp.json()) as StatusView;
  }

  async models(): Promise<ModelsResponse> {
    const resp = await fetch(`${this.baseUrl}/api/models`);
    if (!resp.ok) throw new Error(`models request failed: ${resp.status}`);
    return (await resp.json()) as ModelsResponse;
  }

  async command(cmd: ControlCommand): Promise<CommandResult> {
    const resp = await fetch(`${this.baseUrl}/api/command`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(cmd),
    });
    try {
      return (await resp.json()) as CommandResult;
    } catch {
      return { ok: false, error: `command failed with HTTP ${resp.status}` };
    }
  }

  /** Live event stream; the generator ends when the server closes it. */
  async *events(signal?: AbortSignal): AsyncGenerator<EngineEvent> {
    const resp = await fetch(`${this.baseUrl}/api/events`, {
      signal,
      headers: { accept: "text/event-stream" },
    });
    if (!resp.ok || !resp.body) {
      throw new Error(`event stream rejected: ${resp.status}`);
    }
    for await (const message of parseSseStream(streamChunks(resp.body))) {
      if (!message.data) continue;
      yield JSON.parse(message.data) as EngineEvent;
    }
  }
}

/** Reconnect backoff: doubles per failure, capped, reset on success. */
export const INITIAL_BACKOFF_MS = 1000;
export const MAX_BACKOFF_MS = 15000;

export function nextBackoff(previousMs: number): number {
  return Math.min(previousMs * 2, MAX_BACKOFF_MS);
}
