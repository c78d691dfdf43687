/** Browser entry point: wires the state machine, the event stream and the
 * control buttons to the DOM. Served by the engine itself under /. */

import { ApiClient, INITIAL_BACKOFF_MS, nextBackoff } from "./client.js";
import {
  applyEvent,
  applyModels,
  applyStatus,
  beginCommand,
  initialState,
  markConnected,
  markDisconnected,
  markEnded,
  resolveCommand,
  type UiState,
} from "./state.js";
import { renderApp } from "./render.js";
import type { ControlCommand } from "./types.js";

const root = document.querySelector<HTMLDivElement>("#app");
const client = new ApiClient("");

let state: UiState = initialState();

function paint(): void {
  if (!root) return;
  root.innerHTML = renderApp(state);
  bindControls();
}

function update(next: UiState): void {
  state = next;
  paint();
}

async function issue(command: ControlCommand): Promise<void> {
  const begun = beginCommand(state, command);
  if (!begun.accepted) return;
  update(begun.state);
  const result = await client.command(command);
  update(resolveCommand(state, result));
}

function bindControls(): void {
  document.querySelector("#topk-toggle")?.addEventListener("click", () => {
    void issue({ kind: "set_topk", value: state.selectedK === 3 ? 1 : 3 });
  });
  document.querySelector("#change-model")?.addEventListener("click", () => {
    const select = document.querySelector<HTMLSelectElement>("#model-select");
    if (select && select.value) {
      void issue({ kind: "change_model", manifest_id: select.value });
    }
  });
  document.querySelector("#save-toggle")?.addEventListener("click", () => {
    const saving = state.status?.save_audio ?? false;
    void issue({ kind: "set_save_audio", value: !saving });
  });
  document.querySelector("#end-process")?.addEventListener("click", () => {
    if (window.confirm("Stop the engine? The run cannot be resumed.")) {
      void issue({ kind: "end_process" });
    }
  });
}

async function pollStatus(): Promise<void> {
  try {
    update(applyStatus(state, await client.status()));
  } catch {
    // the stream loop owns connection state; a missed poll is fine
  }
}

// update() reassigns the captured binding, which the compiler's
// narrowing cannot see; read the phase through a call instead.
function currentPhase(): UiState["phase"] {
  return state.phase;
}

async function streamLoop(): Promise<void> {
  let backoff = INITIAL_BACKOFF_MS;
  while (currentPhase() !== "ended") {
    try {
      for await (const event of client.events()) {
        if (state.phase !== "live") update(markConnected(state));
        update(applyEvent(state, event));
        backoff = INITIAL_BACKOFF_MS;
      }
    } catch {
      // fall through to the reconnect path
    }
    update(markDisconnected(state));
    if (currentPhase() === "ended") break;
    await new Promise((resolve) => setTimeout(resolve, backoff));
    backoff = nextBackoff(backoff);
  }
  update(markEnded(state));
}

async function main(): Promise<void> {
  paint();
  try {
    const models = await client.models();
    update(applyModels(state, models.models));
  } catch {
    // picker stays empty until the next successful poll
  }
  await pollStatus();
  const poller = window.setInterval(() => void pollStatus(), 1000);
  await streamLoop();
  window.clearInterval(poller);
}

void main();
