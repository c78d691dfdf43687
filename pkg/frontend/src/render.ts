/** Pure view functions: state in, HTML string out. No DOM access here,
 * which keeps every render testable without a browser. */

import type { BucketEvent, ModelInfo, PredictionEvent } from "./types.js";
import type { UiState } from "./state.js";

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderTopK(
  prediction: PredictionEvent | null,
  k: 1 | 3,
): string {
  if (prediction === null) {
    return '<p class="placeholder">waiting for predictions</p>';
  }
  const rows = prediction.top_k.slice(0, k).map(([label, score]) => {
    const pct = (score * 100).toFixed(1);
    return (
      '<div class="bar-row">' +
      `<span class="bar-label">${esc(label)}</span>` +
      `<div class="bar" data-bar style="width:${pct}%"></div>` +
      `<span class="bar-score">${pct}%</span>` +
      "</div>"
    );
  });
  return `<div class="topk">${rows.join("")}</div>`;
}

export function renderTimings(prediction: PredictionEvent | null): string {
  const fmt = (value: number | undefined, unit: string) =>
    value === undefined ? "-" : `${value.toFixed(1)} ${unit}`;
  return (
    '<dl class="timings">' +
    `<dt>recording time</dt><dd data-recording>${fmt(
      prediction?.recording_time_s,
      "s",
    )}</dd>` +
    `<dt>inference time</dt><dd data-inference>${fmt(
      prediction?.inference_time_ms,
      "ms",
    )}</dd>` +
    `<dt>total execution time</dt><dd data-total>${fmt(
      prediction?.total_time_ms,
      "ms",
    )}</dd>` +
    "</dl>"
  );
}

export function renderSaving(saveAudio: boolean): string {
  return saveAudio
    ? '<p class="saving on">recording windows to disk</p>'
    : '<p class="saving off">no audio data is being stored</p>';
}

export function renderModelPicker(
  models: ModelInfo[],
  active: string | null,
  disabled: boolean,
): string {
  const options = models
    .map((m) => {
      const selected = m.model_id === active ? " selected" : "";
      return `<option value="${esc(m.model_id)}"${selected}>${esc(
        m.model_id,
      )} (${esc(m.pipeline_kind)})</option>`;
    })
    .join("");
  const attr = disabled ? " disabled" : "";
  return `<select id="model-select"${attr}>${options}</select>`;
}

/** Inline SVG polyline; one point per value, nulls skipped. */
export function renderSparkline(
  values: Array<number | null>,
  cssClass: string,
  width = 240,
  height = 48,
): string {
  const usable = values.filter((v): v is number => v !== null);
  if (usable.length === 0) {
    return `<svg class="spark ${cssClass}" viewBox="0 0 ${width} ${height}"></svg>`;
  }
  const lo = Math.min(...usable);
  const hi = Math.max(...usable);
  const span = hi - lo || 1;
  const step = usable.length > 1 ? width / (usable.length - 1) : 0;
  const points = usable
    .map((v, i) => {
      const x = (i * step).toFixed(1);
      const y = (height - ((v - lo) / span) * (height - 4) - 2).toFixed(1);
      return `${x},${y}`;
    })
    .join(" ");
  return (
    `<svg class="spark ${cssClass}" viewBox="0 0 ${width} ${height}">` +
    `<polyline fill="none" points="${points}"/></svg>`
  );
}

export function renderCharts(buckets: BucketEvent[]): string {
  return (
    '<div class="charts">' +
    "<figure><figcaption>max temperature per bucket</figcaption>" +
    renderSparkline(buckets.map((b) => b.temp_max), "temp") +
    "</figure>" +
    "<figure><figcaption>mean latency per bucket</figcaption>" +
    renderSparkline(buckets.map((b) => b.lat_mean_ms), "latency") +
    "</figure>" +
    "</div>"
  );
}

export function renderBanner(state: UiState): string {
  switch (state.phase) {
    case "connecting":
      return '<div class="banner info">connecting to the engine</div>';
    case "disconnected":
      return '<div class="banner warn">stream disconnected, retrying</div>';
    case "ending":
      return '<div class="banner info">stopping the engine</div>';
    default:
      return "";
  }
}

export function renderTerminal(state: UiState): string {
  const total = state.status?.predictions ?? 0;
  return (
    '<div class="terminal">' +
    "<h1>Run ended</h1>" +
    `<p>The engine stopped after ${total} predictions.</p>` +
    "<p>Restart it from the command line to continue.</p>" +
    "</div>"
  );
}

export function renderApp(state: UiState): string {
  if (state.phase === "ended") {
    return renderTerminal(state);
  }
  const disabled = state.phase !== "live" || state.pending !== null;
  const attr = disabled ? " disabled" : "";
  const toggleLabel = state.selectedK === 3 ? "TOP-1" : "TOP-3";
  const temp = state.status?.cpu_temp_c;
  const counters = state.status?.counters;
  return (
    renderBanner(state) +
    (state.toast ? `<div class="toast">${esc(state.toast)}</div>` : "") +
    '<header class="masthead">' +
    `<h1>${esc(state.modelLabel ?? "no model")}</h1>` +
    `<span class="temp">${temp != null ? temp.toFixed(1) + " C" : ""}</span>` +
    "</header>" +
    renderTopK(state.lastPrediction, state.selectedK) +
    renderTimings(state.lastPrediction) +
    renderSaving(state.status?.save_audio ?? false) +
    '<section class="controls">' +
    `<button id="topk-toggle"${attr}>${toggleLabel}</button>` +
    renderModelPicker(state.models, state.modelLabel, disabled) +
    `<button id="change-model"${attr}>Change Model</button>` +
    `<button id="save-toggle"${attr}>${
      state.status?.save_audio ? "Stop Saving" : "Save Audio"
    }</button>` +
    `<button id="end-process" class="danger"${attr}>End Process</button>` +
    "</section>" +
    renderCharts(state.buckets) +
    '<footer class="counters">' +
    `dropped ${counters?.windows_dropped ?? 0} | ` +
    `backend failures ${counters?.backend_failures ?? 0} | ` +
    `stream gaps ${counters?.stream_gaps ?? 0} | ` +
    `write failures ${counters?.write_failures ?? 0}` +
    "</footer>"
  );
}
