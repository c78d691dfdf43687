import { describe, expect, it } from "vitest";

import {
  renderApp,
  renderModelPicker,
  renderSaving,
  renderSparkline,
  renderTimings,
  renderTopK,
} from "../src/render.js";
import {
  applyEvent,
  applyStatus,
  initialState,
  markConnected,
  markDisconnected,
  markEnded,
} from "../src/state.js";
import type { PredictionEvent, StatusView } from "../src/types.js";

const PREDICTION: PredictionEvent = {
  type: "prediction",
  model_id: "tiny-embedded",
  window_index: 4,
  window_start_iso: "2026-08-23T00:00:20.000000000+00:00",
  top_k: [
    ["Speech", 0.71],
    ["Music", 0.12],
    ["Dog", 0.05],
  ],
  recording_time_s: 5.0,
  inference_time_ms: 0.4,
  total_time_ms: 0.9,
};

const STATUS: StatusView = {
  run_id: "r1",
  model_id: "tiny-embedded",
  scenario: "gui",
  uptime_s: 30.0,
  last_prediction: null,
  counters: {
    windows_dropped: 1,
    backend_failures: 0,
    stream_gaps: 0,
    write_failures: 0,
  },
  cpu_temp_c: 61.5,
  save_audio: false,
  top_k: 3,
  predictions: 5,
  subscribers: 1,
};

function bars(html: string): number {
  return (html.match(/data-bar/g) ?? []).length;
}

describe("renderTopK", () => {
  it("draws three ordered bars for a top-3 prediction", () => {
    const html = renderTopK(PREDICTION, 3);
    expect(bars(html)).toBe(3);
    const speech = html.indexOf("Speech");
    const music = html.indexOf("Music");
    const dog = html.indexOf("Dog");
    expect(speech).toBeGreaterThan(-1);
    expect(speech).toBeLessThan(music);
    expect(music).toBeLessThan(dog);
    expect(html).toContain("width:71.0%");
  });

  it("draws exactly one bar after the TOP-1 toggle", () => {
    expect(bars(renderTopK(PREDICTION, 1))).toBe(1);
  });

  it("shows a placeholder before the first prediction", () => {
    const html = renderTopK(null, 3);
    expect(bars(html)).toBe(0);
    expect(html).toContain("waiting for predictions");
  });

  it("escapes markup in label names", () => {
    const hostile = {
      ...PREDICTION,
      top_k: [["<script>", 0.9]] as [string, number][],
    };
    const html = renderTopK(hostile, 1);
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });
});

describe("panels", () => {
  it("timing readouts show all three fields", () => {
    const html = renderTimings(PREDICTION);
    expect(html).toContain("recording time");
    expect(html).toContain("inference time");
    expect(html).toContain("total execution time");
    expect(html).toContain("5.0 s");
    expect(html).toContain("0.4 ms");
    expect(html).toContain("0.9 ms");
  });

  it("saving indicator states the storage policy", () => {
    expect(renderSaving(false)).toContain("no audio data is being stored");
    expect(renderSaving(true)).toContain("recording windows to disk");
  });

  it("model picker marks the active model", () => {
    const html = renderModelPicker(
      [
        { model_id: "tiny-embedded", pipeline_kind: "embedded-frontend" },
        { model_id: "lat-small", pipeline_kind: "embedded-frontend" },
      ],
      "lat-small",
      false,
    );
    expect(html).toContain('value="lat-small" selected');
    expect(html).not.toContain('value="tiny-embedded" selected');
  });

  it("sparkline plots one point per value and skips nulls", () => {
    const html = renderSparkline([50, null, 60, 70], "temp");
    const points = html.match(/points="([^"]*)"/);
    expect(points).not.toBeNull();
    expect(points![1].split(" ")).toHaveLength(3);
  });

  it("sparkline with no data stays an empty svg", () => {
    expect(renderSparkline([null, null], "temp")).not.toContain("polyline");
  });
});

describe("renderApp", () => {
  it("live view shows model label, bars, controls and counters", () => {
    let state = markConnected(initialState());
    state = applyStatus(state, STATUS);
    state = applyEvent(state, PREDICTION);
    const html = renderApp(state);
    expect(html).toContain("tiny-embedded");
    expect(bars(html)).toBe(3);
    expect(html).toContain('id="end-process"');
    expect(html).toContain("dropped 1");
    expect(html).not.toContain("disabled");
  });

  it("disconnected view shows a banner and disables every control", () => {
    let state = markConnected(initialState());
    state = applyStatus(state, STATUS);
    state = markDisconnected(state);
    const html = renderApp(state);
    expect(html).toContain("stream disconnected");
    const buttons = html.match(/<button[^>]*>/g) ?? [];
    expect(buttons.length).toBeGreaterThan(0);
    for (const button of buttons) {
      expect(button).toContain("disabled");
    }
    expect(html).toContain("<select id=\"model-select\" disabled");
  });

  it("ended runs render the terminal screen only", () => {
    let state = applyStatus(initialState(), STATUS);
    state = markEnded(state);
    const html = renderApp(state);
    expect(html).toContain("Run ended");
    expect(html).toContain("after 5 predictions");
    expect(html).not.toContain("<button");
  });
});
