import { describe, expect, it } from "vitest";

import { parseSseStream, type SseMessage } from "../src/sse.js";

const encoder = new TextEncoder();

async function* chunksOf(...parts: string[]): AsyncGenerator<Uint8Array> {
  for (const part of parts) yield encoder.encode(part);
}

async function collect(parts: string[]): Promise<SseMessage[]> {
  const out: SseMessage[] = [];
  for await (const msg of parseSseStream(chunksOf(...parts))) out.push(msg);
  return out;
}

describe("parseSseStream", () => {
  it("parses a single framed event", async () => {
    const got = await collect(['event: prediction\ndata: {"a":1}\n\n']);
    expect(got).toEqual([{ event: "prediction", data: '{"a":1}' }]);
  });

  it("reassembles frames split across chunks", async () => {
    const got = await collect([
      "event: pre",
      "diction\nda",
      'ta: {"window_index":',
      "7}\n",
      "\n",
    ]);
    expect(got).toEqual([
      { event: "prediction", data: '{"window_index":7}' },
    ]);
  });

  it("handles several events in one chunk", async () => {
    const got = await collect([
      "event: a\ndata: 1\n\nevent: b\ndata: 2\n\n",
    ]);
    expect(got.map((m) => m.event)).toEqual(["a", "b"]);
    expect(got.map((m) => m.data)).toEqual(["1", "2"]);
  });

  it("ignores comment keep-alives", async () => {
    const got = await collect([
      ": keep-alive\n\n: keep-alive\n\nevent: a\ndata: 1\n\n",
    ]);
    expect(got).toEqual([{ event: "a", data: "1" }]);
  });

  it("joins multi-line data fields with newlines", async () => {
    const got = await collect(["data: one\ndata: two\n\n"]);
    expect(got).toEqual([{ event: "message", data: "one\ntwo" }]);
  });

  it("tolerates CRLF line endings", async () => {
    const got = await collect(["event: a\r\ndata: 1\r\n\r\n"]);
    expect(got).toEqual([{ event: "a", data: "1" }]);
  });

  it("defaults the event name to message", async () => {
    const got = await collect(["data: x\n\n"]);
    expect(got[0].event).toBe("message");
  });

  it("emits a trailing unterminated frame at stream end", async () => {
    const got = await collect(["event: a\ndata: 1\n"]);
    expect(got).toEqual([{ event: "a", data: "1" }]);
  });
});
