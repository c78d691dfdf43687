/** Incremental parser for a text/event-stream byte stream. */

export interface SseMessage {
  event: string;
  data: string;
}

/** Iterate a web ReadableStream without relying on async-iterator support. */
export async function* streamChunks(
  body: ReadableStream<Uint8Array>,
): AsyncGenerator<Uint8Array> {
  const reader = body.getReader();
  try {
    for (;;) {
      const { done, value } = await reader.read();
      if (done) return;
      if (value) yield value;
    }
  } finally {
    reader.releaseLock();
  }
}

/**
 * Turn raw bytes into SSE messages. Handles frames split across chunks,
 * CRLF line endings, comment keep-alives and multi-line data fields.
 */
export async function* parseSseStream(
  chunks: AsyncIterable<Uint8Array>,
): AsyncGenerator<SseMessage> {
  const decoder = new TextDecoder();
  let buffer = "";
  let eventName = "message";
  let dataLines: string[] = [];

  const flush = (): SseMessage | null => {
    if (dataLines.length === 0) {
      eventName = "message";
      return null;
    }
    const message = { event: eventName, data: dataLines.join("\n") };
    eventName = "message";
    dataLines = [];
    return message;
  };

  for await (const chunk of chunks) {
    buffer += decoder.decode(chunk, { stream: true });
    for (;;) {
      const newline = buffer.indexOf("\n");
      if (newline < 0) break;
      let line = buffer.slice(0, newline);
      buffer = buffer.slice(newline + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);

      if (line === "") {
        const message = flush();
        if (message) yield message;
      } else if (line.startsWith(":")) {
        // comment / keep-alive
      } else if (line.startsWith("event:")) {
        eventName = line.slice("event:".length).trimStart();
      } else if (line.startsWith("data:")) {
        dataLines.push(line.slice("data:".length).trimStart());
      }
      // other fields (id, retry) are not used by this console
    }
  }
  const tail = flush();
  if (tail) yield tail;
}
