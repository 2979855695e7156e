import type { FrameEvent } from "./types.js";

export type MirrorHandler = (event: string, payload: FrameEvent | null) => void;

/** Incremental parser for a server-sent-event byte stream. */
export class SseParser {
  private buffer = "";

  push(chunk: string): Array<{ event: string; payload: FrameEvent | null }> {
    this.buffer += chunk;
    const out: Array<{ event: string; payload: FrameEvent | null }> = [];
    for (;;) {
      const split = this.buffer.indexOf("\n\n");
      if (split < 0) {
        break;
      }
      const block = this.buffer.slice(0, split);
      this.buffer = this.buffer.slice(split + 2);
      let event = "message";
      const dataLines: string[] = [];
      for (const line of block.split("\n")) {
        if (line.startsWith("event: ")) {
          event = line.slice("event: ".length);
        } else if (line.startsWith("data: ")) {
          dataLines.push(line.slice("data: ".length));
        }
        // Lines starting with ":" are heartbeats; ignore.
      }
      if (event === "message" && dataLines.length === 0) {
        continue;
      }
      let payload: FrameEvent | null = null;
      if (dataLines.length > 0) {
        try {
          payload = JSON.parse(dataLines.join("\n")) as FrameEvent;
        } catch {
          payload = null;
        }
      }
      out.push({ event, payload });
    }
    return out;
  }
}

/**
 * Subscribe to a mirror stream until it ends or the signal aborts.  Built on
 * streaming fetch rather than EventSource so a closed stream stays closed
 * (an ended session must show as ended, not silently reconnect).
 */
export async function mirrorStream(
  url: string,
  handler: MirrorHandler,
  fetchFn: typeof fetch = fetch,
  signal?: AbortSignal,
): Promise<void> {
  const resp = await fetchFn(url, { signal });
  if (!resp.ok || resp.body === null) {
    throw new Error(`mirror: HTTP ${resp.status}`);
  }
  const reader = resp.body.getReader();
  const decoder = new TextDecoder();
  const parser = new SseParser();
  for (;;) {
    const { done, value } = await reader.read();
    if (done) {
      return;
    }
    for (const { event, payload } of parser.push(decoder.decode(value, { stream: true }))) {
      handler(event, payload);
      if (event === "end") {
        try {
          await reader.cancel();
        } catch {
          // stream already gone
        }
        return;
      }
    }
  }
}
