import type { FrameEvent } from "./types.js";

/**
 * Pure mirror-view state: the displayed grid always equals the last received
 * frame, never an interpolation.  Rendering is deterministic so replaying a
 * recorded event log reproduces identical output.
 */
export class MirrorState {
  frame: FrameEvent | null = null;
  ended = false;

  apply(event: string, payload: FrameEvent | null): void {
    if (this.ended) {
      return;
    }
    if (event === "end") {
      this.ended = true;
      return;
    }
    if ((event === "frame" || event === "snapshot") && payload !== null) {
      this.frame = payload;
    }
  }

  get width(): number {
    return this.frame?.rows[0]?.length ?? 0;
  }

  get height(): number {
    return this.frame?.rows.length ?? 0;
  }

  lines(): string[] {
    return this.frame ? [...this.frame.rows] : [];
  }

  cursor(): [number, number] | null {
    return this.frame ? this.frame.cursor : null;
  }
}

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

/**
 * Fixed-pitch HTML for one frame: each row on its own line, the cursor cell
 * wrapped in a span so the operator's position is visible.
 */
export function renderFrameHtml(frame: FrameEvent): string {
  const [cr, cc] = frame.cursor;
  const out: string[] = [];
  frame.rows.forEach((row, r) => {
    if (r === cr && cc < row.length) {
      const before = escapeHtml(row.slice(0, cc));
      const cell = escapeHtml(row[cc] ?? " ");
      const after = escapeHtml(row.slice(cc + 1));
      out.push(`${before}<span class="cursor">${cell}</span>${after}`);
    } else {
      out.push(escapeHtml(row));
    }
  });
  return out.join("\n");
}

export function renderMirrorHtml(state: MirrorState): string {
  if (state.ended) {
    return '<span class="ended">SESSION ENDED</span>';
  }
  if (state.frame === null) {
    return "waiting for first frame…";
  }
  return renderFrameHtml(state.frame);
}
