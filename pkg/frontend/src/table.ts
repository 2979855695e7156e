import type { SessionInfo } from "./types.js";

export interface SessionRow extends SessionInfo {
  idle_seconds: number;
}

export function idleSeconds(info: SessionInfo, now: Date): number {
  const last = Date.parse(info.last_activity);
  if (Number.isNaN(last)) {
    return 0;
  }
  return Math.max(0, Math.round((now.getTime() - last) / 1000));
}

/** Rows for the session table, keyed and ordered by session id. */
export function toRows(infos: SessionInfo[], now: Date): SessionRow[] {
  return infos
    .map((info) => ({ ...info, idle_seconds: idleSeconds(info, now) }))
    .sort((a, b) => a.session_id.localeCompare(b.session_id));
}

export function formatIdle(seconds: number): string {
  if (seconds < 60) {
    return `${seconds}s`;
  }
  const minutes = Math.floor(seconds / 60);
  return `${minutes}m ${seconds % 60}s`;
}
