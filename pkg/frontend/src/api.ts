import type { ApiError, RepositoryInfo, SessionInfo } from "./types.js";

export type ReloadResult =
  | { ok: true; version: number }
  | { ok: false; error: ApiError };

/**
 * Thin client for the admin API.  The console performs no writes other than
 * reload() and disconnect(); everything else is read-only polling.
 */
export class AdminApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      throw new Error(`GET ${path}: HTTP ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  sessions(): Promise<SessionInfo[]> {
    return this.getJson<SessionInfo[]>("/api/sessions");
  }

  repository(): Promise<RepositoryInfo> {
    return this.getJson<RepositoryInfo>("/api/repository");
  }

  async reload(): Promise<ReloadResult> {
    const resp = await this.fetchFn(this.baseUrl + "/api/reload", { method: "POST" });
    const body = (await resp.json()) as Record<string, unknown>;
    if (resp.ok) {
      return { ok: true, version: body.version as number };
    }
    return { ok: false, error: body as unknown as ApiError };
  }

  async disconnect(sessionId: string): Promise<boolean> {
    const resp = await this.fetchFn(
      this.baseUrl + `/api/sessions/${encodeURIComponent(sessionId)}/disconnect`,
      { method: "POST" },
    );
    return resp.ok;
  }

  mirrorUrl(sessionId: string): string {
    return this.baseUrl + `/api/sessions/${encodeURIComponent(sessionId)}/mirror`;
  }
}

/** Human-readable one-liner for a reload failure, file and line included. */
export function describeReloadError(error: ApiError): string {
  let where = "";
  if (error.file) {
    where = error.line !== undefined ? ` [${error.file}:${error.line}]` : ` [${error.file}]`;
  }
  const extra = error.violations && error.violations.length
    ? ` (${error.violations.join("; ")})`
    : "";
  return `${error.code}${where}: ${error.message}${extra}`;
}
