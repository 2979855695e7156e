import { AdminApi, describeReloadError } from "./api.js";
import { MirrorState, renderMirrorHtml } from "./grid.js";
import { mirrorStream } from "./mirror.js";
import { formatIdle, toRows } from "./table.js";
import type { SessionInfo } from "./types.js";

const POLL_INTERVAL_MS = 2000;

/**
 * Single-page console: a polled session table on the left, one live screen
 * mirror on the right.  Observe-and-disconnect only; the repository itself
 * is edited as files and reloaded from here.
 */
export class AdminConsole {
  private readonly api: AdminApi;
  private mirrorAbort: AbortController | null = null;
  private mirrorSession = "";
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private readonly root: HTMLElement, api?: AdminApi) {
    this.api = api ?? new AdminApi("");
    this.root.innerHTML = `
      <header>
        <h1>Terminal Sessions</h1>
        <span id="repo-version" class="badge"></span>
        <button id="reload-btn">Reload repository</button>
      </header>
      <div id="banner" class="banner hidden"></div>
      <div id="reload-result" class="hidden"></div>
      <main>
        <section>
          <table id="sessions">
            <thead><tr>
              <th>Session</th><th>Remote</th><th>Terminal</th><th>Screen</th>
              <th>Connected</th><th>Idle</th><th></th>
            </tr></thead>
            <tbody></tbody>
          </table>
          <p id="empty-state" class="hidden">No terminal sessions connected.</p>
        </section>
        <section id="mirror-pane" class="hidden">
          <h2>Mirror: <span id="mirror-id"></span></h2>
          <pre id="mirror"></pre>
          <button id="mirror-close">Close mirror</button>
        </section>
      </main>`;
    this.el("reload-btn").addEventListener("click", () => void this.reload());
    this.el("mirror-close").addEventListener("click", () => this.closeMirror());
  }

  private el(id: string): HTMLElement {
    const found = this.root.querySelector("#" + id);
    if (!found) {
      throw new Error("missing element #" + id);
    }
    return found as HTMLElement;
  }

  start(): void {
    void this.refresh();
    this.timer = setInterval(() => void this.refresh(), POLL_INTERVAL_MS);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
    this.closeMirror();
  }

  private setBanner(text: string | null): void {
    const banner = this.el("banner");
    if (text === null) {
      banner.classList.add("hidden");
      banner.textContent = "";
    } else {
      banner.classList.remove("hidden");
      banner.textContent = text + " — retrying";
    }
  }

  async refresh(): Promise<void> {
    let sessions: SessionInfo[];
    try {
      sessions = await this.api.sessions();
      const repo = await this.api.repository();
      this.el("repo-version").textContent = `repository v${repo.version}`;
      this.setBanner(null);
    } catch (err) {
      // Never a blank page: keep the last table, show what is wrong.
      this.setBanner(`Admin API unreachable: ${String(err)}`);
      return;
    }
    this.renderTable(sessions);
  }

  private renderTable(sessions: SessionInfo[]): void {
    const tbody = this.el("sessions").querySelector("tbody") as HTMLElement;
    const rows = toRows(sessions, new Date());
    this.el("empty-state").classList.toggle("hidden", rows.length > 0);
    tbody.innerHTML = "";
    for (const row of rows) {
      const tr = document.createElement("tr");
      tr.dataset.sessionId = row.session_id;
      tr.innerHTML =
        `<td>${row.session_id}</td><td>${row.remote}</td>` +
        `<td>${row.terminal || "-"}</td><td>${row.screen}</td>` +
        `<td>${row.connected_at}</td><td>${formatIdle(row.idle_seconds)}</td>`;
      const actions = document.createElement("td");
      const disconnect = document.createElement("button");
      disconnect.textContent = "Disconnect";
      disconnect.addEventListener("click", (ev) => {
        ev.stopPropagation();
        void this.disconnect(row.session_id);
      });
      actions.appendChild(disconnect);
      tr.appendChild(actions);
      tr.addEventListener("click", () => void this.openMirror(row.session_id));
      tbody.appendChild(tr);
    }
    // A vanished mirrored session needs no handling here: its stream's end
    // event already switched the pane to SESSION ENDED.
  }

  async disconnect(sessionId: string): Promise<void> {
    if (!window.confirm(`Disconnect session ${sessionId}?`)) {
      return;
    }
    await this.api.disconnect(sessionId);
    await this.refresh();
  }

  async reload(): Promise<void> {
    const result = await this.api.reload();
    const box = this.el("reload-result");
    box.classList.remove("hidden");
    if (result.ok) {
      box.className = "ok";
      box.textContent = `Reloaded: repository v${result.version}`;
      this.el("repo-version").textContent = `repository v${result.version}`;
    } else {
      box.className = "error";
      box.textContent = describeReloadError(result.error);
    }
  }

  async openMirror(sessionId: string): Promise<void> {
    this.closeMirror();
    this.mirrorSession = sessionId;
    this.mirrorAbort = new AbortController();
    this.el("mirror-pane").classList.remove("hidden");
    this.el("mirror-id").textContent = sessionId;
    const view = this.el("mirror");
    const state = new MirrorState();
    view.innerHTML = renderMirrorHtml(state);
    try {
      await mirrorStream(
        this.api.mirrorUrl(sessionId),
        (event, payload) => {
          state.apply(event, payload);
          view.innerHTML = renderMirrorHtml(state);
        },
        fetch,
        this.mirrorAbort.signal,
      );
      state.apply("end", null);
      view.innerHTML = renderMirrorHtml(state);
    } catch {
      if (this.mirrorSession === sessionId) {
        state.apply("end", null);
        view.innerHTML = renderMirrorHtml(state);
      }
    }
  }

  closeMirror(): void {
    if (this.mirrorAbort !== null) {
      this.mirrorAbort.abort();
      this.mirrorAbort = null;
    }
    this.mirrorSession = "";
    this.el("mirror-pane").classList.add("hidden");
  }
}
