"""TCP listener and per-connection session handlers.

One thread per connection owns that session's state end to end; shared
pieces are the repository snapshot cell, the session registry the admin API
reads, and the serialized journal.  A fault in one session only ever closes
that session.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from datetime import datetime, timezone

from . import render, telnet
from .config import ServerConfig
from .journal import Journal, JournalError
from .lines import LineAssembler
from .render import Frame, TerminalKind
from .repository import RepositoryHolder
from .shell import ShellSession, goodbye_frame, open_session
from .telnet import (NAWS, TERMINAL_TYPE, ServerNegotiator, TelnetDecoder,
                     encode_all, parse_naws, parse_terminal_type)

log = logging.getLogger("uim.server")

SERVER_FULL = b"SERVER FULL\r\n"
SAVE_FAILED = "SAVE FAILED - RETRY"


def _utc_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class SessionRuntime:
    """Everything one connection handler owns, plus the bits admin reads."""

    def __init__(self, session_id: str, sock: socket.socket, addr: tuple) -> None:
        self.session_id = session_id
        self.sock = sock
        self.remote = "%s:%d" % (addr[0], addr[1])
        self.connected_at = _utc_iso()
        self.last_activity = _utc_iso()
        self._last_monotonic = time.monotonic()
        self.terminal_name = ""
        self.screen_id = ""
        self.snapshot_version = 0
        self.closing = False
        self.close_reason = ""
        self.shell: ShellSession | None = None
        self.negotiator: ServerNegotiator | None = None
        self.assembler = LineAssembler()
        self.displayed: Frame | None = None
        self.entry_col_min = 0
        self.pending_records: list = []
        self._mirror_lock = threading.Lock()
        self._mirror_subs: list[queue.SimpleQueue] = []

    def touch(self) -> None:
        self.last_activity = _utc_iso()
        self._last_monotonic = time.monotonic()

    def idle_seconds(self) -> float:
        return time.monotonic() - self._last_monotonic

    def info(self) -> dict:
        return {
            "session_id": self.session_id,
            "remote": self.remote,
            "terminal": self.terminal_name,
            "connected_at": self.connected_at,
            "screen": self.screen_id,
            "version": self.snapshot_version,
            "last_activity": self.last_activity,
        }

    def request_disconnect(self, reason: str) -> None:
        self.closing = True
        self.close_reason = reason
        try:
            # Unblock recv() while keeping the write side for the goodbye.
            self.sock.shutdown(socket.SHUT_RD)
        except OSError:
            pass

    # -- screen mirroring -------------------------------------------------

    def subscribe_mirror(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self._mirror_lock:
            self._mirror_subs.append(q)
        return q

    def unsubscribe_mirror(self, q: queue.SimpleQueue) -> None:
        with self._mirror_lock:
            if q in self._mirror_subs:
                self._mirror_subs.remove(q)

    def publish_mirror(self, payload: dict | None) -> None:
        with self._mirror_lock:
            for q in self._mirror_subs:
                q.put(payload)


class SessionRegistry:
    """Concurrent map of live sessions, written only by their handlers."""

    def __init__(self, max_sessions: int) -> None:
        self.max_sessions = max_sessions
        self._lock = threading.Lock()
        self._sessions: dict[str, SessionRuntime] = {}
        self._counter = 0

    def next_id(self) -> str:
        with self._lock:
            self._counter += 1
            return "s%04d" % self._counter

    def try_add(self, rt: SessionRuntime) -> bool:
        with self._lock:
            if len(self._sessions) >= self.max_sessions:
                return False
            self._sessions[rt.session_id] = rt
            return True

    def remove(self, rt: SessionRuntime) -> None:
        with self._lock:
            self._sessions.pop(rt.session_id, None)

    def get(self, session_id: str) -> SessionRuntime | None:
        with self._lock:
            return self._sessions.get(session_id)

    def list_infos(self) -> list[dict]:
        with self._lock:
            sessions = sorted(self._sessions.values(), key=lambda rt: rt.session_id)
        return [rt.info() for rt in sessions]

    def all(self) -> list[SessionRuntime]:
        with self._lock:
            return list(self._sessions.values())


class UimServer:
    """Listener, session lifecycle and the shared state the admin API serves."""

    def __init__(self, config: ServerConfig) -> None:
        config.check()
        self.config = config
        self.holder = RepositoryHolder(config.make_backend())
        self.journal = Journal(config.journal_path, config.journal_fsync)
        self.registry = SessionRegistry(config.max_sessions)
        self._stop = threading.Event()
        self._listener: socket.socket | None = None
        self._accept_thread: threading.Thread | None = None
        self._admin = None
        self.telnet_port = config.telnet_port
        self.admin_port = config.admin_port

    def start(self) -> None:
        """Boot: repository must load (fail otherwise), then listen."""
        from .admin import AdminServer  # local import: admin depends on server types

        self.holder.load_initial()
        self.journal.start()
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((self.config.telnet_host, self.config.telnet_port))
        listener.listen(128)
        listener.settimeout(0.5)
        self._listener = listener
        self.telnet_port = listener.getsockname()[1]
        self._admin = AdminServer(self)
        self._admin.start()
        self.admin_port = self._admin.port
        self._accept_thread = threading.Thread(target=self._accept_loop,
                                               name="telnet-accept", daemon=True)
        self._accept_thread.start()
        log.info("listening: telnet on %s:%d, admin on %s:%d",
                 self.config.telnet_host, self.telnet_port,
                 self.config.admin_host, self.admin_port)

    def stop(self, reason: str = "Server shutting down.") -> None:
        self._stop.set()
        for rt in self.registry.all():
            rt.request_disconnect(reason)
        if self._listener is not None:
            self._listener.close()
        if self._accept_thread is not None:
            self._accept_thread.join(timeout=3)
        deadline = time.monotonic() + 3
        while self.registry.all() and time.monotonic() < deadline:
            time.sleep(0.02)
        if self._admin is not None:
            self._admin.stop()
        self.journal.close()

    def wait(self) -> None:
        while not self._stop.is_set():
            time.sleep(0.2)

    def _accept_loop(self) -> None:
        assert self._listener is not None
        while not self._stop.is_set():
            try:
                sock, addr = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                return
            thread = threading.Thread(target=self._run_session, args=(sock, addr),
                                      name="session", daemon=True)
            thread.start()

    # -- per-connection handler -------------------------------------------

    def _run_session(self, sock: socket.socket, addr: tuple) -> None:
        rt = SessionRuntime(self.registry.next_id(), sock, addr)
        if not self.registry.try_add(rt):
            try:
                sock.sendall(SERVER_FULL)
            except OSError:
                pass
            sock.close()
            return
        try:
            self._session_loop(rt)
        except OSError as exc:
            log.info("session %s: connection lost (%s)", rt.session_id, exc)
        except Exception:
            log.exception("session %s crashed", rt.session_id)
        finally:
            self.registry.remove(rt)
            if rt.close_reason and rt.shell is not None:
                try:
                    self._present(rt, goodbye_frame(rt.shell.profile, rt.close_reason))
                except OSError:
                    pass
            rt.publish_mirror(None)
            try:
                sock.close()
            except OSError:
                pass
            log.info("session %s from %s closed", rt.session_id, rt.remote)

    def _session_loop(self, rt: SessionRuntime) -> None:
        config = self.config
        negotiator = ServerNegotiator()
        decoder = TelnetDecoder()
        snapshot = self.holder.snapshot()
        shell, effect = open_session(snapshot, config.default_profile(), rt.session_id)
        rt.shell = shell
        rt.negotiator = negotiator
        rt.snapshot_version = snapshot.version
        log.info("session %s from %s open", rt.session_id, rt.remote)

        rt.sock.sendall(encode_all(negotiator.initial_handshake()))
        self._present(rt, effect.frame)
        rt.sock.settimeout(0.5)
        while not self._stop.is_set() and not rt.closing:
            try:
                data = rt.sock.recv(4096)
            except socket.timeout:
                if rt.idle_seconds() > config.idle_timeout_secs:
                    rt.close_reason = "Idle timeout."
                    break
                continue
            except OSError:
                break
            if not data:
                break
            rt.touch()
            for event in decoder.feed(data):
                if rt.closing:
                    break
                if isinstance(event, telnet.Data):
                    self._handle_data(rt, event.payload)
                elif isinstance(event, telnet.Negotiate):
                    replies = negotiator.receive(event.verb, event.option)
                    if replies:
                        rt.sock.sendall(encode_all(replies))
                elif isinstance(event, telnet.Subnegotiation):
                    self._handle_subnegotiation(rt, event)
                else:
                    log.debug("session %s: command %d ignored", rt.session_id, event.code)
            for warning in decoder.take_warnings():
                log.debug("session %s: %s", rt.session_id, warning.message)

    def _handle_subnegotiation(self, rt: SessionRuntime, event: telnet.Subnegotiation) -> None:
        shell = rt.shell
        assert shell is not None
        if event.option == NAWS:
            dims = parse_naws(event.payload)
            if dims is not None:
                effect = shell.handle_resize(dims[0], dims[1])
                self._present(rt, effect.frame)
        elif event.option == TERMINAL_TYPE:
            name = parse_terminal_type(event.payload)
            if name is not None:
                rt.terminal_name = name
                shell.set_terminal_name(name)

    def _handle_data(self, rt: SessionRuntime, payload: bytes) -> None:
        shell = rt.shell
        assert shell is not None and rt.negotiator is not None
        echo_on = rt.negotiator.local_active(telnet.ECHO)
        dumb = shell.profile.kind is TerminalKind.DUMB
        pending_echo = bytearray()

        def flush_echo() -> None:
            if pending_echo:
                rt.sock.sendall(bytes(pending_echo))
                pending_echo.clear()

        for op in rt.assembler.feed(payload):
            if rt.closing:
                break
            if op[0] == "char":
                if echo_on:
                    visible = "*" if rt.displayed is not None and rt.displayed.masked_cursor_field else op[1]
                    pending_echo += visible.encode("ascii")
                    if rt.displayed is not None and not dumb:
                        rt.displayed = render.apply_echo(rt.displayed, visible)
            elif op[0] == "bs":
                if echo_on:
                    pending_echo += b"\b \b"
                    if rt.displayed is not None and not dumb:
                        rt.displayed = render.apply_backspace(rt.displayed, rt.entry_col_min)
            else:  # committed line
                if echo_on and dumb:
                    pending_echo += b"\r\n"
                flush_echo()
                self._handle_line(rt, op[1])
        flush_echo()

    def _handle_line(self, rt: SessionRuntime, line: str) -> None:
        shell = rt.shell
        assert shell is not None
        self._retry_pending(rt)
        effect = shell.handle_line(line)
        frame = effect.frame
        for record in effect.records:
            if not self._commit_record(rt, record):
                frame = shell.render_with_message(SAVE_FAILED)
        self._present(rt, frame)
        if effect.terminated:
            rt.closing = True
            rt.close_reason = ""
            return
        if not shell.in_flow:
            snap = self.holder.snapshot()
            if snap.version > shell.snapshot.version and shell.maybe_adopt(snap):
                rt.snapshot_version = snap.version
                self._present(rt, shell.frame())

    def _commit_record(self, rt: SessionRuntime, record, quiet: bool = False) -> bool:
        try:
            self.journal.append(record)
            return True
        except JournalError:
            if not quiet:
                log.error("session %s: journal append failed, keeping record in memory",
                          rt.session_id)
            rt.pending_records.append(record)
            return False

    def _retry_pending(self, rt: SessionRuntime) -> None:
        while rt.pending_records:
            record = rt.pending_records.pop(0)
            if not self._commit_record(rt, record, quiet=True):
                return

    def _present(self, rt: SessionRuntime, frame: Frame) -> None:
        shell = rt.shell
        assert shell is not None
        if shell.profile.kind is TerminalKind.ANSI:
            data = render.to_ansi(frame, rt.displayed)
        else:
            data = render.to_plain(frame)
        rt.displayed = frame
        rt.entry_col_min = frame.cursor[1]
        rt.screen_id = shell.current_screen_id()
        rt.snapshot_version = shell.snapshot.version
        if data:
            rt.sock.sendall(data)
        rt.publish_mirror({"rows": list(frame.rows), "cursor": list(frame.cursor)})


def serve(config: ServerConfig) -> int:
    """Run until SIGINT/SIGTERM; returns a process exit code."""
    import signal

    from .repository import LoadError

    server = UimServer(config)
    try:
        server.start()
    except LoadError as exc:
        log.error("repository failed to load: %s", exc)
        return 1
    except OSError as exc:
        log.error("cannot listen: %s", exc)
        return 1

    def _signal(_signum, _frame) -> None:
        server._stop.set()

    signal.signal(signal.SIGINT, _signal)
    signal.signal(signal.SIGTERM, _signal)
    server.wait()
    server.stop()
    return 0
