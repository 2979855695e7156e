"""Per-session interpreter: keystrokes in, frames and data records out.

Navigation is a stack of menus with at most one active flow on top.  "0"
walks back toward the root menu; completing an input or option screen emits
exactly one DataRecord and follows the flow's outcome-keyed transition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Union

from . import model, render
from .render import Frame, ScreenInstance, TerminalProfile

log = logging.getLogger("uim.shell")

MSG_INVALID = "INVALID"
MSG_AT_TOP = "AT TOP"

PAGE_PREV = "<"
PAGE_NEXT = ">"


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass
class MenuEntry:
    screen_id: str
    page: int = 0


@dataclass
class FlowEntry:
    flow_id: str
    steps: list[str]  # screens visited, current one last


NavEntry = Union[MenuEntry, FlowEntry]


@dataclass(frozen=True)
class DataRecord:
    session_id: str
    ts: str
    flow: str
    screen: str
    bindings: dict[str, str]


@dataclass(frozen=True)
class ShellEffect:
    frame: Frame
    records: list[DataRecord] = field(default_factory=list)
    terminated: bool = False


def goodbye_frame(profile: TerminalProfile, reason: str = "Session ended.") -> Frame:
    return render.message_frame(profile, "GOODBYE", [reason])


class ShellSession:
    """Owns one operator's navigation state; single-threaded by contract."""

    def __init__(self, snapshot, profile: TerminalProfile, session_id: str = "",
                 clock: Callable[[], str] | None = None) -> None:
        self.snapshot = snapshot
        self.profile = profile
        self.session_id = session_id
        self.clock = clock or _utc_now
        self.nav: list[NavEntry] = [MenuEntry(self.doc.root_menu, 0)]
        self.bindings: dict[str, str] = {}
        self.field_index = 0
        self.field_values: dict[str, str] = {}
        self.multi_selected: set[str] = set()
        self.message: str | None = None
        self._flow_page = 0

    @property
    def doc(self) -> model.RepositoryDoc:
        return self.snapshot.doc

    @property
    def in_flow(self) -> bool:
        return isinstance(self.nav[-1], FlowEntry)

    def current_screen_id(self) -> str:
        top = self.nav[-1]
        return top.steps[-1] if isinstance(top, FlowEntry) else top.screen_id

    def _current_screen(self) -> model.ScreenDef:
        return self.doc.screens[self.current_screen_id()]

    def _page(self) -> int:
        top = self.nav[-1]
        return self._flow_page if isinstance(top, FlowEntry) else top.page

    def _set_page(self, page: int) -> None:
        top = self.nav[-1]
        if isinstance(top, FlowEntry):
            self._flow_page = page
        else:
            top.page = page

    def _page_count(self) -> int:
        screen = self._current_screen()
        if isinstance(screen, model.MenuScreen):
            n = len(screen.items)
        elif isinstance(screen, (model.SingleOptionScreen, model.MultiOptionScreen)):
            n = len(screen.options)
        else:
            return 1
        return render.paginate(n, self.profile)[1]

    def frame(self) -> Frame:
        instance = ScreenInstance(
            screen=self._current_screen(),
            bindings=self.bindings,
            message=self.message,
            field_index=self.field_index,
            field_values=self.field_values,
            selected=frozenset(self.multi_selected),
        )
        return render.layout(instance, self.profile, self._page())

    def render_with_message(self, message: str) -> Frame:
        self.message = message
        return self.frame()

    def _effect(self, records: list[DataRecord] | None = None) -> ShellEffect:
        return ShellEffect(frame=self.frame(), records=records or [])

    # -- input dispatch ----------------------------------------------------

    def handle_line(self, line: str) -> ShellEffect:
        """Apply one committed input line against the current screen."""
        line = "".join(c for c in line if 32 <= ord(c) <= 126)
        self.message = None
        try:
            return self._dispatch(line)
        except (KeyError, IndexError):
            # Impossible on validated snapshots; fail closed rather than wedge.
            log.exception("navigation fault on screen %r", self.current_screen_id())
            return ShellEffect(frame=goodbye_frame(self.profile, "Internal error."),
                               terminated=True)

    def _dispatch(self, line: str) -> ShellEffect:
        screen = self._current_screen()
        if isinstance(screen, model.MenuScreen):
            return self._menu_line(screen, line.strip())
        if isinstance(screen, model.InfoScreen):
            return self._info_line(line.strip())
        if isinstance(screen, model.InputScreen):
            return self._input_line(screen, line)
        if isinstance(screen, model.SingleOptionScreen):
            return self._single_line(screen, line.strip())
        return self._multi_line(screen, line.strip())

    def _flip_page(self, token: str) -> ShellEffect:
        count = self._page_count()
        delta = 1 if token == PAGE_NEXT else -1
        self._set_page(max(0, min(self._page() + delta, count - 1)))
        return self._effect()

    def _menu_line(self, screen: model.MenuScreen, line: str) -> ShellEffect:
        if line == "0":
            if len(self.nav) > 1:
                self.nav.pop()
            else:
                self.message = MSG_AT_TOP
            return self._effect()
        if line in (PAGE_PREV, PAGE_NEXT):
            return self._flip_page(line)
        if line.isdigit():
            k = int(line)
            if 1 <= k <= len(screen.items):
                item = screen.items[k - 1]
                if item.is_node:
                    self.nav.append(MenuEntry(item.target, 0))
                else:
                    self._start_flow(item.target)
                return self._effect()
        self.message = MSG_INVALID
        return self._effect()

    def _info_line(self, line: str) -> ShellEffect:
        if line == "":
            return self._outcome(model.OUTCOME_OK)
        if line == "0":
            return self._outcome(model.OUTCOME_BACK)
        self.message = MSG_INVALID
        return self._effect()

    def _input_line(self, screen: model.InputScreen, line: str) -> ShellEffect:
        f = screen.fields[self.field_index]
        if self.field_index == 0 and line == "0":
            return self._outcome(model.OUTCOME_BACK)
        # "00" on the first field types a literal "0", which "back" shadows.
        value = "0" if self.field_index == 0 and line == "00" else line
        if (f.required and not value) or len(value) > f.max_len \
                or (f.kind == "number" and value and not value.isdigit()):
            self.message = MSG_INVALID
            return self._effect()
        self.field_values[f.name] = value
        self.field_index += 1
        if self.field_index < len(screen.fields):
            return self._effect()
        collected = {fd.name: self.field_values[fd.name] for fd in screen.fields}
        self.bindings.update(collected)
        return self._outcome(model.OUTCOME_OK, self._record(screen.id, collected))

    def _single_line(self, screen: model.SingleOptionScreen, line: str) -> ShellEffect:
        if line == "0":
            return self._outcome(model.OUTCOME_BACK)
        if line in (PAGE_PREV, PAGE_NEXT):
            return self._flip_page(line)
        if line.isdigit():
            k = int(line)
            if 1 <= k <= len(screen.options):
                value = screen.options[k - 1].value
                self.bindings[screen.var] = value
                record = self._record(screen.id, {screen.var: value})
                # A transition keyed on the chosen value wins over plain "ok".
                outcome = value if self._step_defined(screen.id, value) else model.OUTCOME_OK
                return self._outcome(outcome, record)
        self.message = MSG_INVALID
        return self._effect()

    def _multi_line(self, screen: model.MultiOptionScreen, line: str) -> ShellEffect:
        if line == "0":
            self.multi_selected.clear()
            return self._outcome(model.OUTCOME_BACK)
        if line == "":
            joined = ",".join(o.value for o in screen.options if o.value in self.multi_selected)
            self.bindings[screen.var] = joined
            return self._outcome(model.OUTCOME_OK, self._record(screen.id, {screen.var: joined}))
        if line in (PAGE_PREV, PAGE_NEXT):
            return self._flip_page(line)
        if line.isdigit():
            k = int(line)
            if 1 <= k <= len(screen.options):
                value = screen.options[k - 1].value
                if value in self.multi_selected:
                    self.multi_selected.discard(value)
                else:
                    self.multi_selected.add(value)
                return self._effect()
        self.message = MSG_INVALID
        return self._effect()

    # -- flow plumbing -----------------------------------------------------

    def _record(self, screen_id: str, bindings: dict[str, str]) -> DataRecord:
        top = self.nav[-1]
        flow_id = top.flow_id if isinstance(top, FlowEntry) else ""
        return DataRecord(session_id=self.session_id, ts=self.clock(),
                          flow=flow_id, screen=screen_id, bindings=bindings)

    def _step_defined(self, screen_id: str, outcome: str) -> bool:
        top = self.nav[-1]
        if not isinstance(top, FlowEntry):
            return False
        return (screen_id, outcome) in self.doc.flows[top.flow_id].steps

    def _start_flow(self, flow_id: str) -> None:
        flow = self.doc.flows[flow_id]
        self.bindings = {}
        self.nav.append(FlowEntry(flow_id, [flow.start]))
        self._reset_screen_state()

    def _reset_screen_state(self) -> None:
        self.field_index = 0
        self.field_values = {}
        self.multi_selected = set()
        self._flow_page = 0

    def _exit_flow(self) -> None:
        self.nav.pop()
        self.bindings = {}
        self._reset_screen_state()

    def _outcome(self, outcome: str, record: DataRecord | None = None) -> ShellEffect:
        records = [record] if record is not None else []
        top = self.nav[-1]
        if not isinstance(top, FlowEntry):
            raise KeyError("outcome outside a flow")
        flow = self.doc.flows[top.flow_id]
        sid = top.steps[-1]
        key = (sid, outcome)
        if key in flow.steps:
            target = flow.steps[key]
            if target is None:
                self._exit_flow()
            elif outcome == model.OUTCOME_BACK:
                # Explicit back target replaces the current step so repeated
                # backing out can never grow the history.
                top.steps[-1] = target
                self._reset_screen_state()
            else:
                top.steps.append(target)
                self._reset_screen_state()
        elif outcome == model.OUTCOME_BACK:
            top.steps.pop()
            if top.steps:
                self._reset_screen_state()
            else:
                self._exit_flow()
        elif outcome == model.OUTCOME_OK:
            # Validation guarantees an "ok" transition for reachable screens.
            raise KeyError("no 'ok' transition for screen %r" % sid)
        else:
            raise KeyError("unresolvable outcome %r on screen %r" % (outcome, sid))
        return self._effect(records)

    # -- environment changes ------------------------------------------------

    def handle_resize(self, width: int, height: int) -> ShellEffect:
        self.profile = TerminalProfile.clamped(width, height,
                                               self.profile.kind, self.profile.name)
        count = self._page_count()
        if self._page() > count - 1:
            self._set_page(count - 1)
        return self._effect()

    def set_terminal_name(self, name: str) -> None:
        self.profile = render.TerminalProfile(self.profile.width, self.profile.height,
                                              self.profile.kind, name)

    def maybe_adopt(self, snapshot) -> bool:
        """Switch to a newer repository snapshot; refused while a flow runs."""
        if self.in_flow or snapshot.version <= self.snapshot.version:
            return False
        doc = snapshot.doc
        nav: list[NavEntry] = [MenuEntry(doc.root_menu, 0)]
        for entry in self.nav[1:]:
            if isinstance(entry, MenuEntry) and entry.screen_id != doc.root_menu \
                    and isinstance(doc.screens.get(entry.screen_id), model.MenuScreen):
                nav.append(MenuEntry(entry.screen_id, 0))
            else:
                break
        self.snapshot = snapshot
        self.nav = nav
        self._reset_screen_state()
        return True


def open_session(snapshot, profile: TerminalProfile, session_id: str = "",
                 clock: Callable[[], str] | None = None) -> tuple[ShellSession, ShellEffect]:
    """Start a session at the snapshot's root menu and render it."""
    session = ShellSession(snapshot, profile, session_id, clock)
    return session, session._effect()
