"""Character-grid rendering of screens and serialization to terminal bytes.

A Frame is pure data: exactly ``height`` rows of exactly ``width`` printable
ASCII cells plus a cursor.  Serializers turn frames into either a small
VT/ANSI escape stream (clear, home, absolute cursor moves only) or a plain
scrolling text stream for dumb clients.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from math import ceil
from typing import Mapping, Sequence

from . import model

MIN_WIDTH = 10
MIN_HEIGHT = 4
MIN_CELLS = 40

CLEAR = b"\x1b[2J"
HOME = b"\x1b[H"

HINTS = {
    "menu": "0=Back",
    "info": "ENTER=Continue",
    "input": "0=Back",
    "single": "0=Back",
    "multi": "ENTER=Commit 0=Back",
}


class TerminalKind(Enum):
    ANSI = "ansi"
    DUMB = "dumb"


@dataclass(frozen=True)
class TerminalProfile:
    width: int = 80
    height: int = 24
    kind: TerminalKind = TerminalKind.ANSI
    name: str = ""

    def __post_init__(self) -> None:
        if self.width < MIN_WIDTH or self.height < MIN_HEIGHT or self.width * self.height < MIN_CELLS:
            raise ValueError("terminal too small: %dx%d" % (self.width, self.height))

    @classmethod
    def clamped(cls, width: int, height: int, kind: TerminalKind = TerminalKind.ANSI,
                name: str = "") -> "TerminalProfile":
        return cls(max(width, MIN_WIDTH), max(height, MIN_HEIGHT), kind, name)


@dataclass(frozen=True)
class Frame:
    rows: tuple[str, ...]
    cursor: tuple[int, int]
    masked_cursor_field: bool = False

    @property
    def width(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    @property
    def height(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class PageView:
    page_index: int
    page_count: int
    # (original 1-based number, item) pairs; numbering is global, not per page.
    visible: tuple[tuple[int, object], ...]


@dataclass(frozen=True)
class ScreenInstance:
    """A screen definition plus the session state needed to draw it."""

    screen: model.ScreenDef
    bindings: Mapping[str, str] = field(default_factory=dict)
    message: str | None = None
    field_index: int = 0
    field_values: Mapping[str, str] = field(default_factory=dict)
    field_entry: str = ""
    selected: frozenset[str] = frozenset()


def paginate(item_count: int, profile: TerminalProfile) -> tuple[int, int]:
    """(items_per_page, page_count): title and hint rows are always reserved,
    a pagination row only when more than one page is needed."""
    single_page_capacity = profile.height - 2
    if item_count <= single_page_capacity:
        return single_page_capacity, 1
    per_page = profile.height - 3
    return per_page, ceil(item_count / per_page)


def page_view(items: Sequence[object], profile: TerminalProfile, page: int) -> PageView:
    per_page, page_count = paginate(len(items), profile)
    page = max(0, min(page, page_count - 1))
    start = page * per_page
    visible = tuple((start + i + 1, item) for i, item in enumerate(items[start:start + per_page]))
    return PageView(page, page_count, visible)


def _clean(text: str) -> str:
    return "".join(c if 32 <= ord(c) <= 126 else "?" for c in text)


def layout(instance: ScreenInstance, profile: TerminalProfile, page: int = 0) -> Frame:
    """Lay one screen out on the grid.

    Row 0 is the title, the last row the status/hint line; menu and option
    items are numbered globally so item k is labelled k on every page.
    """
    screen = instance.screen
    width, height = profile.width, profile.height
    body: list[str] = []
    cursor: tuple[int, int] | None = None
    masked = False
    view: PageView | None = None

    if isinstance(screen, model.MenuScreen):
        view = page_view(screen.items, profile, page)
        for number, item in view.visible:
            marker = "+" if item.is_node else ""
            body.append("%d %s%s" % (number, marker, item.label))
    elif isinstance(screen, model.InfoScreen):
        for line in screen.lines[:height - 2]:
            body.append(model.substitute(line, instance.bindings))
    elif isinstance(screen, model.InputScreen):
        visible, first_row = _field_window(screen.fields, instance.field_index, height - 2)
        for idx, f in visible:
            value = _field_display(instance, idx, f)
            body.append("%s: %s" % (f.name, value))
            if idx == instance.field_index:
                col = len(f.name) + 2 + len(_field_display(instance, idx, f))
                cursor = (1 + len(body) - 1, min(col, width - 1))
                masked = f.masked
    elif isinstance(screen, model.SingleOptionScreen):
        view = page_view(screen.options, profile, page)
        for number, opt in view.visible:
            body.append("%d %s" % (number, opt.label))
    elif isinstance(screen, model.MultiOptionScreen):
        view = page_view(screen.options, profile, page)
        for number, opt in view.visible:
            mark = "[x]" if opt.value in instance.selected else "[ ]"
            body.append("%d %s %s" % (number, mark, opt.label))
    else:
        raise TypeError("not a screen: %r" % (screen,))

    rows = [_clean(screen.title)[:width]]
    for line in body[:height - 2]:
        rows.append(_clean(line)[:width])
    while len(rows) < height:
        rows.append("")
    if view is not None and view.page_count > 1:
        rows[height - 2] = _clean("%d/%d <=Prev >=Next"
                                  % (view.page_index + 1, view.page_count))[:width]
    status = instance.message if instance.message is not None else HINTS[screen.kind]
    rows[height - 1] = _clean(status)[:width]

    if cursor is None:
        cursor = (height - 1, min(len(rows[height - 1]) + 1, width - 1))
    padded = tuple(r.ljust(width) for r in rows)
    return Frame(rows=padded, cursor=cursor, masked_cursor_field=masked)


def _field_window(fields: Sequence[model.FieldDef], active: int,
                  capacity: int) -> tuple[list[tuple[int, model.FieldDef]], int]:
    """All fields when they fit, else a window that keeps the active one visible."""
    if len(fields) <= capacity:
        return list(enumerate(fields)), 0
    start = min(max(0, active - capacity + 1), len(fields) - capacity)
    return [(start + i, f) for i, f in enumerate(fields[start:start + capacity])], start


def _field_display(instance: ScreenInstance, idx: int, f: model.FieldDef) -> str:
    if idx < instance.field_index:
        value = instance.field_values.get(f.name, "")
        return "*" * len(value) if f.masked else value
    if idx == instance.field_index:
        return "*" * len(instance.field_entry) if f.masked else instance.field_entry
    return ""


def message_frame(profile: TerminalProfile, title: str, lines: Sequence[str] = ()) -> Frame:
    """A free-standing frame outside any screen (goodbye, diagnostics)."""
    rows = [_clean(title)[:profile.width]]
    for line in list(lines)[:profile.height - 1]:
        rows.append(_clean(line)[:profile.width])
    while len(rows) < profile.height:
        rows.append("")
    padded = tuple(r.ljust(profile.width) for r in rows)
    return Frame(rows=padded, cursor=(profile.height - 1, 0))


def _cursor_seq(cursor: tuple[int, int]) -> bytes:
    return b"\x1b[%d;%dH" % (cursor[0] + 1, cursor[1] + 1)


def to_ansi(frame: Frame, previous: Frame | None = None) -> bytes:
    """Bytes that leave an ANSI terminal displaying exactly ``frame``.

    Without a previous frame: clear, home, rows separated by CR LF, then an
    absolute cursor move.  With one, only changed rows are repainted (padded
    far enough to overwrite the old content).
    """
    if previous is None or previous.width != frame.width or previous.height != frame.height:
        body = b"\r\n".join(row.rstrip().encode("ascii") for row in frame.rows)
        return CLEAR + HOME + body + _cursor_seq(frame.cursor)
    if previous.rows == frame.rows and previous.cursor == frame.cursor:
        return b""
    out = bytearray()
    for r, (old, new) in enumerate(zip(previous.rows, frame.rows)):
        if old == new:
            continue
        keep = max(len(old.rstrip()), len(new.rstrip()))
        out += b"\x1b[%d;1H" % (r + 1)
        out += new[:keep].encode("ascii")
    out += _cursor_seq(frame.cursor)
    return bytes(out)


def to_plain(frame: Frame) -> bytes:
    """Scrolling-text form: non-blank rows trimmed, prompt row always last."""
    out = bytearray()
    for row in frame.rows[:-1]:
        trimmed = row.rstrip()
        if trimmed:
            out += trimmed.encode("ascii") + b"\r\n"
    out += frame.rows[-1].rstrip().encode("ascii") + b"\r\n"
    return bytes(out)


def apply_echo(frame: Frame, char: str) -> Frame:
    """Account for one locally echoed character at the cursor cell."""
    r, c = frame.cursor
    if c >= frame.width - 1:
        return frame
    row = frame.rows[r]
    rows = frame.rows[:r] + (row[:c] + char + row[c + 1:],) + frame.rows[r + 1:]
    return replace(frame, rows=rows, cursor=(r, c + 1))


def apply_backspace(frame: Frame, erase_col_min: int = 0) -> Frame:
    """Account for one destructive backspace; never crosses ``erase_col_min``."""
    r, c = frame.cursor
    if c <= erase_col_min:
        return frame
    row = frame.rows[r]
    rows = frame.rows[:r] + (row[:c - 1] + " " + row[c:],) + frame.rows[r + 1:]
    return replace(frame, rows=rows, cursor=(r, c - 1))
