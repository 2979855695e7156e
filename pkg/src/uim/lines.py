"""Folding decoded Telnet data bytes into operator input lines.

CR LF, CR NUL, bare CR and bare LF all commit a line; backspace and delete
erase one buffered character; everything non-printable is dropped.  The
assembler reports what happened as ops so the caller can echo faithfully.
"""

from __future__ import annotations

CR, LF, NUL, BS, DEL = 13, 10, 0, 8, 127

MAX_LINE = 256


class LineAssembler:
    """Byte-at-a-time line folding, safe across arbitrary read boundaries."""

    def __init__(self) -> None:
        self._buf: list[str] = []
        self._swallow_nl = False

    def feed(self, data: bytes) -> list[tuple]:
        """Ops in order: ("char", c) typed, ("bs",) erased, ("line", text) committed."""
        ops: list[tuple] = []
        for b in data:
            if self._swallow_nl:
                self._swallow_nl = False
                if b in (LF, NUL):
                    continue
            if b == CR:
                ops.append(("line", self._commit()))
                self._swallow_nl = True
            elif b == LF:
                ops.append(("line", self._commit()))
            elif b in (BS, DEL):
                if self._buf:
                    self._buf.pop()
                    ops.append(("bs",))
            elif 32 <= b <= 126 and len(self._buf) < MAX_LINE:
                c = chr(b)
                self._buf.append(c)
                ops.append(("char", c))
        return ops

    def _commit(self) -> str:
        line = "".join(self._buf)
        self._buf = []
        return line
