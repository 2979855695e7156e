"""Telnet wire protocol: incremental decoding, encoding and option negotiation.

The decoder is an IAC interpreter that can be fed arbitrary byte chunks;
constructs split across reads are held in a pending buffer so the emitted
event stream is independent of how the TCP stream was segmented.  Option
negotiation uses the loop-free want/queue state machine, tracking both ends
of the connection per option.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from enum import Enum
from typing import Union

log = logging.getLogger("uim.telnet")

# Command bytes.
IAC = 255
SE = 240
SB = 250
WILL = 251
WONT = 252
DO = 253
DONT = 254
NOP = 241
BRK = 243
IP = 244
AO = 245
AYT = 246
EC = 247
EL = 248
GA = 249

PLAIN_COMMANDS = frozenset({NOP, BRK, IP, AO, AYT, EC, EL, GA})
NEGOTIATION_VERBS = frozenset({WILL, WONT, DO, DONT})

# Options this server tracks; everything else is refused outright.
ECHO = 1
SGA = 3
TERMINAL_TYPE = 24
NAWS = 31
SUPPORTED_OPTIONS = frozenset({ECHO, SGA, TERMINAL_TYPE, NAWS})

# TERMINAL-TYPE subnegotiation leading bytes.
TTYPE_IS = 0
TTYPE_SEND = 1

# A subnegotiation that never terminates is discarded past this size.
MAX_SUBNEGOTIATION = 8192


@dataclass(frozen=True)
class Data:
    """Application bytes with IAC escapes already resolved."""

    payload: bytes


@dataclass(frozen=True)
class Command:
    code: int


@dataclass(frozen=True)
class Negotiate:
    verb: int
    option: int


@dataclass(frozen=True)
class Subnegotiation:
    option: int
    payload: bytes


TelnetEvent = Union[Data, Command, Negotiate, Subnegotiation]


@dataclass(frozen=True)
class ProtocolWarning:
    """Recoverable wire-level oddity; never part of the event stream."""

    message: str


class TelnetDecoder:
    """Incremental decoder holding partial constructs between feed() calls.

    ``pending`` is always a prefix of an unfinished Telnet construct (or
    empty).  Warnings accumulate in ``warnings`` and can be drained by the
    caller; malformed sequences are skipped, never fatal.
    """

    def __init__(self) -> None:
        self.pending = b""
        self.warnings: list[ProtocolWarning] = []

    def take_warnings(self) -> list[ProtocolWarning]:
        out, self.warnings = self.warnings, []
        return out

    def feed(self, data: bytes) -> list[TelnetEvent]:
        buf = self.pending + data
        events: list[TelnetEvent] = []
        run = bytearray()  # decoded data bytes awaiting flush

        def flush() -> None:
            if run:
                events.append(Data(bytes(run)))
                run.clear()

        i = 0
        n = len(buf)
        while i < n:
            b = buf[i]
            if b != IAC:
                run.append(b)
                i += 1
                continue
            if i + 1 >= n:
                break  # lone IAC at end of chunk: hold
            cmd = buf[i + 1]
            if cmd == IAC:
                run.append(IAC)
                i += 2
                continue
            if cmd in NEGOTIATION_VERBS:
                if i + 2 >= n:
                    break
                flush()
                events.append(Negotiate(cmd, buf[i + 2]))
                i += 3
                continue
            if cmd == SB:
                if i + 2 >= n:
                    break
                option = buf[i + 2]
                payload = bytearray()
                j = i + 3
                closed = False
                while j < n:
                    if buf[j] != IAC:
                        payload.append(buf[j])
                        j += 1
                        continue
                    if j + 1 >= n:
                        break
                    nxt = buf[j + 1]
                    if nxt == SE:
                        closed = True
                        j += 2
                        break
                    if nxt == IAC:
                        payload.append(IAC)
                        j += 2
                        continue
                    # IAC <other> inside a subnegotiation is illegal; drop it.
                    self._warn("IAC %d inside subnegotiation" % nxt)
                    j += 2
                if not closed:
                    if n - i > MAX_SUBNEGOTIATION:
                        self._warn("oversized unterminated subnegotiation dropped")
                        i = n
                    break
                flush()
                events.append(Subnegotiation(option, bytes(payload)))
                i = j
                continue
            if cmd in PLAIN_COMMANDS:
                flush()
                events.append(Command(cmd))
                i += 2
                continue
            if cmd == SE:
                self._warn("IAC SE without matching IAC SB")
            else:
                self._warn("unknown command byte %d after IAC" % cmd)
            i += 2
        flush()
        self.pending = bytes(buf[i:])
        return events

    def _warn(self, message: str) -> None:
        log.debug("protocol warning: %s", message)
        self.warnings.append(ProtocolWarning(message))


def encode(event: TelnetEvent) -> bytes:
    """Serialize one event; Data bytes equal to IAC are doubled."""
    if isinstance(event, Data):
        return event.payload.replace(b"\xff", b"\xff\xff")
    if isinstance(event, Command):
        if event.code not in PLAIN_COMMANDS:
            raise ValueError("not a plain command byte: %d" % event.code)
        return bytes([IAC, event.code])
    if isinstance(event, Negotiate):
        if event.verb not in NEGOTIATION_VERBS:
            raise ValueError("not a negotiation verb: %d" % event.verb)
        return bytes([IAC, event.verb, event.option])
    if isinstance(event, Subnegotiation):
        body = event.payload.replace(b"\xff", b"\xff\xff")
        return bytes([IAC, SB, event.option]) + body + bytes([IAC, SE])
    raise TypeError("not a TelnetEvent: %r" % (event,))


def encode_all(events: list[TelnetEvent]) -> bytes:
    return b"".join(encode(e) for e in events)


class Want(Enum):
    """Per-side option phase of the loop-free negotiation machine."""

    NO = "no"
    YES = "yes"
    WANT_NO = "want-no"
    WANT_YES = "want-yes"


@dataclass
class OptionState:
    """Both ends' phases for one option, with the queued-flip bits."""

    us: Want = Want.NO
    us_opposite: bool = False
    them: Want = Want.NO
    them_opposite: bool = False


class OptionNegotiator:
    """Loop-free WILL/WONT/DO/DONT negotiation for one connection end.

    ``accept_local`` is the set of options this end agrees to perform itself;
    ``accept_remote`` the set it agrees to let the peer perform.  Both must be
    subsets of SUPPORTED_OPTIONS; anything outside is refused and never
    activated.  The machine never repeats a verb for an option without an
    intervening received verb.
    """

    def __init__(self, accept_local: set[int], accept_remote: set[int]) -> None:
        if not accept_local <= SUPPORTED_OPTIONS or not accept_remote <= SUPPORTED_OPTIONS:
            raise ValueError("acceptance sets must be within the supported options")
        self.accept_local = frozenset(accept_local)
        self.accept_remote = frozenset(accept_remote)
        self._states: dict[int, OptionState] = {}

    def state(self, option: int) -> OptionState:
        try:
            return self._states[option]
        except KeyError:
            st = OptionState()
            self._states[option] = st
            return st

    def local_active(self, option: int) -> bool:
        return self.state(option).us is Want.YES

    def remote_active(self, option: int) -> bool:
        return self.state(option).them is Want.YES

    # -- outgoing requests ------------------------------------------------

    def request_local_enable(self, option: int) -> list[TelnetEvent]:
        if option not in self.accept_local:
            raise ValueError("refusing to request an option we would not accept")
        st = self.state(option)
        if st.us is Want.NO:
            st.us = Want.WANT_YES
            return [Negotiate(WILL, option)]
        if st.us is Want.WANT_NO and not st.us_opposite:
            st.us_opposite = True
        return []

    def request_local_disable(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.us is Want.YES:
            st.us = Want.WANT_NO
            return [Negotiate(WONT, option)]
        if st.us is Want.WANT_YES and not st.us_opposite:
            st.us_opposite = True
        return []

    def request_remote_enable(self, option: int) -> list[TelnetEvent]:
        if option not in self.accept_remote:
            raise ValueError("refusing to request an option we would not accept")
        st = self.state(option)
        if st.them is Want.NO:
            st.them = Want.WANT_YES
            return [Negotiate(DO, option)]
        if st.them is Want.WANT_NO and not st.them_opposite:
            st.them_opposite = True
        return []

    def request_remote_disable(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.them is Want.YES:
            st.them = Want.WANT_NO
            return [Negotiate(DONT, option)]
        if st.them is Want.WANT_YES and not st.them_opposite:
            st.them_opposite = True
        return []

    # -- incoming verbs ---------------------------------------------------

    def receive(self, verb: int, option: int) -> list[TelnetEvent]:
        """Apply one received verb; returns the minimal replies to send."""
        if verb == WILL:
            return self._receive_will(option)
        if verb == WONT:
            return self._receive_wont(option)
        if verb == DO:
            return self._receive_do(option)
        if verb == DONT:
            return self._receive_dont(option)
        raise ValueError("not a negotiation verb: %d" % verb)

    def _receive_will(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.them is Want.NO:
            if option in self.accept_remote:
                st.them = Want.YES
                return [Negotiate(DO, option)]
            return [Negotiate(DONT, option)]
        if st.them is Want.YES:
            return []
        if st.them is Want.WANT_NO:
            # DONT was answered by WILL; accept the peer's insistence.
            log.debug("option %d: DONT answered by WILL", option)
            if st.them_opposite:
                st.them = Want.YES
                st.them_opposite = False
            else:
                st.them = Want.NO
            return []
        # WANT_YES
        if st.them_opposite:
            st.them = Want.WANT_NO
            st.them_opposite = False
            return [Negotiate(DONT, option)]
        st.them = Want.YES
        return []

    def _receive_wont(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.them is Want.NO:
            return []
        if st.them is Want.YES:
            st.them = Want.NO
            return [Negotiate(DONT, option)]
        if st.them is Want.WANT_NO:
            if st.them_opposite:
                st.them = Want.WANT_YES
                st.them_opposite = False
                return [Negotiate(DO, option)]
            st.them = Want.NO
            return []
        # WANT_YES
        st.them = Want.NO
        st.them_opposite = False
        return []

    def _receive_do(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.us is Want.NO:
            if option in self.accept_local:
                st.us = Want.YES
                return [Negotiate(WILL, option)]
            return [Negotiate(WONT, option)]
        if st.us is Want.YES:
            return []
        if st.us is Want.WANT_NO:
            log.debug("option %d: WONT answered by DO", option)
            if st.us_opposite:
                st.us = Want.YES
                st.us_opposite = False
            else:
                st.us = Want.NO
            return []
        # WANT_YES
        if st.us_opposite:
            st.us = Want.WANT_NO
            st.us_opposite = False
            return [Negotiate(WONT, option)]
        st.us = Want.YES
        return []

    def _receive_dont(self, option: int) -> list[TelnetEvent]:
        st = self.state(option)
        if st.us is Want.NO:
            return []
        if st.us is Want.YES:
            st.us = Want.NO
            return [Negotiate(WONT, option)]
        if st.us is Want.WANT_NO:
            if st.us_opposite:
                st.us = Want.WANT_YES
                st.us_opposite = False
                return [Negotiate(WILL, option)]
            st.us = Want.NO
            return []
        # WANT_YES
        st.us = Want.NO
        st.us_opposite = False
        return []


class ServerNegotiator(OptionNegotiator):
    """Server-end policy: we echo and suppress go-ahead, the client reports
    window size and terminal type.  Once the peer grants TERMINAL-TYPE the
    name is probed with a SEND subnegotiation, exactly once."""

    def __init__(self) -> None:
        super().__init__(
            accept_local={ECHO, SGA},
            accept_remote={SGA, NAWS, TERMINAL_TYPE},
        )
        self._ttype_probe_sent = False

    def initial_handshake(self) -> list[TelnetEvent]:
        events: list[TelnetEvent] = []
        events += self.request_local_enable(ECHO)
        events += self.request_local_enable(SGA)
        events += self.request_remote_enable(NAWS)
        events += self.request_remote_enable(TERMINAL_TYPE)
        return events

    def receive(self, verb: int, option: int) -> list[TelnetEvent]:
        had_ttype = self.remote_active(TERMINAL_TYPE)
        replies = super().receive(verb, option)
        if not had_ttype and self.remote_active(TERMINAL_TYPE) and not self._ttype_probe_sent:
            self._ttype_probe_sent = True
            replies.append(Subnegotiation(TERMINAL_TYPE, bytes([TTYPE_SEND])))
        return replies


def parse_naws(payload: bytes) -> tuple[int, int] | None:
    """Window-size payload: two big-endian u16 (width, height); 0 = unknown."""
    if len(payload) != 4:
        return None
    width, height = struct.unpack(">HH", payload)
    if width == 0 or height == 0:
        return None
    return width, height


def parse_terminal_type(payload: bytes) -> str | None:
    """Client terminal-name payload: leading IS byte then the ASCII name."""
    if not payload or payload[0] != TTYPE_IS:
        return None
    name = payload[1:].decode("ascii", errors="replace").strip()
    return name or None
