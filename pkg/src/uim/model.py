"""Screen/flow document model: strict XML parsing, validation, templating.

A repository document declares screens of five kinds (menu, info, input,
single-option, multi-option) and flows that chain non-menu screens through
outcome-keyed transitions.  Parsing is strict: unknown elements or
attributes fail at load time with a position, not on a terminal.
"""

from __future__ import annotations

import logging
import re
import xml.parsers.expat
from dataclasses import dataclass, field
from typing import ClassVar, Mapping, Union

log = logging.getLogger("uim.model")

# Reserved transition target meaning "leave the flow".
END_TOKEN = "end"

OUTCOME_OK = "ok"
OUTCOME_BACK = "back"
OUTCOME_CANCEL = "cancel"
BASE_OUTCOMES = frozenset({OUTCOME_OK, OUTCOME_BACK, OUTCOME_CANCEL})

# Two-digit selection keys cap every numbered list.
MAX_ITEMS = 99

_ID_RE = re.compile(r"^[A-Za-z0-9_][A-Za-z0-9_.-]*$")
_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


class ParseCode:
    XML_SYNTAX = "XmlSyntax"
    UNKNOWN_ELEMENT = "UnknownElement"
    MISSING_ATTR = "MissingAttr"
    BAD_ATTR_VALUE = "BadAttrValue"


class ViolationCode:
    DANGLING_REF = "DanglingRef"
    DUPLICATE_ID = "DuplicateId"
    MENU_CYCLE = "MenuCycle"
    EMPTY_SCREEN = "EmptyScreen"
    TOO_MANY_ITEMS = "TooManyItems"
    MISSING_OK_TRANSITION = "MissingOkTransition"
    NODE_TARGETS_NON_MENU = "NodeTargetsNonMenu"
    ORPHAN = "Orphan"  # warning-only


class ParseError(Exception):
    """Schema or syntax failure with a document position."""

    def __init__(self, code: str, line: int, column: int, message: str) -> None:
        super().__init__("%s at line %d column %d: %s" % (code, line, column, message))
        self.code = code
        self.line = line
        self.column = column
        self.message = message


@dataclass(frozen=True)
class MenuItem:
    label: str
    target: str
    is_node: bool  # True: target is a menu id; False: target is a flow id


@dataclass(frozen=True)
class FieldDef:
    name: str
    kind: str  # "text" | "number"
    required: bool
    max_len: int
    masked: bool


@dataclass(frozen=True)
class OptionDef:
    label: str
    value: str


@dataclass(frozen=True)
class MenuScreen:
    kind: ClassVar[str] = "menu"
    id: str
    title: str
    items: tuple[MenuItem, ...]


@dataclass(frozen=True)
class InfoScreen:
    kind: ClassVar[str] = "info"
    id: str
    title: str
    lines: tuple[str, ...]


@dataclass(frozen=True)
class InputScreen:
    kind: ClassVar[str] = "input"
    id: str
    title: str
    fields: tuple[FieldDef, ...]


@dataclass(frozen=True)
class SingleOptionScreen:
    kind: ClassVar[str] = "single"
    id: str
    title: str
    var: str
    options: tuple[OptionDef, ...]


@dataclass(frozen=True)
class MultiOptionScreen:
    kind: ClassVar[str] = "multi"
    id: str
    title: str
    var: str
    options: tuple[OptionDef, ...]


ScreenDef = Union[MenuScreen, InfoScreen, InputScreen, SingleOptionScreen, MultiOptionScreen]
OptionScreen = (SingleOptionScreen, MultiOptionScreen)


@dataclass(frozen=True)
class Flow:
    id: str
    start: str
    # (screen id, outcome) -> next screen id, or None for flow end.
    steps: Mapping[tuple[str, str], str | None]


@dataclass(frozen=True)
class RepositoryDoc:
    screens: Mapping[str, ScreenDef]
    flows: Mapping[str, Flow]
    root_menu: str


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str

    def __str__(self) -> str:
        return "%s at %s: %s" % (self.code, self.where, self.message)


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, code: str, where: str, message: str) -> None:
        self.violations.append(Violation(code, where, message))

    def warn(self, code: str, where: str, message: str) -> None:
        self.warnings.append(Violation(code, where, message))

    def lines(self) -> list[str]:
        out = [str(v) for v in self.violations]
        out += ["warning: %s" % v for v in self.warnings]
        return out


# ---------------------------------------------------------------------------
# Parsing


_SCREEN_TYPES = ("menu", "info", "input", "single", "multi")

# element -> (required attrs, optional attrs)
_ATTRS = {
    "uim": ({"root"}, set()),
    "item": ({"label"}, {"menu", "flow"}),
    "line": (set(), set()),
    "field": ({"name"}, {"kind", "required", "max", "masked"}),
    "option": ({"label", "value"}, set()),
    "flow": ({"id", "start"}, set()),
    "on": ({"screen", "outcome", "goto"}, set()),
}

_SCREEN_CHILD = {"menu": "item", "info": "line", "input": "field",
                 "single": "option", "multi": "option"}


class _DocBuilder:
    """expat handler stack building a RepositoryDoc strictly."""

    def __init__(self) -> None:
        self.parser = xml.parsers.expat.ParserCreate()
        self.parser.StartElementHandler = self._start
        self.parser.EndElementHandler = self._end
        self.parser.CharacterDataHandler = self._chars
        self.parser.StartDoctypeDeclHandler = self._doctype
        self.stack: list[str] = []
        self.root_menu: str | None = None
        self.screens: dict[str, ScreenDef] = {}
        self.flows: dict[str, Flow] = {}
        # in-progress screen/flow
        self.cur_type = ""
        self.cur_id = ""
        self.cur_title = ""
        self.cur_var = ""
        self.cur_items: list[MenuItem] = []
        self.cur_lines: list[str] = []
        self.cur_fields: list[FieldDef] = []
        self.cur_options: list[OptionDef] = []
        self.cur_start = ""
        self.cur_steps: dict[tuple[str, str], str | None] = {}
        self.text: list[str] = []
        self.in_line = False

    def fail(self, code: str, message: str) -> None:
        raise ParseError(code, self.parser.CurrentLineNumber,
                         self.parser.CurrentColumnNumber + 1, message)

    def _doctype(self, *args: object) -> None:
        self.fail(ParseCode.UNKNOWN_ELEMENT, "DOCTYPE declarations are not supported")

    def _attrs(self, name: str, attrs: dict[str, str]) -> dict[str, str]:
        required, optional = _ATTRS[name]
        for key in attrs:
            if key not in required and key not in optional:
                self.fail(ParseCode.UNKNOWN_ELEMENT,
                          "unknown attribute '%s' on <%s>" % (key, name))
        for key in required:
            if key not in attrs:
                self.fail(ParseCode.MISSING_ATTR,
                          "<%s> requires attribute '%s'" % (name, key))
        return attrs

    def _id_value(self, name: str, value: str) -> str:
        if value == END_TOKEN:
            self.fail(ParseCode.BAD_ATTR_VALUE, "'%s' is reserved and cannot be an id" % END_TOKEN)
        if not _ID_RE.match(value):
            self.fail(ParseCode.BAD_ATTR_VALUE, "invalid %s '%s'" % (name, value))
        return value

    def _bool_value(self, name: str, value: str) -> bool:
        if value == "true":
            return True
        if value == "false":
            return False
        self.fail(ParseCode.BAD_ATTR_VALUE, "attribute '%s' must be true or false" % name)
        raise AssertionError("unreachable")

    def _start(self, name: str, attrs: dict[str, str]) -> None:
        depth = len(self.stack)
        if depth == 0:
            if name != "uim":
                self.fail(ParseCode.UNKNOWN_ELEMENT, "root element must be <uim>, got <%s>" % name)
            a = self._attrs("uim", attrs)
            self.root_menu = self._id_value("root", a["root"])
        elif depth == 1:
            if name == "screen":
                self._start_screen(attrs)
            elif name == "flow":
                a = self._attrs("flow", attrs)
                self.cur_id = self._id_value("flow id", a["id"])
                if self.cur_id in self.flows:
                    self.fail(ParseCode.BAD_ATTR_VALUE, "duplicate flow id '%s'" % self.cur_id)
                self.cur_start = self._id_value("start", a["start"])
                self.cur_steps = {}
            else:
                self.fail(ParseCode.UNKNOWN_ELEMENT, "unexpected element <%s>" % name)
        elif depth == 2 and self.stack[1] == "screen":
            self._start_screen_child(name, attrs)
        elif depth == 2 and self.stack[1] == "flow":
            if name != "on":
                self.fail(ParseCode.UNKNOWN_ELEMENT, "unexpected element <%s> in <flow>" % name)
            self._start_on(attrs)
        else:
            self.fail(ParseCode.UNKNOWN_ELEMENT, "unexpected element <%s>" % name)
        self.stack.append(name)

    def _start_screen(self, attrs: dict[str, str]) -> None:
        if "type" not in attrs:
            self.fail(ParseCode.MISSING_ATTR, "<screen> requires attribute 'type'")
        stype = attrs["type"]
        if stype not in _SCREEN_TYPES:
            self.fail(ParseCode.BAD_ATTR_VALUE,
                      "screen type must be one of %s, got '%s'" % ("/".join(_SCREEN_TYPES), stype))
        required = {"type", "id", "title"}
        if stype in ("single", "multi"):
            required.add("var")
        for key in attrs:
            if key not in required:
                self.fail(ParseCode.UNKNOWN_ELEMENT, "unknown attribute '%s' on <screen>" % key)
        for key in required:
            if key not in attrs:
                self.fail(ParseCode.MISSING_ATTR, "<screen> requires attribute '%s'" % key)
        self.cur_type = stype
        self.cur_id = self._id_value("screen id", attrs["id"])
        if self.cur_id in self.screens:
            self.fail(ParseCode.BAD_ATTR_VALUE, "duplicate screen id '%s'" % self.cur_id)
        self.cur_title = attrs["title"]
        self.cur_var = attrs.get("var", "")
        if stype in ("single", "multi") and not _NAME_RE.match(self.cur_var):
            self.fail(ParseCode.BAD_ATTR_VALUE, "invalid variable name '%s'" % self.cur_var)
        self.cur_items = []
        self.cur_lines = []
        self.cur_fields = []
        self.cur_options = []

    def _start_screen_child(self, name: str, attrs: dict[str, str]) -> None:
        expected = _SCREEN_CHILD[self.cur_type]
        if name != expected:
            self.fail(ParseCode.UNKNOWN_ELEMENT,
                      "<%s> not allowed in a %s screen (expected <%s>)"
                      % (name, self.cur_type, expected))
        if name == "item":
            a = self._attrs("item", attrs)
            has_menu = "menu" in a
            has_flow = "flow" in a
            if has_menu and has_flow:
                self.fail(ParseCode.BAD_ATTR_VALUE, "<item> takes either 'menu' or 'flow', not both")
            if not has_menu and not has_flow:
                self.fail(ParseCode.MISSING_ATTR, "<item> requires a 'menu' or 'flow' target")
            target = self._id_value("item target", a["menu"] if has_menu else a["flow"])
            self.cur_items.append(MenuItem(label=a["label"], target=target, is_node=has_menu))
        elif name == "line":
            self._attrs("line", attrs)
            self.in_line = True
            self.text = []
        elif name == "field":
            a = self._attrs("field", attrs)
            fname = a["name"]
            if not _NAME_RE.match(fname):
                self.fail(ParseCode.BAD_ATTR_VALUE, "invalid field name '%s'" % fname)
            if any(f.name == fname for f in self.cur_fields):
                self.fail(ParseCode.BAD_ATTR_VALUE, "duplicate field name '%s'" % fname)
            kind = a.get("kind", "text")
            if kind not in ("text", "number"):
                self.fail(ParseCode.BAD_ATTR_VALUE, "field kind must be text or number, got '%s'" % kind)
            max_len = 32
            if "max" in a:
                try:
                    max_len = int(a["max"])
                except ValueError:
                    max_len = 0
                if max_len < 1:
                    self.fail(ParseCode.BAD_ATTR_VALUE, "field max must be a positive integer")
            self.cur_fields.append(FieldDef(
                name=fname,
                kind=kind,
                required=self._bool_value("required", a.get("required", "false")),
                max_len=max_len,
                masked=self._bool_value("masked", a.get("masked", "false")),
            ))
        else:  # option
            a = self._attrs("option", attrs)
            value = self._id_value("option value", a["value"])
            if any(o.value == value for o in self.cur_options):
                self.fail(ParseCode.BAD_ATTR_VALUE, "duplicate option value '%s'" % value)
            self.cur_options.append(OptionDef(label=a["label"], value=value))

    def _start_on(self, attrs: dict[str, str]) -> None:
        a = self._attrs("on", attrs)
        screen = self._id_value("screen reference", a["screen"])
        outcome = a["outcome"]
        if not _ID_RE.match(outcome):
            self.fail(ParseCode.BAD_ATTR_VALUE, "invalid outcome token '%s'" % outcome)
        goto = a["goto"]
        if goto == END_TOKEN:
            target: str | None = None
        else:
            target = self._id_value("goto", goto)
        key = (screen, outcome)
        if key in self.cur_steps:
            self.fail(ParseCode.BAD_ATTR_VALUE,
                      "duplicate transition for screen '%s' outcome '%s'" % key)
        self.cur_steps[key] = target

    def _chars(self, data: str) -> None:
        if self.in_line:
            self.text.append(data)
        elif data.strip():
            self.fail(ParseCode.UNKNOWN_ELEMENT, "unexpected text content %r" % data.strip()[:40])

    def _end(self, name: str) -> None:
        self.stack.pop()
        if name == "line":
            self.cur_lines.append("".join(self.text))
            self.in_line = False
            self.text = []
        elif name == "screen":
            self.screens[self.cur_id] = self._finish_screen()
        elif name == "flow":
            self.flows[self.cur_id] = Flow(id=self.cur_id, start=self.cur_start,
                                           steps=dict(self.cur_steps))

    def _finish_screen(self) -> ScreenDef:
        if self.cur_type == "menu":
            return MenuScreen(self.cur_id, self.cur_title, tuple(self.cur_items))
        if self.cur_type == "info":
            return InfoScreen(self.cur_id, self.cur_title, tuple(self.cur_lines))
        if self.cur_type == "input":
            return InputScreen(self.cur_id, self.cur_title, tuple(self.cur_fields))
        if self.cur_type == "single":
            return SingleOptionScreen(self.cur_id, self.cur_title, self.cur_var,
                                      tuple(self.cur_options))
        return MultiOptionScreen(self.cur_id, self.cur_title, self.cur_var,
                                 tuple(self.cur_options))


def parse(document_text: str) -> RepositoryDoc:
    """Parse one XML document into a RepositoryDoc.

    Strictness: unknown elements/attributes, malformed values and duplicate
    ids within the document all raise ParseError with line and column.
    """
    builder = _DocBuilder()
    try:
        builder.parser.Parse(document_text, True)
    except xml.parsers.expat.ExpatError as exc:
        raise ParseError(ParseCode.XML_SYNTAX, exc.lineno, exc.offset + 1,
                         xml.parsers.expat.errors.messages[exc.code]) from exc
    assert builder.root_menu is not None
    return RepositoryDoc(screens=builder.screens, flows=builder.flows,
                         root_menu=builder.root_menu)


# ---------------------------------------------------------------------------
# Validation


def _flow_reachable(flow: Flow) -> set[str]:
    """Screen ids reachable inside a flow following every transition."""
    seen: set[str] = set()
    frontier = [flow.start]
    while frontier:
        sid = frontier.pop()
        if sid in seen:
            continue
        seen.add(sid)
        for (step_sid, _outcome), target in flow.steps.items():
            if step_sid == sid and target is not None and target not in seen:
                frontier.append(target)
    return seen


def validate(doc: RepositoryDoc) -> ValidationReport:
    """Cross-reference and shape checks; an empty report means loadable."""
    report = ValidationReport()
    screens, flows = doc.screens, doc.flows

    root = screens.get(doc.root_menu)
    if root is None:
        report.add(ViolationCode.DANGLING_REF, "root",
                   "root menu '%s' is not defined" % doc.root_menu)
    elif not isinstance(root, MenuScreen):
        report.add(ViolationCode.DANGLING_REF, "root",
                   "root '%s' is not a menu screen" % doc.root_menu)

    for fid in flows:
        if fid in screens:
            report.add(ViolationCode.DUPLICATE_ID, fid,
                       "id used by both a screen and a flow")

    for sid, screen in screens.items():
        if isinstance(screen, MenuScreen):
            if not screen.items:
                report.add(ViolationCode.EMPTY_SCREEN, sid, "menu has no items")
            if len(screen.items) > MAX_ITEMS:
                report.add(ViolationCode.TOO_MANY_ITEMS, sid,
                           "menu has %d items (max %d)" % (len(screen.items), MAX_ITEMS))
            for item in screen.items:
                if item.is_node:
                    target = screens.get(item.target)
                    if target is None:
                        report.add(ViolationCode.DANGLING_REF, sid,
                                   "item '%s' references unknown menu '%s'" % (item.label, item.target))
                    elif not isinstance(target, MenuScreen):
                        report.add(ViolationCode.NODE_TARGETS_NON_MENU, sid,
                                   "item '%s' targets non-menu screen '%s'" % (item.label, item.target))
                elif item.target not in flows:
                    report.add(ViolationCode.DANGLING_REF, sid,
                               "item '%s' references unknown flow '%s'" % (item.label, item.target))
        elif isinstance(screen, InputScreen):
            if not screen.fields:
                report.add(ViolationCode.EMPTY_SCREEN, sid, "input screen has no fields")
            if len(screen.fields) > MAX_ITEMS:
                report.add(ViolationCode.TOO_MANY_ITEMS, sid, "too many fields")
        elif isinstance(screen, OptionScreen):
            if not screen.options:
                report.add(ViolationCode.EMPTY_SCREEN, sid, "option screen has no options")
            if len(screen.options) > MAX_ITEMS:
                report.add(ViolationCode.TOO_MANY_ITEMS, sid, "too many options")

    # Menu graph: depth-first from the root; an id repeating on the current
    # path is a cycle.  Diamonds (shared submenus) are legal.
    reachable_menus: set[str] = set()
    cycles_seen: set[str] = set()

    def walk(sid: str, path: tuple[str, ...]) -> None:
        if sid in path:
            if sid not in cycles_seen:
                cycles_seen.add(sid)
                report.add(ViolationCode.MENU_CYCLE, sid,
                           "menu reachable from itself via " + " -> ".join(path + (sid,)))
            return
        screen = screens.get(sid)
        if not isinstance(screen, MenuScreen):
            return
        reachable_menus.add(sid)
        for item in screen.items:
            if item.is_node:
                walk(item.target, path + (sid,))

    if isinstance(root, MenuScreen):
        walk(doc.root_menu, ())

    used_flows: set[str] = set()
    for sid in reachable_menus:
        screen = screens[sid]
        assert isinstance(screen, MenuScreen)
        for item in screen.items:
            if not item.is_node and item.target in flows:
                used_flows.add(item.target)

    flow_screens: set[str] = set()
    for fid, flow in flows.items():
        start = screens.get(flow.start)
        if start is None:
            report.add(ViolationCode.DANGLING_REF, fid,
                       "flow starts at unknown screen '%s'" % flow.start)
        elif isinstance(start, MenuScreen):
            report.add(ViolationCode.DANGLING_REF, fid,
                       "flow starts at menu screen '%s'; flows chain non-menu screens" % flow.start)
        for (sid, outcome), target in flow.steps.items():
            where = "%s/%s" % (fid, sid)
            screen = screens.get(sid)
            if screen is None:
                report.add(ViolationCode.DANGLING_REF, where,
                           "transition for unknown screen '%s'" % sid)
            elif isinstance(screen, MenuScreen):
                report.add(ViolationCode.DANGLING_REF, where,
                           "transition for menu screen '%s'; flows chain non-menu screens" % sid)
            elif outcome not in BASE_OUTCOMES:
                values = {o.value for o in screen.options} if isinstance(screen, OptionScreen) else set()
                if outcome not in values:
                    report.add(ViolationCode.DANGLING_REF, where,
                               "outcome '%s' can never occur on screen '%s'" % (outcome, sid))
            if target is not None:
                tscreen = screens.get(target)
                if tscreen is None:
                    report.add(ViolationCode.DANGLING_REF, where,
                               "transition goes to unknown screen '%s'" % target)
                elif isinstance(tscreen, MenuScreen):
                    report.add(ViolationCode.DANGLING_REF, where,
                               "transition goes to menu screen '%s'" % target)
        if flow.start in screens and not isinstance(screens.get(flow.start), MenuScreen):
            for sid in _flow_reachable(flow):
                screen = screens.get(sid)
                if screen is None or isinstance(screen, MenuScreen):
                    continue
                if (sid, OUTCOME_OK) not in flow.steps:
                    report.add(ViolationCode.MISSING_OK_TRANSITION, "%s/%s" % (fid, sid),
                               "no 'ok' transition for screen '%s'" % sid)
            flow_screens |= _flow_reachable(flow)

    for sid in screens:
        if sid not in reachable_menus and sid not in flow_screens:
            report.warn(ViolationCode.ORPHAN, sid, "screen is not reachable from the root menu")
    for fid in flows:
        if fid not in used_flows:
            report.warn(ViolationCode.ORPHAN, fid, "flow is not referenced by any menu item")
    return report


# ---------------------------------------------------------------------------
# Templating


_TEMPLATE_RE = re.compile(r"\$\$|\$\{([^{}]*)\}")


def substitute(template_text: str, bindings: Mapping[str, str]) -> str:
    """Expand ``${name}`` from bindings; ``$$`` is a literal dollar.

    Unknown names expand to the empty string (logged, not fatal) so a stale
    template never blocks an operator.
    """

    def repl(match: re.Match[str]) -> str:
        if match.group(0) == "$$":
            return "$"
        name = match.group(1)
        value = bindings.get(name)
        if value is None:
            log.warning("template references unbound variable '%s'", name)
            return ""
        return value

    return _TEMPLATE_RE.sub(repl, template_text)


# ---------------------------------------------------------------------------
# Canonical serialization


def _attr(value: str) -> str:
    value = (value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
             .replace('"', "&quot;").replace("\n", "&#10;")
             .replace("\r", "&#13;").replace("\t", "&#9;"))
    return '"%s"' % value


def _text(value: str) -> str:
    return (value.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace("\r", "&#13;"))


def serialize(doc: RepositoryDoc) -> str:
    """Emit canonical XML: screens then flows, each sorted by id.

    parse(serialize(doc)) reconstructs an equal model; table-generated and
    hand-written repositories compare byte-for-byte once canonicalized.
    """
    out = ["<uim root=%s>" % _attr(doc.root_menu)]
    for sid in sorted(doc.screens):
        screen = doc.screens[sid]
        attrs = "type=%s id=%s title=%s" % (_attr(screen.kind), _attr(screen.id), _attr(screen.title))
        if isinstance(screen, OptionScreen):
            attrs += " var=%s" % _attr(screen.var)
        children: list[str] = []
        if isinstance(screen, MenuScreen):
            for item in screen.items:
                key = "menu" if item.is_node else "flow"
                children.append("    <item label=%s %s=%s/>" % (_attr(item.label), key, _attr(item.target)))
        elif isinstance(screen, InfoScreen):
            children = ["    <line>%s</line>" % _text(line) for line in screen.lines]
        elif isinstance(screen, InputScreen):
            for f in screen.fields:
                extra = " masked=\"true\"" if f.masked else ""
                children.append('    <field name=%s kind=%s required=%s max=%s%s/>'
                                % (_attr(f.name), _attr(f.kind),
                                   _attr("true" if f.required else "false"),
                                   _attr(str(f.max_len)), extra))
        else:
            for opt in screen.options:
                children.append("    <option label=%s value=%s/>" % (_attr(opt.label), _attr(opt.value)))
        if children:
            out.append("  <screen %s>" % attrs)
            out.extend(children)
            out.append("  </screen>")
        else:
            out.append("  <screen %s/>" % attrs)
    for fid in sorted(doc.flows):
        flow = doc.flows[fid]
        steps = sorted(flow.steps.items())
        if steps:
            out.append("  <flow id=%s start=%s>" % (_attr(flow.id), _attr(flow.start)))
            for (sid, outcome), target in steps:
                out.append("    <on screen=%s outcome=%s goto=%s/>"
                           % (_attr(sid), _attr(outcome), _attr(END_TOKEN if target is None else target)))
            out.append("  </flow>")
        else:
            out.append("  <flow id=%s start=%s/>" % (_attr(flow.id), _attr(flow.start)))
    out.append("</uim>")
    return "\n".join(out) + "\n"
