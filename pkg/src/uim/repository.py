"""Repository backends: XML directories and flat tables, served as snapshots.

A snapshot is immutable and versioned; reloads that fail leave the served
snapshot untouched, so a bad edit can never take the warehouse floor down.
The tabular backend turns pipe-delimited tables into the same canonical XML
the directory backend reads.
"""

from __future__ import annotations

import csv
import logging
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import model
from .model import ParseError, RepositoryDoc, ValidationReport, ViolationCode

log = logging.getLogger("uim.repository")

TABLE_FILES = {
    "screens": "screens.psv",
    "items": "items.psv",
    "fields": "fields.psv",
    "flows": "flows.psv",
    "transitions": "transitions.psv",
}

TABLE_COLUMNS = {
    "screens": ["id", "type", "title", "var", "root"],
    "items": ["screen", "seq", "kind", "label", "value"],
    "fields": ["screen", "seq", "name", "kind", "required", "max", "masked"],
    "flows": ["id", "start"],
    "transitions": ["flow", "screen", "outcome", "goto"],
}


class LoadError(Exception):
    """A backend load that must not replace the served snapshot."""

    def __init__(self, code: str, message: str, file: str | None = None,
                 parse_error: ParseError | None = None,
                 report: ValidationReport | None = None) -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.file = file
        self.parse_error = parse_error
        self.report = report

    def to_payload(self) -> dict:
        payload: dict = {"code": self.code, "message": self.message}
        if self.file is not None:
            payload["file"] = self.file
        if self.parse_error is not None:
            payload["line"] = self.parse_error.line
            payload["column"] = self.parse_error.column
        if self.report is not None:
            payload["violations"] = self.report.lines()
        return payload


class GenerateError(Exception):
    """A table row that cannot be turned into well-formed XML."""

    def __init__(self, table: str, row: int, reason: str) -> None:
        super().__init__("%s row %d: %s" % (table, row, reason))
        self.table = table
        self.row = row
        self.reason = reason


@dataclass(frozen=True)
class RepositorySnapshot:
    doc: RepositoryDoc
    version: int
    loaded_at: datetime


def merge_documents(docs: list[tuple[str, RepositoryDoc]]) -> tuple[RepositoryDoc, ValidationReport]:
    """Merge per-file documents; ids must be unique across the whole set and
    every file must agree on the root menu."""
    report = ValidationReport()
    screens: dict[str, model.ScreenDef] = {}
    flows: dict[str, model.Flow] = {}
    roots: dict[str, str] = {}
    for fname, doc in docs:
        roots.setdefault(doc.root_menu, fname)
        for sid, screen in doc.screens.items():
            if sid in screens or sid in flows:
                report.add(ViolationCode.DUPLICATE_ID, sid,
                           "id defined again in %s" % fname)
            else:
                screens[sid] = screen
        for fid, flow in doc.flows.items():
            if fid in flows or fid in screens:
                report.add(ViolationCode.DUPLICATE_ID, fid,
                           "id defined again in %s" % fname)
            else:
                flows[fid] = flow
    if len(roots) > 1:
        report.add(ViolationCode.DUPLICATE_ID, "root",
                   "documents disagree on the root menu: %s" % ", ".join(sorted(roots)))
    root = docs[0][1].root_menu if docs else ""
    return RepositoryDoc(screens=screens, flows=flows, root_menu=root), report


def load_directory(path: str | Path) -> RepositoryDoc:
    """Parse, merge and validate every ``*.xml`` file under ``path``."""
    path = Path(path)
    files = sorted(path.glob("*.xml"))
    if not files:
        raise LoadError("NoDocuments", "no *.xml files in %s" % path)
    docs: list[tuple[str, RepositoryDoc]] = []
    for f in files:
        try:
            docs.append((f.name, model.parse(f.read_text(encoding="utf-8"))))
        except ParseError as exc:
            raise LoadError("ParseError", "%s: %s" % (f.name, exc),
                            file=f.name, parse_error=exc) from exc
    doc, report = merge_documents(docs)
    report.violations += model.validate(doc).violations
    if not report.ok:
        raise LoadError("ValidationFailed",
                        "; ".join(str(v) for v in report.violations[:5]),
                        report=report)
    return doc


# ---------------------------------------------------------------------------
# Tabular backend


@dataclass(frozen=True)
class TabularSource:
    """Flat-record tables mirroring the XML schema, one list of dicts each."""

    screens: list[dict[str, str]] = field(default_factory=list)
    items: list[dict[str, str]] = field(default_factory=list)
    fields: list[dict[str, str]] = field(default_factory=list)
    flows: list[dict[str, str]] = field(default_factory=list)
    transitions: list[dict[str, str]] = field(default_factory=list)

    @classmethod
    def read_dir(cls, path: str | Path) -> "TabularSource":
        path = Path(path)
        tables: dict[str, list[dict[str, str]]] = {}
        for table, fname in TABLE_FILES.items():
            fpath = path / fname
            if not fpath.exists():
                raise LoadError("NoDocuments", "missing table file %s" % fname, file=fname)
            with fpath.open(newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh, delimiter="|")
                try:
                    header = next(reader)
                except StopIteration:
                    raise LoadError("ParseError", "%s: empty table" % fname, file=fname) from None
                if header != TABLE_COLUMNS[table]:
                    raise LoadError("ParseError", "%s: header must be %s"
                                    % (fname, "|".join(TABLE_COLUMNS[table])), file=fname)
                rows = []
                for row in reader:
                    if len(row) != len(header):
                        raise LoadError("ParseError", "%s: row has %d columns, expected %d"
                                        % (fname, len(row), len(header)), file=fname)
                    rows.append(dict(zip(header, row)))
                tables[table] = rows
        return cls(**tables)

    def write_dir(self, path: str | Path) -> None:
        path = Path(path)
        path.mkdir(parents=True, exist_ok=True)
        for table, fname in TABLE_FILES.items():
            columns = TABLE_COLUMNS[table]
            with (path / fname).open("w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh, delimiter="|")
                writer.writerow(columns)
                for record in getattr(self, table):
                    writer.writerow([record.get(c, "") for c in columns])


def _rows_by_screen(rows: list[dict[str, str]]) -> dict[str, list[tuple[int, dict[str, str]]]]:
    grouped: dict[str, list[tuple[int, dict[str, str]]]] = {}
    for i, row in enumerate(rows):
        grouped.setdefault(row.get("screen", ""), []).append((i, row))
    for group in grouped.values():
        group.sort(key=lambda pair: int(pair[1].get("seq") or 0))
    return grouped


def build_doc(source: TabularSource) -> RepositoryDoc:
    """Construct the document model the tables describe, or fail row-precisely."""
    screen_ids = {row.get("id", "") for row in source.screens}
    flow_ids = {row.get("id", "") for row in source.flows}
    items_by_screen = _rows_by_screen(source.items)
    fields_by_screen = _rows_by_screen(source.fields)

    roots = [row.get("id", "") for row in source.screens if row.get("root") == "1"]
    if not roots:
        raise GenerateError("screens", 0, "NoRoot: no screen row has root=1")
    if len(roots) > 1:
        raise GenerateError("screens", 0, "multiple screens marked root")

    for sid, group in items_by_screen.items():
        if sid not in screen_ids:
            raise GenerateError("items", group[0][0], "unknown screen '%s'" % sid)
    for sid, group in fields_by_screen.items():
        if sid not in screen_ids:
            raise GenerateError("fields", group[0][0], "unknown screen '%s'" % sid)

    screens: dict[str, model.ScreenDef] = {}
    for i, row in enumerate(source.screens):
        sid, stype, title = row.get("id", ""), row.get("type", ""), row.get("title", "")
        if sid in screens:
            raise GenerateError("screens", i, "duplicate screen id '%s'" % sid)
        children = items_by_screen.get(sid, [])
        if stype == "menu":
            items = []
            for j, item in children:
                kind = item.get("kind", "")
                if kind not in ("menu", "flow"):
                    raise GenerateError("items", j, "menu item kind must be menu or flow")
                target = item.get("value", "")
                pool = screen_ids if kind == "menu" else flow_ids
                if target not in pool:
                    raise GenerateError("items", j, "dangling %s reference '%s'" % (kind, target))
                items.append(model.MenuItem(label=item.get("label", ""), target=target,
                                            is_node=kind == "menu"))
            screens[sid] = model.MenuScreen(sid, title, tuple(items))
        elif stype == "info":
            lines = []
            for j, item in children:
                if item.get("kind") != "line":
                    raise GenerateError("items", j, "info screens take only line items")
                lines.append(item.get("label", ""))
            screens[sid] = model.InfoScreen(sid, title, tuple(lines))
        elif stype == "input":
            fields = []
            for j, frow in fields_by_screen.get(sid, []):
                kind = frow.get("kind") or "text"
                if kind not in ("text", "number"):
                    raise GenerateError("fields", j, "field kind must be text or number")
                try:
                    max_len = int(frow.get("max") or 32)
                except ValueError:
                    raise GenerateError("fields", j, "field max must be an integer") from None
                fields.append(model.FieldDef(
                    name=frow.get("name", ""), kind=kind,
                    required=frow.get("required") == "true",
                    max_len=max_len, masked=frow.get("masked") == "true"))
            screens[sid] = model.InputScreen(sid, title, tuple(fields))
        elif stype in ("single", "multi"):
            options = []
            for j, item in children:
                if item.get("kind") != "option":
                    raise GenerateError("items", j, "option screens take only option items")
                options.append(model.OptionDef(label=item.get("label", ""),
                                               value=item.get("value", "")))
            cls = model.SingleOptionScreen if stype == "single" else model.MultiOptionScreen
            screens[sid] = cls(sid, title, row.get("var", ""), tuple(options))
        else:
            raise GenerateError("screens", i, "unknown screen type '%s'" % stype)

    flows: dict[str, model.Flow] = {}
    steps_by_flow: dict[str, dict[tuple[str, str], str | None]] = {}
    for i, row in enumerate(source.transitions):
        fid = row.get("flow", "")
        if fid not in flow_ids:
            raise GenerateError("transitions", i, "unknown flow '%s'" % fid)
        sid = row.get("screen", "")
        if sid not in screen_ids:
            raise GenerateError("transitions", i, "unknown screen '%s'" % sid)
        goto = row.get("goto", "")
        if goto != model.END_TOKEN and goto not in screen_ids:
            raise GenerateError("transitions", i, "dangling goto '%s'" % goto)
        steps_by_flow.setdefault(fid, {})[(sid, row.get("outcome", ""))] = \
            None if goto == model.END_TOKEN else goto
    for i, row in enumerate(source.flows):
        fid, start = row.get("id", ""), row.get("start", "")
        if fid in flows:
            raise GenerateError("flows", i, "duplicate flow id '%s'" % fid)
        if start not in screen_ids:
            raise GenerateError("flows", i, "dangling start reference '%s'" % start)
        flows[fid] = model.Flow(id=fid, start=start, steps=steps_by_flow.get(fid, {}))

    return RepositoryDoc(screens=screens, flows=flows, root_menu=roots[0])


def generate_xml(source: TabularSource) -> str:
    """Canonical XML for the tables; parse(generate_xml(t)) equals build_doc(t)."""
    return model.serialize(build_doc(source))


def load_tabular(path: str | Path) -> RepositoryDoc:
    source = TabularSource.read_dir(path)
    try:
        text = generate_xml(source)
    except GenerateError as exc:
        raise LoadError("GenerateError", str(exc), file=TABLE_FILES.get(exc.table)) from exc
    doc = model.parse(text)
    report = model.validate(doc)
    if not report.ok:
        raise LoadError("ValidationFailed",
                        "; ".join(str(v) for v in report.violations[:5]), report=report)
    return doc


# ---------------------------------------------------------------------------
# Snapshot holder


class XmlDirectoryBackend:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def load(self) -> RepositoryDoc:
        return load_directory(self.path)

    def describe(self) -> str:
        return "xml_dir:%s" % self.path


class TabularBackend:
    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)

    def load(self) -> RepositoryDoc:
        return load_tabular(self.path)

    def describe(self) -> str:
        return "tabular:%s" % self.path


class RepositoryHolder:
    """Shared read-mostly snapshot cell with atomic replace.

    Readers grab ``snapshot()`` without blocking; reloads serialize on a lock
    so versions are strictly monotonic and a failed load never disturbs what
    is being served.
    """

    def __init__(self, backend) -> None:
        self.backend = backend
        self._lock = threading.Lock()
        self._snapshot: RepositorySnapshot | None = None

    def load_initial(self) -> RepositorySnapshot:
        doc = self.backend.load()
        with self._lock:
            self._snapshot = RepositorySnapshot(doc, 1, datetime.now(timezone.utc))
            return self._snapshot

    def snapshot(self) -> RepositorySnapshot:
        snap = self._snapshot
        if snap is None:
            raise RuntimeError("repository not loaded")
        return snap

    def reload(self) -> tuple[RepositorySnapshot, LoadError | None]:
        """New snapshot on success; the current one plus the error otherwise."""
        try:
            doc = self.backend.load()
        except LoadError as exc:
            log.warning("reload failed, keeping version %d: %s",
                        self.snapshot().version, exc)
            return self.snapshot(), exc
        with self._lock:
            version = self.snapshot().version + 1
            self._snapshot = RepositorySnapshot(doc, version, datetime.now(timezone.utc))
            log.info("repository reloaded: version %d (%s)", version, self.backend.describe())
            return self._snapshot, None
