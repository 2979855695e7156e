"""Command-line entry points: serve, validate, render, simulate."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import model, render, repository
from .config import load_config
from .journal import record_to_json
from .render import ScreenInstance, TerminalKind, TerminalProfile
from .repository import LoadError, RepositorySnapshot
from .shell import open_session


def _detect_backend(path: str):
    p = Path(path)
    if (p / repository.TABLE_FILES["screens"]).exists():
        return repository.TabularBackend(p)
    return repository.XmlDirectoryBackend(p)


def _load_doc(path: str) -> model.RepositoryDoc:
    return _detect_backend(path).load()


def cmd_serve(args: argparse.Namespace) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config)
    except (OSError, ValueError) as exc:
        print("bad config: %s" % exc, file=sys.stderr)
        return 1
    if args.repo:
        config.repo_path = args.repo
    if args.telnet_port is not None:
        config.telnet_port = args.telnet_port
    if args.admin_port is not None:
        config.admin_port = args.admin_port
    if args.journal:
        config.journal_path = args.journal
    from .server import serve

    return serve(config)


def cmd_validate(args: argparse.Namespace) -> int:
    try:
        doc = _load_doc(args.path)
    except LoadError as exc:
        if exc.report is not None:
            for line in exc.report.lines():
                print(line)
        else:
            print("%s: %s" % (exc.code, exc.message))
        return 1
    report = model.validate(doc)
    for line in report.lines():
        print(line)
    print("OK: %d screens, %d flows" % (len(doc.screens), len(doc.flows)))
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    try:
        doc = _load_doc(args.path)
    except LoadError as exc:
        print("%s: %s" % (exc.code, exc.message), file=sys.stderr)
        return 1
    screen = doc.screens.get(args.screen)
    if screen is None:
        print("no such screen: %s" % args.screen, file=sys.stderr)
        return 1
    kind = TerminalKind.ANSI if args.ansi else TerminalKind.DUMB
    try:
        profile = TerminalProfile(args.width, args.height, kind)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    frame = render.layout(ScreenInstance(screen=screen), profile, args.page)
    data = render.to_ansi(frame) if args.ansi else render.to_plain(frame)
    sys.stdout.buffer.write(data)
    sys.stdout.buffer.flush()
    return 0


def _script_lines(script: str) -> list[str]:
    path = Path(script)
    if path.is_file():
        text = path.read_text(encoding="utf-8")
    else:
        text = script.replace("\\n", "\n")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        doc = _load_doc(args.path)
    except LoadError as exc:
        print("%s: %s" % (exc.code, exc.message), file=sys.stderr)
        return 1
    snapshot = RepositorySnapshot(doc, 1, None)
    profile = TerminalProfile(args.width, args.height, TerminalKind.DUMB)
    session, effect = open_session(snapshot, profile, session_id=args.session_id)
    if args.echo_frames:
        sys.stdout.buffer.write(render.to_plain(effect.frame))
    for line in _script_lines(args.script):
        effect = session.handle_line(line)
        for record in effect.records:
            print(record_to_json(record))
        if args.echo_frames:
            sys.stdout.buffer.write(render.to_plain(effect.frame))
        if effect.terminated:
            break
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uim",
        description="Telnet application server for XML-defined screen workflows.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the telnet server and admin API")
    p.add_argument("--config", help="key=value config file (or $UIM_CONFIG)")
    p.add_argument("--repo", help="override repository path")
    p.add_argument("--telnet-port", type=int, default=None)
    p.add_argument("--admin-port", type=int, default=None)
    p.add_argument("--journal", help="override journal path")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("validate", help="check a repository directory")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render", help="print one screen as terminal bytes")
    p.add_argument("path")
    p.add_argument("--screen", required=True)
    p.add_argument("--width", type=int, default=80)
    p.add_argument("--height", type=int, default=24)
    p.add_argument("--page", type=int, default=0)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--ansi", action="store_true")
    mode.add_argument("--plain", action="store_true", default=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("simulate", help="run a keystroke script through the shell")
    p.add_argument("path")
    p.add_argument("--script", required=True,
                   help="script file, or inline text with \\n separators")
    p.add_argument("--width", type=int, default=80)
    p.add_argument("--height", type=int, default=24)
    p.add_argument("--session-id", default="sim")
    p.add_argument("--echo-frames", action="store_true",
                   help="also print each rendered frame")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
