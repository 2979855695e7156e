"""Server configuration: defaults, flat key=value files, env override."""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from . import repository
from .render import TerminalKind, TerminalProfile

ENV_CONFIG = "UIM_CONFIG"

_BACKENDS = ("xml_dir", "tabular")
_KINDS = ("ansi", "dumb")


@dataclass
class ServerConfig:
    telnet_host: str = "0.0.0.0"
    telnet_port: int = 2323  # 23 works too but needs privilege
    admin_host: str = "127.0.0.1"
    admin_port: int = 8080
    repo_backend: str = "xml_dir"
    repo_path: str = "repository"
    profile_width: int = 80
    profile_height: int = 24
    profile_kind: str = "ansi"
    idle_timeout_secs: int = 900
    max_sessions: int = 256
    journal_path: str = "journal.jsonl"
    journal_fsync: bool = False
    static_dir: str = ""  # admin console assets, optional

    def check(self) -> None:
        if self.telnet_port == self.admin_port and self.telnet_port != 0:
            raise ValueError("telnet_port and admin_port must differ")
        if self.max_sessions < 1:
            raise ValueError("max_sessions must be at least 1")
        if self.repo_backend not in _BACKENDS:
            raise ValueError("repo_backend must be one of %s" % (_BACKENDS,))
        if self.profile_kind not in _KINDS:
            raise ValueError("profile_kind must be one of %s" % (_KINDS,))
        # Raises if the dimensions are below the usable minimum.
        self.default_profile()

    def default_profile(self) -> TerminalProfile:
        kind = TerminalKind.ANSI if self.profile_kind == "ansi" else TerminalKind.DUMB
        return TerminalProfile(self.profile_width, self.profile_height, kind)

    def make_backend(self):
        if self.repo_backend == "tabular":
            return repository.TabularBackend(self.repo_path)
        return repository.XmlDirectoryBackend(self.repo_path)


def parse_config(text: str) -> ServerConfig:
    """key = value lines; '#' starts a comment; unknown keys fail loudly."""
    known = {f.name: f.type for f in fields(ServerConfig)}
    ints = {f.name for f in fields(ServerConfig) if f.type == "int"}
    bools = {f.name for f in fields(ServerConfig) if f.type == "bool"}
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError("line %d: expected key = value" % lineno)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known:
            raise ValueError("line %d: unknown key '%s'" % (lineno, key))
        if key in ints:
            try:
                values[key] = int(value)
            except ValueError:
                raise ValueError("line %d: '%s' must be an integer" % (lineno, key)) from None
        elif key in bools:
            if value not in ("true", "false"):
                raise ValueError("line %d: '%s' must be true or false" % (lineno, key))
            values[key] = value == "true"
        else:
            values[key] = value
    config = ServerConfig(**values)
    config.check()
    return config


def load_config(path: str | None = None) -> ServerConfig:
    """Read the given path, else $UIM_CONFIG, else built-in defaults."""
    path = path or os.environ.get(ENV_CONFIG)
    if not path:
        config = ServerConfig()
        config.check()
        return config
    return parse_config(Path(path).read_text(encoding="utf-8"))
