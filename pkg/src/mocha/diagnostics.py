"""YAML loading that keeps node line numbers so validation errors can point at them."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any

import yaml

from mocha.errors import ConfigError


@dataclass(frozen=True)
class Diagnostic:
    path: tuple
    message: str
    line: int | None = None
    source: str | None = None

    def __str__(self) -> str:
        where = self.source or "<input>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        dotted = ".".join(str(p) for p in self.path)
        return f"{where}: {dotted + ': ' if dotted else ''}{self.message}"


class LocatedDocument:
    """Parsed YAML plus a lookup from key paths to 1-based source lines."""

    def __init__(self, text: str, source: str | None = None):
        self.source = source
        try:
            self._root = yaml.compose(text, Loader=yaml.SafeLoader)
            self.data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else None
            diag = Diagnostic((), f"parse error: {getattr(exc, 'problem', exc)}", line, source)
            raise ConfigError(str(diag), [diag]) from exc

    @classmethod
    def from_path(cls, path: str | Path) -> LocatedDocument:
        path = Path(path)
        return cls(path.read_text(), str(path))

    def line_of(self, path: tuple) -> int | None:
        node = self._root
        line = node.start_mark.line + 1 if node is not None else None
        for part in path:
            child = None
            if isinstance(node, yaml.MappingNode):
                for k, v in node.value:
                    if k.value == str(part):
                        child = v
                        break
            elif isinstance(node, yaml.SequenceNode) and isinstance(part, int):
                if 0 <= part < len(node.value):
                    child = node.value[part]
            if child is None:
                break
            node = child
            line = node.start_mark.line + 1
        return line

    def diagnose(self, path: tuple, message: str) -> Diagnostic:
        return Diagnostic(tuple(path), message, self.line_of(tuple(path)), self.source)


def raise_if_any(diagnostics: list[Diagnostic], what: str) -> None:
    if diagnostics:
        lines = "\n".join(f"  {d}" for d in diagnostics)
        raise ConfigError(f"invalid {what}:\n{lines}", diagnostics)


def as_mapping(value: Any) -> dict:
    return value if isinstance(value, dict) else {}
