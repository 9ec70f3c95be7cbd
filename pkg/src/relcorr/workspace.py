"""Loading DSL files into one name table."""

from __future__ import annotations

from dataclasses import dataclass, field
from os import PathLike
from pathlib import Path

from .minilang import ProgramDef, resolve_prog
from .space import Space
from .speclang import SpecDef, resolve_spec
from .syntax import DSLError, Parser


@dataclass
class Workspace:
    spaces: dict[str, Space] = field(default_factory=dict)
    specs: dict[str, SpecDef] = field(default_factory=dict)
    progs: dict[str, ProgramDef] = field(default_factory=dict)

    def _owner(self, name: str) -> str | None:
        for kind, table in (("space", self.spaces), ("spec", self.specs), ("prog", self.progs)):
            if name in table:
                return kind
        return None

    def _add(self, kind: str, table: dict, obj, where: str):
        owner = self._owner(obj.name)
        if owner is None:
            table[obj.name] = obj
        elif owner != kind or table[obj.name] != obj:
            # re-loading the same definition is harmless, anything else is a clash
            raise DSLError(f"{kind} {obj.name!r} conflicts with an existing {owner}", source=where)

    def load_text(self, text: str, where: str = "<text>") -> list[str]:
        """Parse every declaration in ``text``; returns the names defined."""
        p = Parser(text)
        pending = []
        try:
            while p.tok.kind != "eof":
                if p.at("space"):
                    sp = p.space_decl()
                    self._add("space", self.spaces, sp, where)
                    pending.append(("space", sp))
                elif p.at("spec"):
                    pending.append(("spec", p.spec_decl()))
                elif p.at("prog"):
                    pending.append(("prog", p.prog_decl()))
                else:
                    raise p.error("expected 'space', 'spec' or 'prog'")
        except DSLError as e:
            raise DSLError(e.message, e.line, e.col, where) from None
        names = []
        for kind, ast in pending:
            if kind == "space":
                names.append(ast.name)
                continue
            if ast.space not in self.spaces:
                raise DSLError(f"{kind} {ast.name} refers to unknown space {ast.space!r}",
                               source=where)
            sp = self.spaces[ast.space]
            try:
                obj = resolve_spec(ast, sp) if kind == "spec" else resolve_prog(ast, sp)
            except DSLError as e:
                raise DSLError(e.message, e.line, e.col, where) from None
            self._add(kind, self.specs if kind == "spec" else self.progs, obj, where)
            names.append(ast.name)
        return names

    def load(self, path: str | PathLike) -> list[str]:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise DSLError(e.strerror or "cannot read file", source=str(path)) from None
        return self.load_text(text, str(path))

    def spec(self, name: str) -> SpecDef:
        try:
            return self.specs[name]
        except KeyError:
            raise DSLError(f"unknown spec {name!r}") from None

    def prog(self, name: str) -> ProgramDef:
        try:
            return self.progs[name]
        except KeyError:
            raise DSLError(f"unknown program {name!r}") from None


def load_files(*paths: str | PathLike) -> Workspace:
    ws = Workspace()
    for p in paths:
        ws.load(p)
    return ws
