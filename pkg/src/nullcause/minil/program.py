"""A set of compilation units with cross-unit class resolution."""

from __future__ import annotations

from pathlib import Path

from . import ast as A
from .errors import MinilNameError, ParseError
from .parser import _err_at, parse


class Program:
    def __init__(self, units):
        self.units: list[A.CompilationUnit] = sorted(units, key=lambda u: u.class_id)
        self.by_id = {u.class_id: u for u in self.units}
        if len(self.by_id) != len(self.units):
            raise ParseError("duplicate class_id in program")
        self.classes: dict[str, A.ClassDecl] = {}
        for unit in self.units:
            for cls in unit.classes:
                if cls.name in self.classes:
                    raise _err_at(unit, cls.name_range, f"duplicate class {cls.name}")
                self.classes[cls.name] = cls
        for unit in self.units:
            for node in unit.walk():
                if isinstance(node, A.NewObject):
                    cls = self.classes.get(node.class_name)
                    if cls is None:
                        raise _err_at(unit, node.range, f"cannot resolve class {node.class_name}")
                    init = cls.method_named("init")
                    nparams = len(init.params) if init else 0
                    if len(node.args) != nparams:
                        raise _err_at(
                            unit, node.range,
                            f"new {node.class_name} expects {nparams} argument(s)", ParseError,
                        )

    @classmethod
    def from_sources(cls, sources: dict[str, str]) -> "Program":
        return cls(parse(text, cid) for cid, text in sources.items())

    @classmethod
    def from_dir(cls, directory, project: str | None = None) -> "Program":
        """Load every ``*.mnl`` file below ``directory``; class_id is the file stem."""
        directory = Path(directory)
        units = []
        for path in sorted(directory.rglob("*.mnl")):
            rel = path.relative_to(directory).with_suffix("")
            qualified = ".".join(([project] if project else []) + list(rel.parts))
            units.append(parse(path.read_bytes().decode("utf-8"), path.stem, qualified))
        return cls(units)

    def unit(self, class_id: str) -> A.CompilationUnit:
        return self.by_id[class_id]

    def node(self, key: tuple[str, int]) -> A.Node:
        class_id, node_id = key
        return self.by_id[class_id].nodes[node_id]

    def methods(self):
        for unit in self.units:
            for cls in unit.classes:
                for m in cls.methods:
                    yield cls, m

    def tests(self) -> list[tuple[str, A.MethodDecl]]:
        """(test_id, method) in declaration order."""
        return [(f"{cls.name}.{m.name}", m) for cls, m in self.methods() if m.is_test]

    def methods_named(self, name: str) -> list[A.MethodDecl]:
        return [m for _, m in self.methods() if m.name == name]

    def fields_named(self, name: str) -> list[A.FieldDecl]:
        return [f for unit in self.units for c in unit.classes for f in c.fields if f.name == name]


def key_of(node: A.Node) -> tuple[str, int]:
    return (node.range.class_id, node.id)


__all__ = ["Program", "key_of", "MinilNameError"]
