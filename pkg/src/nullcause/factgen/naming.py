"""Entity naming: one atom per code entity."""

from __future__ import annotations

from collections import defaultdict

from ..minil import ast as A
from ..minil.program import Program, key_of

_PREFIX = {
    A.VarDecl: "v",
    A.Param: "p",
    A.FieldDecl: "f",
    A.MethodDecl: "m",
    A.ClassDecl: "c",
}

BUILTIN_ATOMS = {name: f"m_{name}_0" for name in A.BUILTINS}


class EntityNaming:
    def __init__(self):
        self.atom_of_key: dict[tuple[str, int], str] = {}
        self.key_of_atom: dict[str, tuple[str, int]] = {}
        self.counters: dict[tuple[str, str], int] = defaultdict(int)
        self.expr_counter = 0
        self.tests: dict[str, str] = {}  # test_id -> atom

    def _bind(self, node: A.Node, atom: str) -> None:
        key = key_of(node)
        self.atom_of_key[key] = atom
        self.key_of_atom[atom] = key

    def _declare(self, node: A.Node) -> None:
        prefix = _PREFIX[type(node)]
        self.counters[(prefix, node.name)] += 1
        self._bind(node, f"{prefix}_{node.name}_{self.counters[(prefix, node.name)]}")

    def _expression(self, node: A.Node) -> None:
        self.expr_counter += 1
        self._bind(node, f"expr{self.expr_counter}")

    def atom(self, node: A.Node) -> str | None:
        """Atom of ``node``; a name occurrence maps to its declaration's atom."""
        if isinstance(node, A.SimpleName):
            node = node.decl
        return self.atom_of_key.get(key_of(node))

    def __contains__(self, node: A.Node) -> bool:
        return self.atom(node) is not None

    def node_key(self, atom: str):
        return self.key_of_atom.get(atom)

    def test_atom(self, test_id: str) -> str:
        return self.tests[test_id]

    def as_dict(self) -> dict:
        return {
            "atoms": {f"{k[0]}:{k[1]}": a for k, a in sorted(self.atom_of_key.items())},
            "tests": dict(self.tests),
        }


def assign_atoms(program: Program, covered_lines) -> EntityNaming:
    """Name every declaration with a home and every expression on a covered line."""
    covered = set(covered_lines)
    naming = EntityNaming()

    def on_covered(node: A.Node) -> bool:
        return (node.range.class_id, node.range.start_line) in covered

    referenced = set()
    for unit in program.units:
        for node in unit.walk():
            if isinstance(node, A.SimpleName) and on_covered(node):
                referenced.add(key_of(node.decl))

    for unit in program.units:
        for node in unit.walk():
            if isinstance(node, (A.ClassDecl, A.MethodDecl, A.FieldDecl, A.Param)):
                naming._declare(node)
            elif isinstance(node, A.VarDecl):
                if on_covered(node) or key_of(node) in referenced:
                    naming._declare(node)
            elif isinstance(node, A.Expr) and not isinstance(node, A.SimpleName):
                if on_covered(node):
                    naming._expression(node)

    counts: dict[str, int] = defaultdict(int)
    for test_id, method in program.tests():
        counts[method.name] += 1
        naming.tests[test_id] = f"t_{method.name}_{counts[method.name]}"
    return naming
