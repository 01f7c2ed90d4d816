"""In-memory form of a parsed VarDL file."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..errors import UnresolvedReference

DECL_KINDS = ("process", "option", "context", "cepc", "cepc-config", "rdr",
              "repertoire", "features", "stereotypes")


@dataclass(frozen=True)
class Decl:
    kind: str
    name: str
    value: object
    span: object = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Document:
    """Local declarations in source order, plus declarations pulled in by imports.

    Equality looks at imports and local declarations only; imported content
    is reachable through the lookup helpers but is not part of the document.
    """

    decls: tuple = ()
    imports: tuple = ()
    scope: tuple = field(default=(), compare=False, repr=False)
    file: str = field(default="<string>", compare=False)
    base_name: Optional[str] = None

    def local(self, kind: str) -> list:
        return [d.value for d in self.decls if d.kind == kind]

    def visible(self, kind: str) -> list:
        return self.local(kind) + [d.value for d in self.scope if d.kind == kind]

    def find(self, kind: str, name: str) -> Optional[object]:
        for d in self.decls + self.scope:
            if d.kind == kind and d.name == name:
                return d.value
        return None

    def get(self, kind: str, name: str):
        value = self.find(kind, name)
        if value is None:
            raise UnresolvedReference(name, what=kind)
        return value

    def names(self, kind: str) -> list:
        return [d.name for d in self.decls if d.kind == kind]

    @property
    def processes(self) -> list:
        return self.local("process")

    @property
    def options(self) -> list:
        return self.local("option")

    @property
    def contexts(self) -> list:
        return self.local("context")

    @property
    def base(self):
        """The process named by a ``base`` statement, else the first local
        process, else the first imported one."""
        if self.base_name is not None:
            return self.get("process", self.base_name)
        found = self.visible("process")
        if not found:
            raise UnresolvedReference("base process", what="declaration")
        return found[0]
