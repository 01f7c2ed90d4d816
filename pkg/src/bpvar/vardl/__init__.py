"""VarDL: textual front-end for process models and their variability."""

from ..lexer import SourceSpan, VarDLSyntaxError
from .document import DECL_KINDS, Decl, Document
from .dot import export_dot
from .parser import load_document, parse_document
from .serialize import serialize, serialize_model

__all__ = [
    "DECL_KINDS", "Decl", "Document", "SourceSpan", "VarDLSyntaxError",
    "export_dot", "load_document", "parse_document", "serialize", "serialize_model",
]
