"""Tokenizer for VarDL source text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .errors import BpvarError


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


class VarDLSyntaxError(BpvarError):
    def __init__(self, message: str, span: SourceSpan, expected=()):
        self.span = span
        self.expected = tuple(expected)
        hint = f" (expected {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{span}: {message}{hint}")

    @property
    def line(self) -> int:
        return self.span.line


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT | STRING | PUNCT | EOF
    text: str
    span: SourceSpan

    def __str__(self):
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return f"string {self.text!r}"
        return repr(self.text)


_PUNCT = ("->", "!=", "{", "}", "(", ")", ";", ",", ":", ".", "=")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ESCAPES = {"n": "\n", "t": "\t", "\\": "\\", '"': '"', "'": "'"}


def tokenize(text: str, file: str = "<string>") -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span() -> SourceSpan:
        return SourceSpan(file, line, col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i, line, col = i + 1, line + 1, 1
            continue
        if ch in " \t\r":
            i, col = i + 1, col + 1
            continue
        if ch == "#" or text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "\"'":
            start = span()
            quote = ch
            i, col = i + 1, col + 1
            buf = []
            while True:
                if i >= n or text[i] == "\n":
                    raise VarDLSyntaxError("unterminated string", start)
                c = text[i]
                if c == "\\":
                    if i + 1 >= n or text[i + 1] not in _ESCAPES:
                        raise VarDLSyntaxError("bad escape sequence", SourceSpan(file, line, col))
                    buf.append(_ESCAPES[text[i + 1]])
                    i, col = i + 2, col + 2
                    continue
                i, col = i + 1, col + 1
                if c == quote:
                    break
                buf.append(c)
            tokens.append(Token("STRING", "".join(buf), start))
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            if word == "cepc" and text.startswith("-config", m.end()):
                word = "cepc-config"
            tokens.append(Token("IDENT", word, span()))
            i += len(word)
            col += len(word)
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("PUNCT", p, span()))
                i += len(p)
                col += len(p)
                break
        else:
            raise VarDLSyntaxError(f"unexpected character {ch!r}", span())
    tokens.append(Token("EOF", "", span()))
    return tokens


class TokenStream:
    """Cursor over a token list with expectation-reporting helpers."""

    def __init__(self, tokens: list):
        self.tokens = tokens
        self.pos = 0

    @property
    def peek(self) -> Token:
        return self.tokens[self.pos]

    def lookahead(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek
        return tok.kind in ("IDENT", "PUNCT") and tok.text in texts

    def accept(self, *texts: str) -> Optional[Token]:
        if self.at(*texts):
            return self.next()
        return None

    def fail(self, message: str, *expected: str):
        tok = self.peek
        raise VarDLSyntaxError(f"{message}, found {tok}", tok.span, expected)

    def expect(self, *texts: str) -> Token:
        if self.at(*texts):
            return self.next()
        self.fail("unexpected token", *(repr(t) for t in texts))

    def ident(self, what: str = "identifier") -> Token:
        if self.peek.kind == "IDENT":
            return self.next()
        self.fail("unexpected token", what)

    def string(self, what: str = "string") -> Token:
        if self.peek.kind == "STRING":
            return self.next()
        self.fail("unexpected token", what)

    def name_or_string(self, what: str = "name or string") -> Token:
        if self.peek.kind in ("IDENT", "STRING"):
            return self.next()
        self.fail("unexpected token", what)


def quote(text: str) -> str:
    """Double-quoted VarDL string literal for ``text``."""
    body = (text.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\t", "\\t"))
    return f'"{body}"'
