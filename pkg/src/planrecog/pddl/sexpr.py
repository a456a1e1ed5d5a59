"""Tokenizer and s-expression reader that keeps source positions."""
from __future__ import annotations


class PddlError(Exception):
    """Base class for PDDL diagnostics; ``str()`` gives ``file:line:col: msg``."""

    def __init__(self, message: str, line: int = 0, col: int = 0, source: str = "<string>"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.source = source

    def __str__(self) -> str:
        return f"{self.source}:{self.line}:{self.col}: {self.message}"


class PddlSyntaxError(PddlError):
    pass


class UnsupportedFeatureError(PddlError):
    def __init__(self, feature: str, line: int = 0, col: int = 0, source: str = "<string>"):
        super().__init__(f"unsupported PDDL feature '{feature}'", line, col, source)
        self.feature = feature


class PddlSemanticError(PddlError):
    pass


class Sym(str):
    """A lower-cased symbol carrying its source position."""

    line: int
    col: int

    def __new__(cls, text: str, line: int = 0, col: int = 0):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class SList(list):
    line: int = 0
    col: int = 0


def tokenize(text: str, source: str = "<string>"):
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch in "()":
            yield ch, line, col
            i += 1
            col += 1
        else:
            start, start_col = i, col
            while i < n and not text[i].isspace() and text[i] not in "();":
                i += 1
            col += i - start
            yield text[start:i].lower(), line, start_col


def read(text: str, source: str = "<string>") -> SList:
    """Read exactly one top-level s-expression."""
    stack: list[SList] = []
    result = None
    for tok, line, col in tokenize(text, source):
        if result is not None:
            raise PddlSyntaxError("unexpected text after the end of the definition", line, col, source)
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack.append(lst)
        elif tok == ")":
            if not stack:
                raise PddlSyntaxError("unbalanced ')'", line, col, source)
            done = stack.pop()
            if stack:
                stack[-1].append(done)
            else:
                result = done
        else:
            if not stack:
                raise PddlSyntaxError(f"unexpected symbol '{tok}' outside parentheses", line, col, source)
            stack[-1].append(Sym(tok, line, col))
    if stack:
        open_ = stack[-1]
        raise PddlSyntaxError("unterminated '(' (missing ')')", open_.line, open_.col, source)
    if result is None:
        raise PddlSyntaxError("empty input", 1, 1, source)
    return result
