"""Tokenizer shared by the DDL, rule and query languages."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator, Optional

from twq.errors import DslSyntaxError

QUOTES = {"'": "'", '"': '"', "«": "»"}
# longest first
PUNCT = ("::", "<=", ">=", "!=", "<>", "&&", "||",
         "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "<", ">", "=", "^", "-", "!")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | number | string | punct | eof
    text: str
    value: Any
    line: int
    col: int

    def is_(self, *texts: str) -> bool:
        return self.kind in ("punct", "ident") and self.text in texts

    def is_word(self, *words: str) -> bool:
        return self.kind == "ident" and self.text.lower() in words


def _ident_char(c: str, first: bool) -> bool:
    if c == "_" or c.isalpha():
        return True
    return not first and c.isdigit()


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def adv(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line, col = line + 1, 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c.isspace():
            adv(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                adv(1)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise DslSyntaxError("unterminated comment", line, col)
            adv(end + 2 - i)
            continue
        start_line, start_col = line, col
        if c in QUOTES:
            close = QUOTES[c]
            end = text.find(close, i + 1)
            if end < 0:
                raise DslSyntaxError("unterminated string", line, col)
            body = text[i + 1:end]
            out.append(Token("string", text[i:end + 1], body.strip() if c == "«" else body,
                             start_line, start_col))
            adv(end + 1 - i)
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            is_float = j + 1 < n and text[j] == "." and text[j + 1].isdigit()
            if is_float:
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            raw = text[i:j]
            out.append(Token("number", raw, float(raw) if is_float else int(raw), start_line, start_col))
            adv(j - i)
            continue
        if _ident_char(c, True):
            j = i + 1
            while j < n and _ident_char(text[j], False):
                j += 1
            out.append(Token("ident", text[i:j], text[i:j], start_line, start_col))
            adv(j - i)
            continue
        # `=<«x»` is typesetting noise for `=`
        if text.startswith("=<", i):
            k = i + 2
            while k < n and text[k] in " \t":
                k += 1
            if k < n and text[k] in QUOTES:
                out.append(Token("punct", "=", "=", start_line, start_col))
                adv(2)
                continue
        for p in PUNCT:
            if text.startswith(p, i):
                out.append(Token("punct", p, p, start_line, start_col))
                adv(len(p))
                break
        else:
            raise DslSyntaxError(f"unexpected character {c!r}", line, col)
    out.append(Token("eof", "", None, line, col))
    return out


class TokenStream:
    """Cursor over tokens with the usual peek/expect helpers."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.pos += 1
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    def error(self, message: str, tok: Optional[Token] = None) -> DslSyntaxError:
        tok = tok or self.peek()
        found = tok.text or "end of input"
        return DslSyntaxError(f"{message} (found {found!r})", tok.line, tok.col)

    def accept(self, *texts: str) -> Optional[Token]:
        if self.peek().kind in ("punct",) and self.peek().text in texts:
            return self.next()
        return None

    def accept_word(self, *words: str) -> Optional[Token]:
        if self.peek().is_word(*words):
            return self.next()
        return None

    def expect(self, text: str) -> Token:
        tok = self.accept(text)
        if tok is None:
            raise self.error(f"expected {text!r}")
        return tok

    def expect_word(self, *words: str) -> Token:
        tok = self.accept_word(*words)
        if tok is None:
            raise self.error(f"expected {' or '.join(words)}")
        return tok

    def ident(self, what: str = "identifier") -> str:
        tok = self.peek()
        if tok.kind != "ident":
            raise self.error(f"expected {what}")
        self.pos += 1
        return tok.text

    def number(self, what: str = "number") -> int:
        tok = self.peek()
        if tok.kind != "number" or not isinstance(tok.value, int):
            raise self.error(f"expected {what}")
        self.pos += 1
        return tok.value

    def string(self, what: str = "string") -> str:
        tok = self.peek()
        if tok.kind != "string":
            raise self.error(f"expected {what}")
        self.pos += 1
        return tok.value

    def iter_until(self, close: str, sep: str = ",") -> Iterator[None]:
        """Yield once per list item until ``close`` is consumed."""
        if self.accept(close):
            return
        while True:
            yield
            if self.accept(close):
                return
            self.expect(sep)
