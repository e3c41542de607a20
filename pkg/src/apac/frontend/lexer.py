from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator

from .errors import SourceSyntaxError
from .source import SourceFile, SourceSpan

KEYWORDS = frozenset(
    """
    void int long double float bool char unsigned signed short const
    if else while for do switch case default break continue return
    struct class public private protected true false nullptr new delete
    goto try catch throw template typename auto namespace using this static
    inline operator sizeof virtual typedef enum union static_cast
    """.split()
)

TYPE_KEYWORDS = frozenset("void int long double float bool char unsigned signed short".split())

# Longest match first.
PUNCTUATORS = sorted(
    """
    <<= >>= :: -> ++ -- << >> <= >= == != && || += -= *= /= %= &= |= ^=
    { } ( ) [ ] ; , . : ? + - * / % < > = ! & | ^ ~
    """.split(),
    key=len,
    reverse=True,
)

_NUMBER = re.compile(
    r"(?:0[xX][0-9a-fA-F]+|(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)[uUlLfF]*"
)
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


@dataclass(frozen=True)
class Token:
    kind: str  # ident | keyword | number | string | char | punct | directive | eof
    text: str
    start: int
    end: int

    def is_(self, *texts: str) -> bool:
        return self.kind in ("punct", "keyword") and self.text in texts


def _skip_trivia(text: str, i: int) -> int:
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n\f\v":
            i += 1
        elif text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                raise SourceSyntaxError(SourceSpan(i, n), "unterminated comment")
            i = j + 2
        else:
            break
    return i


def _at_line_start(text: str, i: int) -> bool:
    j = i - 1
    while j >= 0 and text[j] in " \t":
        j -= 1
    return j < 0 or text[j] == "\n"


def tokenize(source: SourceFile | str, keep_comments: bool = False) -> list[Token]:
    """Split source text into tokens, dropping whitespace and comments.

    Preprocessor lines become single ``directive`` tokens (line continuations
    included).
    """
    text = source.text if isinstance(source, SourceFile) else source
    tokens: list[Token] = []
    i = 0
    n = len(text)
    while True:
        i = _skip_trivia(text, i)
        if i >= n:
            tokens.append(Token("eof", "", n, n))
            return tokens
        ch = text[i]
        if ch == "#" and _at_line_start(text, i):
            j = i
            while True:
                k = text.find("\n", j)
                if k < 0:
                    j = n
                    break
                if k > 0 and text[k - 1] == "\\":
                    j = k + 1
                    continue
                j = k
                break
            end = j
            while end > i and text[end - 1] in " \t\r":
                end -= 1
            tokens.append(Token("directive", text[i:end], i, end))
            i = j
            continue
        m = _IDENT.match(text, i)
        if m:
            word = m.group()
            kind = "keyword" if word in KEYWORDS else "ident"
            tokens.append(Token(kind, word, i, m.end()))
            i = m.end()
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            m = _NUMBER.match(text, i)
            assert m is not None
            tokens.append(Token("number", m.group(), i, m.end()))
            i = m.end()
            continue
        if ch in "\"'":
            j = i + 1
            while j < n and text[j] != ch:
                if text[j] == "\\":
                    j += 1
                elif text[j] == "\n":
                    break
                j += 1
            if j >= n or text[j] != ch:
                raise SourceSyntaxError(SourceSpan(i, min(j, n)), "unterminated literal")
            tokens.append(Token("string" if ch == '"' else "char", text[i:j + 1], i, j + 1))
            i = j + 1
            continue
        for p in PUNCTUATORS:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, i, i + len(p)))
                i += len(p)
                break
        else:
            raise SourceSyntaxError(SourceSpan(i, i + 1), f"unexpected character {ch!r}")


def token_texts(text: str) -> Iterator[str]:
    """Token texts of ``text`` (comments and whitespace ignored)."""
    for tok in tokenize(text):
        if tok.kind == "eof":
            return
        if tok.kind == "directive":
            # directives compare by their own token stream
            yield "#"
            yield from token_texts(tok.text[1:].replace("\\\n", " "))
            continue
        yield tok.text
