"""Tokenizer for the supported .rules subset.

Keywords are recognized case-insensitively at parse time; the lexer only
classifies shapes. ``//`` and ``/* */`` comments and whitespace are skipped
but accounted for, so every input character belongs to exactly one token or
skipped span.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .source import SourceFile


class TokenKind(Enum):
    STRING = "string"
    TIME = "time"  # HH:MM literal
    NUMBER = "number"
    IDENT = "ident"
    OP = "op"  # == != <= >= < >
    ANDAND = "andand"
    LPAREN = "lparen"
    RPAREN = "rparen"
    LBRACE = "lbrace"
    RBRACE = "rbrace"
    COMMA = "comma"
    DOT = "dot"
    ERROR = "error"  # unterminated string or stray character


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    line: int  # 1-based
    col: int  # 1-based
    offset: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<line_comment>//[^\n]*)
  | (?P<block_comment>/\*.*?\*/)
  | (?P<unterminated_comment>/\*.*)
  | (?P<string>"[^"\n]*")
  | (?P<unterminated_string>"[^"\n]*)
  | (?P<time>\d{1,2}:\d{2})
  | (?P<number>[+-]?(\d+(\.\d*)?|\.\d+))
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|<|>)
  | (?P<andand>&&)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<lbrace>\{)
  | (?P<rbrace>\})
  | (?P<comma>,)
  | (?P<dot>\.)
  | (?P<stray>.)
    """,
    re.VERBOSE | re.DOTALL,
)

_GROUP_KINDS = {
    "string": TokenKind.STRING,
    "time": TokenKind.TIME,
    "number": TokenKind.NUMBER,
    "ident": TokenKind.IDENT,
    "op": TokenKind.OP,
    "andand": TokenKind.ANDAND,
    "lparen": TokenKind.LPAREN,
    "rparen": TokenKind.RPAREN,
    "lbrace": TokenKind.LBRACE,
    "rbrace": TokenKind.RBRACE,
    "comma": TokenKind.COMMA,
    "dot": TokenKind.DOT,
}


def tokenize(source: SourceFile) -> list[Token]:
    """Lex the whole file. Never raises; problems become ERROR tokens."""
    tokens: list[Token] = []
    pos = 0
    content = source.content
    while pos < len(content):
        m = _TOKEN_RE.match(content, pos)
        assert m is not None  # the stray group matches any character
        group = m.lastgroup
        text = m.group()
        if group in ("ws", "line_comment", "block_comment", "unterminated_comment"):
            pos = m.end()
            continue
        line, col = source.position(pos)
        if group in ("unterminated_string", "stray"):
            tokens.append(Token(TokenKind.ERROR, text, line, col, pos))
        else:
            tokens.append(Token(_GROUP_KINDS[group], text, line, col, pos))
        pos = m.end()
    return tokens


def is_keyword(token: Token, word: str) -> bool:
    return token.kind is TokenKind.IDENT and token.text.lower() == word


def rule_block_starts(tokens: list[Token]) -> list[int]:
    """Indices of `rule "` block starts (keyword followed by a string lexeme).

    A rule keyword followed by an unterminated string still counts as a block
    start so that every `rule "` occurrence is either parsed or diagnosed.
    """
    starts = []
    for i, tok in enumerate(tokens):
        if not is_keyword(tok, "rule") or i + 1 >= len(tokens):
            continue
        nxt = tokens[i + 1]
        if nxt.kind is TokenKind.STRING or (nxt.kind is TokenKind.ERROR and nxt.text.startswith('"')):
            starts.append(i)
    return starts
