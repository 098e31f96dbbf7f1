import re
from dataclasses import dataclass
from typing import List, Optional

from domain.ast import SourceLocation
from domain.exceptions import LexError


KEYWORDS = {
    "uint8", "int8", "uint16", "int16", "void", "volatile",
    "if", "else", "while", "do", "for", "return", "break", "continue", "ISR",
}

OPERATORS = [
    "<<=", ">>=",
    "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
    "<<", ">>", "<=", ">=", "==", "!=", "&&", "||",
    "+", "-", "*", "/", "%", "<", ">", "=", "!", "~", "&", "|", "^",
    "(", ")", "{", "}", "[", "]", ",", ":", "@", "?",
]

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<line_comment>//[^\n]*)"
    r"|(?P<block_comment>/\*)"
    r"|(?P<hex>0[xX][0-9a-fA-F]+)"
    r"|(?P<bin>0[bB][01]+)"
    r"|(?P<dec>[0-9]+)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<char>')"
    r"|(?P<string>\")"
    r"|(?P<semi>;)"
    r"|(?P<op>" + "|".join(re.escape(op) for op in OPERATORS) + r")"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    loc: SourceLocation
    value: Optional[int] = None

    def __str__(self) -> str:
        if self.kind == "int":
            return f"int-lit({self.value})"
        if self.kind == "semi":
            return "semi"
        return f"{self.kind}({self.text})"


def tokenize(source: str, file: str = "<input>") -> List[Token]:
    """
    Split Mini-C source into tokens with line/column positions.
    Whitespace and comments are dropped; no end-of-file token is appended.
    """
    tokens: List[Token] = []
    pos = 0
    line = 1
    line_start = 0

    def location(start: int, end: int) -> SourceLocation:
        return SourceLocation(line, start - line_start + 1, start, end, file)

    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            raise LexError(f"illegal character {source[pos]!r}", location(pos, pos + 1))
        kind = match.lastgroup
        text = match.group()
        end = match.end()

        if kind == "block_comment":
            close = source.find("*/", end)
            if close < 0:
                raise LexError("unterminated comment", location(pos, len(source)))
            end = close + 2
            text = source[pos:end]
        elif kind == "char":
            close = source.find("'", end)
            if close < 0 or "\n" in source[end:close]:
                raise LexError("unterminated character literal", location(pos, len(source)))
            body = source[end:close]
            if len(body) != 1:
                raise LexError(f"invalid character literal {body!r}", location(pos, close + 1))
            tokens.append(Token("int", source[pos:close + 1], location(pos, close + 1), ord(body)))
            end = close + 1
        elif kind == "string":
            close = source.find('"', end)
            if close < 0 or "\n" in source[end:close]:
                raise LexError("unterminated string literal", location(pos, len(source)))
            raise LexError("string literals are not part of Mini-C", location(pos, close + 1))
        elif kind in ("hex", "bin", "dec"):
            base = {"hex": 16, "bin": 2, "dec": 10}[kind]
            digits = text[2:] if base != 10 else text
            tokens.append(Token("int", text, location(pos, end), int(digits, base)))
        elif kind == "ident":
            token_kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(token_kind, text, location(pos, end)))
        elif kind in ("semi", "op"):
            tokens.append(Token(kind, text, location(pos, end)))

        # advance line bookkeeping over whatever was consumed
        consumed = source[pos:end]
        newlines = consumed.count("\n")
        if newlines:
            line += newlines
            line_start = pos + consumed.rfind("\n") + 1
        pos = end
    return tokens
