"""Lexer for experiment configuration files.

    # comment
    [experiment]
    name = variance-decay
    [parameters]
    t_grid = 0.5, 1.0     # trailing comments are allowed after whitespace

A value runs from the first non-blank character after ``=`` to the end of
the line or the start of a trailing comment.
"""

from .tokens import Token, TokenType


class LexerError(Exception):
    def __init__(self, message: str, line: int, col: int):
        self.line = line
        self.col = col
        super().__init__(f"{message} at {line}:{col}")


def _is_key_start(ch: str) -> bool:
    return ch.isalpha() or ch == '_'


def _is_key_char(ch: str) -> bool:
    return ch.isalnum() or ch in ('_', '-')


class Lexer:
    def __init__(self, source: str, filename: str = "<config>"):
        self.source = source
        self.filename = filename
        self.pos = 0
        self.line = 1
        self.col = 1
        self.tokens: list[Token] = []

    def tokenize(self) -> list[Token]:
        while self.pos < len(self.source):
            self._skip_blanks()
            if self.pos >= len(self.source):
                break
            ch = self._peek()
            if ch == '#':
                self._skip_comment()
            elif ch == '\n':
                self._emit(TokenType.NEWLINE, "\n", self.line, self.col)
                self._advance()
            elif ch == '[':
                self._read_section()
            elif ch == '=':
                self._emit(TokenType.EQUALS, "=", self.line, self.col)
                self._advance()
                self._read_value()
            elif _is_key_start(ch):
                self._read_key()
            else:
                raise LexerError(f"Unexpected character '{ch}'", self.line, self.col)

        self.tokens.append(Token(TokenType.EOF, "", self.line, self.col))
        return self.tokens

    # --- Character helpers ---

    def _peek(self, offset: int = 0) -> str:
        pos = self.pos + offset
        if pos < len(self.source):
            return self.source[pos]
        return '\0'

    def _advance(self) -> str:
        ch = self.source[self.pos]
        self.pos += 1
        if ch == '\n':
            self.line += 1
            self.col = 1
        else:
            self.col += 1
        return ch

    def _at_line_end(self) -> bool:
        return self.pos >= len(self.source) or self._peek() == '\n'

    def _emit(self, token_type: TokenType, value: str, line: int, col: int):
        self.tokens.append(Token(token_type, value, line, col))

    def _skip_blanks(self):
        while self.pos < len(self.source) and self._peek() in (' ', '\t', '\r'):
            self._advance()

    def _skip_comment(self):
        while not self._at_line_end():
            self._advance()

    # --- Tokens ---

    def _read_section(self):
        line, col = self.line, self.col
        self._advance()  # [
        self._skip_blanks()
        start = self.pos
        while not self._at_line_end() and self._peek() != ']':
            self._advance()
        if self._at_line_end():
            raise LexerError("Unterminated section header, expected ']'", line, col)
        name = self.source[start:self.pos].strip()
        self._advance()  # ]
        if not name:
            raise LexerError("Empty section name", line, col)
        self._emit(TokenType.SECTION, name, line, col)

    def _read_key(self):
        line, col = self.line, self.col
        start = self.pos
        while _is_key_char(self._peek()):
            self._advance()
        self._emit(TokenType.KEY, self.source[start:self.pos], line, col)

    def _read_value(self):
        self._skip_blanks()
        line, col = self.line, self.col
        chars = []
        while not self._at_line_end():
            ch = self._peek()
            # '#' opens a comment only after whitespace, so "a#b" stays one value.
            if ch == '#' and (not chars or chars[-1] in (' ', '\t')):
                self._skip_comment()
                break
            chars.append(self._advance())
        self._emit(TokenType.VALUE, "".join(chars).rstrip(), line, col)
