"""Relaxed literal parser for model-emitted tool-call blocks.

Accepts strict JSON plus the relaxations models actually produce: single-quoted
strings, Python-style True/False/None constants, trailing commas, and a leading
or trailing code fence. Ellipsis placeholders are rejected with a failure type
distinct from syntax errors so reward layers can zero them out explicitly.

The accepted grammar is documented in docs/relaxed_grammar.md; this module and
that file must agree byte-for-byte on acceptance.
"""

from __future__ import annotations

from typing import Any

ESCAPES = {
    '"': '"',
    "'": "'",
    "\\": "\\",
    "/": "/",
    "b": "\b",
    "f": "\f",
    "n": "\n",
    "r": "\r",
    "t": "\t",
}

CONSTANTS = {
    "true": True,
    "false": False,
    "null": None,
    "True": True,
    "False": False,
    "None": None,
}

ELLIPSIS_CHAR = "…"


class RelaxedParseError(ValueError):
    """Base failure; offset is a byte offset into the parsed text."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class RelaxedSyntaxError(RelaxedParseError):
    pass


class PlaceholderError(RelaxedParseError):
    pass


def strip_code_fence(text: str) -> str:
    """Remove one leading/trailing triple-backtick fence, info string included."""
    stripped = text.strip()
    if not stripped.startswith("```"):
        return text
    lines = stripped.splitlines()
    body = lines[1:]
    if body and body[-1].strip() == "```":
        body = body[:-1]
    return "\n".join(body)


def _is_dots_placeholder(value: str) -> bool:
    trimmed = value.strip()
    if ELLIPSIS_CHAR in trimmed:
        return True
    return len(trimmed) >= 2 and set(trimmed) == {"."}


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def _byte_offset(self, pos: int | None = None) -> int:
        at = self.pos if pos is None else pos
        return len(self.text[:at].encode("utf-8"))

    def _fail(self, message: str, pos: int | None = None) -> None:
        raise RelaxedSyntaxError(message, self._byte_offset(pos))

    def _placeholder(self, pos: int) -> None:
        raise PlaceholderError("ellipsis placeholder", self._byte_offset(pos))

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t\n\r":
            self.pos += 1

    def _peek(self) -> str:
        if self.pos >= len(self.text):
            self._fail("unexpected end of input")
        return self.text[self.pos]

    def parse(self) -> Any:
        self._skip_ws()
        value = self._value()
        self._skip_ws()
        if self.pos != len(self.text):
            self._fail("trailing content after value")
        return value

    def _value(self) -> Any:
        ch = self._peek()
        if ch == ".":
            start = self.pos
            while self.pos < len(self.text) and self.text[self.pos] == ".":
                self.pos += 1
            if self.pos - start >= 2:
                self._placeholder(start)
            self._fail("unexpected character '.'", start)
        if ch == ELLIPSIS_CHAR:
            self._placeholder(self.pos)
        if ch == "{":
            return self._object()
        if ch == "[":
            return self._array()
        if ch in "\"'":
            return self._string()
        if ch == "-" or ch.isdigit():
            return self._number()
        if ch.isalpha():
            return self._constant()
        self._fail(f"unexpected character {ch!r}")

    def _object(self) -> dict[str, Any]:
        result: dict[str, Any] = {}
        self.pos += 1
        self._skip_ws()
        if self._peek() == "}":
            self.pos += 1
            return result
        while True:
            self._skip_ws()
            ch = self._peek()
            if ch == ".":
                start = self.pos
                while self.pos < len(self.text) and self.text[self.pos] == ".":
                    self.pos += 1
                if self.pos - start >= 2:
                    self._placeholder(start)
                self._fail("object keys must be strings", start)
            if ch not in "\"'":
                self._fail("object keys must be strings")
            key = self._string()
            self._skip_ws()
            if self._peek() != ":":
                self._fail("expected ':' after object key")
            self.pos += 1
            self._skip_ws()
            result[key] = self._value()
            self._skip_ws()
            ch = self._peek()
            if ch == ",":
                self.pos += 1
                self._skip_ws()
                if self._peek() == "}":
                    self.pos += 1
                    return result
                continue
            if ch == "}":
                self.pos += 1
                return result
            self._fail("expected ',' or '}' in object")

    def _array(self) -> list[Any]:
        result: list[Any] = []
        self.pos += 1
        self._skip_ws()
        if self._peek() == "]":
            self.pos += 1
            return result
        while True:
            self._skip_ws()
            result.append(self._value())
            self._skip_ws()
            ch = self._peek()
            if ch == ",":
                self.pos += 1
                self._skip_ws()
                if self._peek() == "]":
                    self.pos += 1
                    return result
                continue
            if ch == "]":
                self.pos += 1
                return result
            self._fail("expected ',' or ']' in array")

    def _string(self) -> str:
        quote = self.text[self.pos]
        start = self.pos
        self.pos += 1
        parts: list[str] = []
        while True:
            if self.pos >= len(self.text):
                self._fail("unterminated string", start)
            ch = self.text[self.pos]
            if ch == quote:
                self.pos += 1
                value = "".join(parts)
                if _is_dots_placeholder(value):
                    self._placeholder(start)
                return value
            if ch == "\\":
                self.pos += 1
                if self.pos >= len(self.text):
                    self._fail("unterminated escape", start)
                esc = self.text[self.pos]
                if esc == "u":
                    code = self._hex_escape()
                    # recombine a surrogate pair the way strict JSON does
                    if 0xD800 <= code <= 0xDBFF and self.text[self.pos : self.pos + 2] == "\\u":
                        save = self.pos
                        self.pos += 1
                        low = self._hex_escape()
                        if 0xDC00 <= low <= 0xDFFF:
                            code = 0x10000 + ((code - 0xD800) << 10) + (low - 0xDC00)
                        else:
                            self.pos = save
                    parts.append(chr(code))
                    continue
                if esc not in ESCAPES:
                    self._fail(f"unknown escape \\{esc}", self.pos - 1)
                parts.append(ESCAPES[esc])
                self.pos += 1
                continue
            parts.append(ch)
            self.pos += 1

    def _hex_escape(self) -> int:
        # self.pos sits on the 'u'; consume it plus four hex digits
        hex_digits = self.text[self.pos + 1 : self.pos + 5]
        if len(hex_digits) != 4 or any(c not in "0123456789abcdefABCDEF" for c in hex_digits):
            self._fail("invalid \\u escape", self.pos - 1)
        self.pos += 5
        return int(hex_digits, 16)

    def _number(self) -> int | float:
        start = self.pos
        text = self.text
        if text[self.pos] == "-":
            self.pos += 1
        if self.pos >= len(text) or not text[self.pos].isdigit():
            self._fail("malformed number", start)
        if text[self.pos] == "0":
            self.pos += 1
        else:
            while self.pos < len(text) and text[self.pos].isdigit():
                self.pos += 1
        is_float = False
        if self.pos < len(text) and text[self.pos] == ".":
            is_float = True
            self.pos += 1
            if self.pos >= len(text) or not text[self.pos].isdigit():
                self._fail("malformed number", start)
            while self.pos < len(text) and text[self.pos].isdigit():
                self.pos += 1
        if self.pos < len(text) and text[self.pos] in "eE":
            is_float = True
            self.pos += 1
            if self.pos < len(text) and text[self.pos] in "+-":
                self.pos += 1
            if self.pos >= len(text) or not text[self.pos].isdigit():
                self._fail("malformed number", start)
            while self.pos < len(text) and text[self.pos].isdigit():
                self.pos += 1
        literal = text[start : self.pos]
        return float(literal) if is_float else int(literal)

    def _constant(self) -> Any:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isalpha():
            self.pos += 1
        word = self.text[start : self.pos]
        if word in CONSTANTS:
            return CONSTANTS[word]
        self._fail(f"unknown constant {word!r}", start)


def parse_relaxed(text: str) -> Any:
    """Parse one relaxed-literal value; see module docstring for the dialect."""
    return _Parser(strip_code_fence(text)).parse()
