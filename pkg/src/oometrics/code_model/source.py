"""Source text helpers: decoding and effective line counting."""

from __future__ import annotations

import re
from pathlib import Path

# Order matters: text blocks before plain strings, comments before operators.
_TOKEN = re.compile(
    r'"""(?:\\.|[^\\])*?"""'
    r'|"(?:\\.|[^"\\\n])*"'
    r"|'(?:\\.|[^'\\\n])*'"
    r"|//[^\n]*"
    r"|/\*.*?(?:\*/|\Z)",
    re.DOTALL,
)


def read_source(path: Path) -> tuple[str, str]:
    """Return ``(text, encoding)``; UTF-8 first, Latin-1 as the fallback."""
    raw = path.read_bytes()
    try:
        return raw.decode("utf-8-sig"), "utf-8"
    except UnicodeDecodeError:
        return raw.decode("latin-1"), "latin-1"


def physical_line_count(text: str) -> int:
    if not text:
        return 0
    return text.count("\n") + (0 if text.endswith("\n") else 1)


def strip_comments(text: str) -> str:
    """Blank out comment text, keeping newlines so line numbers survive."""

    def repl(m: re.Match[str]) -> str:
        tok = m.group(0)
        if tok.startswith("/"):
            return re.sub(r"[^\n]", " ", tok)
        return tok

    return _TOKEN.sub(repl, text)


def code_lines(text: str) -> frozenset[int]:
    """1-based numbers of lines holding something other than comments/whitespace."""
    stripped = strip_comments(text)
    return frozenset(i for i, line in enumerate(stripped.split("\n"), 1) if line.strip())


def effective_loc(lines_with_code: frozenset[int], start_line: int, end_line: int) -> int:
    return sum(1 for n in range(start_line, end_line + 1) if n in lines_with_code)


def count_effective_loc(text: str, start_line: int = 1, end_line: int | None = None) -> int:
    """Non-blank, non-comment-only lines of ``text`` within an inclusive line range."""
    if end_line is None:
        end_line = physical_line_count(text)
    return effective_loc(code_lines(text), start_line, end_line)
