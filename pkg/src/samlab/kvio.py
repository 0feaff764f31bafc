"""Flat key-value text files.

Both the loss specification files and the experiment configuration files
use the same minimal line format:

    # comment (also after values)
    key = value
    key = value          # keys may repeat; order is preserved

Keys are case-sensitive identifiers; values are arbitrary text with
surrounding whitespace stripped.
"""

from pathlib import Path

__all__ = ["parse_kv_text", "read_kv_file", "format_kv"]


def parse_kv_text(text: str) -> list[tuple[str, str]]:
    """Parse key-value lines into an ordered list of (key, value) pairs."""
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        pairs.append((key, value.strip()))
    return pairs


def read_kv_file(path) -> list[tuple[str, str]]:
    return parse_kv_text(Path(path).read_text())


def format_kv(pairs) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs)
