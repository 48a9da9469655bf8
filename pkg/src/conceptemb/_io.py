from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, TextIO


class FormatError(ValueError):
    """Malformed or contract-violating input file content."""

    def __init__(self, message: str, path: str | os.PathLike | None = None, line: int | None = None):
        self.path = None if path is None else str(path)
        self.line = line
        where = ""
        if self.path is not None:
            where = self.path + (f":{line}" if line is not None else "") + ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)


def iter_data_lines(path: str | os.PathLike, comments: bool = False) -> Iterator[tuple[int, str]]:
    """Yield ``(line_number, line)`` pairs, newline stripped, blank lines skipped."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip():
                continue
            if comments and line.lstrip().startswith("#"):
                continue
            yield lineno, line


@contextmanager
def atomic_write(path: str | os.PathLike) -> Iterator[TextIO]:
    """Write to a temp file next to ``path`` and rename on success.

    On any exception the temp file is removed and ``path`` is left untouched.
    """
    target = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", suffix=".tmp", dir=target.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, target)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
