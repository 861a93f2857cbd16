"""Source file handling: content, line index and position math."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path


@dataclass(frozen=True)
class SourceFile:
    path: str
    content: str
    line_offsets: tuple[int, ...] = field(default=())

    @staticmethod
    def from_text(content: str, path: str = "<memory>") -> "SourceFile":
        offsets = [0]
        for i, ch in enumerate(content):
            if ch == "\n":
                offsets.append(i + 1)
        return SourceFile(path=path, content=content, line_offsets=tuple(offsets))

    @staticmethod
    def from_path(path: str | Path) -> "SourceFile":
        text = Path(path).read_text(encoding="utf-8")
        return SourceFile.from_text(text, path=str(path))

    def position(self, offset: int) -> tuple[int, int]:
        """(1-based line, 1-based column) for a character offset."""
        lo, hi = 0, len(self.line_offsets) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_offsets[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return (lo + 1, offset - self.line_offsets[lo] + 1)

    @property
    def line_count(self) -> int:
        return len(self.line_offsets)
