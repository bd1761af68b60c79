"""Append-only line-delimited JSON archives.

Every pipeline stage persists its records as one JSON object per line.
Files are append-only with a single-writer contract; readers may scan a
file concurrently with the writer because lines are flushed whole.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator


def read_jsonl(path: str | Path) -> Iterator[dict]:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def append_jsonl(path: str | Path, obj: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, sort_keys=True) + "\n")


def write_jsonl(path: str | Path, objs: Iterable[dict]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for obj in objs:
            fh.write(json.dumps(obj, sort_keys=True) + "\n")


class Archive:
    """Append-only JSONL archive indexed by a key field.

    Existing lines are loaded into the index at construction; appending a
    key that is already present is rejected (records are immutable once
    written).
    """

    def __init__(self, path: str | Path, key_field: str = "cache_key"):
        self.path = Path(path)
        self.key_field = key_field
        self._index: dict[str, dict] = {}
        if self.path.exists():
            for obj in read_jsonl(self.path):
                self._index[obj[self.key_field]] = obj

    def __len__(self) -> int:
        return len(self._index)

    def has(self, key: str) -> bool:
        return key in self._index

    def get(self, key: str) -> dict:
        return self._index[key]

    def records(self) -> list[dict]:
        return list(self._index.values())

    def append(self, obj: dict) -> None:
        key = obj[self.key_field]
        if key in self._index:
            raise ValueError(f"archive already holds record {key!r}")
        append_jsonl(self.path, obj)
        self._index[key] = obj
