"""Small shared helpers for deterministic JSON and JSONL input/output.

All writers in this package emit canonical JSON (sorted keys, fixed
separators, UTF-8 without escaping) so that identical inputs produce
byte-identical files on every platform.
"""

from __future__ import annotations

import hashlib
import json
import os
from collections.abc import Iterable, Iterator
from pathlib import Path
from typing import Any

from .errors import DataError

__all__ = [
    "canonical_dumps",
    "read_json",
    "write_json",
    "iter_jsonl",
    "write_jsonl",
    "sha256_file",
]


def canonical_dumps(obj: Any) -> str:
    """Serialize *obj* to a canonical single-line JSON string."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def read_json(path: str | Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    try:
        with open(path, encoding="utf-8") as handle:
            return json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc


def write_json(path: str | Path, obj: Any) -> None:
    """Write canonical JSON atomically (write to a sibling, then rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as handle:
        handle.write(canonical_dumps(obj))
        handle.write("\n")
    os.replace(tmp, path)


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield ``(line_number, parsed_object)`` for each non-empty line.

    Line numbers are 1-based so error messages can point at the offending
    line directly.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def write_jsonl(path: str | Path, records: Iterable[Any]) -> int:
    """Write one canonical JSON object per line; return the record count."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    count = 0
    with open(tmp, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(canonical_dumps(record))
            handle.write("\n")
            count += 1
    os.replace(tmp, path)
    return count


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
