#!/usr/bin/env python3
"""Fetch the assets needed by the fertility acceptance test.

The test measures subword fertility of a 128k byte-level BPE tokenizer on
English and Russian Universal Dependencies treebanks. Those inputs are too
large to vendor, so this script downloads them into tests/assets/fertility/:

  vocab.json   token -> id map extracted from the tokenizer definition
  merges.txt   merge rules, one "left right" pair per line in rank order
  en.conllu    UD_English-EWT test split, pinned release tag
  ru.conllu    UD_Russian-SynTagRus test split, pinned release tag

The tokenizer is published as a single tokenizer.json; the script splits it
into the vocab/merges pair that corpuscraft.bpe.load_bpe reads.

Every written file is checksummed. The first run records sha256 digests in
assets.lock.json next to the files; later runs verify against that lock so a
silently changed upstream file cannot slip in. Run on a machine with network
access, or point the test suite's CORPUSCRAFT_FERTILITY_ASSETS environment
variable at a directory prepared elsewhere.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import urllib.error
import urllib.request
from pathlib import Path

LOGGER = logging.getLogger("fetch_fertility_assets")

DEFAULT_DEST = Path(__file__).resolve().parent.parent / "tests" / "assets" / "fertility"

# Public mirrors of the tokenizer definition, tried in order.
TOKENIZER_URLS = (
    "https://huggingface.co/NousResearch/Meta-Llama-3-8B/resolve/main/tokenizer.json",
    "https://huggingface.co/unsloth/llama-3-8b/resolve/main/tokenizer.json",
)

# Universal Dependencies test splits, pinned to a release tag so the word
# counts never move under the fertility numbers.
UD_TAG = "r2.13"
TREEBANK_URLS = {
    "en.conllu": (
        "https://raw.githubusercontent.com/UniversalDependencies/"
        f"UD_English-EWT/{UD_TAG}/en_ewt-ud-test.conllu"
    ),
    "ru.conllu": (
        "https://raw.githubusercontent.com/UniversalDependencies/"
        f"UD_Russian-SynTagRus/{UD_TAG}/ru_syntagrus-ud-test.conllu"
    ),
}

LOCK_NAME = "assets.lock.json"
USER_AGENT = "corpuscraft-fetch/1.0"


def _download(url: str, timeout: float) -> bytes:
    request = urllib.request.Request(url, headers={"User-Agent": USER_AGENT})
    LOGGER.info("downloading %s", url)
    with urllib.request.urlopen(request, timeout=timeout) as response:
        return response.read()


def _download_any(urls: tuple[str, ...], timeout: float) -> bytes:
    last_error: Exception | None = None
    for url in urls:
        try:
            return _download(url, timeout)
        except (urllib.error.URLError, OSError) as exc:
            LOGGER.warning("failed to fetch %s: %s", url, exc)
            last_error = exc
    raise SystemExit(f"all mirrors failed, last error: {last_error}")


def _split_tokenizer(blob: bytes) -> tuple[bytes, bytes]:
    """Split a tokenizer.json into vocab.json and merges.txt payloads."""
    definition = json.loads(blob.decode("utf-8"))
    model = definition.get("model")
    if not isinstance(model, dict):
        raise SystemExit("tokenizer.json has no model section")
    vocab = model.get("vocab")
    merges = model.get("merges")
    if not isinstance(vocab, dict) or not isinstance(merges, list):
        raise SystemExit("tokenizer.json model lacks vocab or merges")
    lines = ["#version: 0.2"]
    for entry in merges:
        # Older files store "left right" strings, newer ones [left, right].
        if isinstance(entry, str):
            parts = entry.split(" ")
        else:
            parts = [str(piece) for piece in entry]
        if len(parts) != 2:
            raise SystemExit(f"malformed merge entry: {entry!r}")
        lines.append(f"{parts[0]} {parts[1]}")
    vocab_blob = json.dumps(vocab, ensure_ascii=False, indent=0).encode("utf-8")
    merges_blob = ("\n".join(lines) + "\n").encode("utf-8")
    return vocab_blob, merges_blob


def _sha256(blob: bytes) -> str:
    return hashlib.sha256(blob).hexdigest()


def _write_verified(dest: Path, name: str, blob: bytes, lock: dict[str, str]) -> None:
    digest = _sha256(blob)
    expected = lock.get(name)
    if expected is not None and expected != digest:
        raise SystemExit(
            f"{name}: sha256 {digest} does not match locked {expected}; "
            "pass --refresh-lock if the upstream pin moved on purpose"
        )
    path = dest / name
    path.write_bytes(blob)
    lock[name] = digest
    LOGGER.info("wrote %s (%d bytes, sha256 %s)", path, len(blob), digest)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--dest",
        type=Path,
        default=DEFAULT_DEST,
        help="directory to write assets into (default: tests/assets/fertility)",
    )
    parser.add_argument(
        "--tokenizer-url",
        help="override the tokenizer.json mirror list with a single URL",
    )
    parser.add_argument(
        "--timeout",
        type=float,
        default=60.0,
        help="per-request timeout in seconds (default: 60)",
    )
    parser.add_argument(
        "--refresh-lock",
        action="store_true",
        help="ignore existing checksums and record the newly fetched ones",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)

    dest: Path = args.dest
    dest.mkdir(parents=True, exist_ok=True)
    lock_path = dest / LOCK_NAME
    lock: dict[str, str] = {}
    if lock_path.exists() and not args.refresh_lock:
        lock = json.loads(lock_path.read_text(encoding="utf-8"))

    tokenizer_urls = (
        (args.tokenizer_url,) if args.tokenizer_url else TOKENIZER_URLS
    )
    tokenizer_blob = _download_any(tokenizer_urls, args.timeout)
    vocab_blob, merges_blob = _split_tokenizer(tokenizer_blob)
    _write_verified(dest, "vocab.json", vocab_blob, lock)
    _write_verified(dest, "merges.txt", merges_blob, lock)

    for name, url in TREEBANK_URLS.items():
        blob = _download_any((url,), args.timeout)
        _write_verified(dest, name, blob, lock)

    lock_path.write_text(
        json.dumps(lock, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    LOGGER.info("lock file updated: %s", lock_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
