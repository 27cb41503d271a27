"""Shared helpers: stable hashing, deterministic ids, JSON extraction, sentences.

Everything here must be deterministic across processes: replays of the same
seed and inputs have to produce byte-identical artifacts, so Python's salted
builtin ``hash`` is never used.
"""

from __future__ import annotations

import hashlib
import json
import re
import uuid
from typing import Any, Iterator


def stable_hash(text: str) -> int:
    """64-bit unsigned hash of ``text``, stable across processes and runs."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derived_uuid(*parts: object) -> str:
    """UUID-shaped opaque id deterministically derived from ``parts``."""
    material = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(material.encode("utf-8")).digest()
    return str(uuid.UUID(bytes=digest[:16], version=4))


def canonical_json(doc: Any) -> str:
    """Key-sorted, indented JSON with a trailing newline (golden-file stable)."""
    return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


_SENTENCE_BOUNDARY = re.compile(r"[.!?;]")


def split_sentences(text: str) -> list[str]:
    """Split prose into sentences on ``. ! ? ;`` keeping the boundary char."""
    sentences = []
    start = 0
    for match in _SENTENCE_BOUNDARY.finditer(text):
        sentences.append(text[start : match.end()])
        start = match.end()
    if start < len(text):
        sentences.append(text[start:])
    return sentences


def sentence_at(text: str, offset: int) -> str:
    """The sentence of ``text`` containing character ``offset``, stripped."""
    start = 0
    for match in _SENTENCE_BOUNDARY.finditer(text):
        if offset < match.end():
            return text[start : match.end()].strip()
        start = match.end()
    return text[start:].strip()


def extract_json_objects(raw: str) -> Iterator[dict]:
    """Yield every top-level JSON object found in ``raw``, in order.

    Tolerates markdown fences, leading/trailing prose, and junk between
    objects by brute-force scanning for ``{`` and attempting a decode at each
    candidate. Never raises: undecodable stretches are skipped.
    """
    decoder = json.JSONDecoder()
    i = 0
    n = len(raw)
    while i < n:
        start = raw.find("{", i)
        if start == -1:
            return
        try:
            obj, end = decoder.raw_decode(raw, start)
        except (ValueError, RecursionError):
            i = start + 1
            continue
        if isinstance(obj, dict):
            yield obj
            i = end
        else:
            i = start + 1


def clamp(value: int, low: int, high: int) -> int:
    return max(low, min(high, value))


def truncate(text: str, limit: int) -> str:
    return text if len(text) <= limit else text[:limit]
