"""Identifier matching: exact first, then accent- and case-insensitive."""

from __future__ import annotations

import unicodedata
from typing import Iterable


def fold(name: str) -> str:
    decomposed = unicodedata.normalize("NFKD", name)
    return "".join(c for c in decomposed if not unicodedata.combining(c)).casefold()


def resolve(name: str, candidates: Iterable[str]) -> str | None:
    """Return the candidate ``name`` designates, or None if absent/ambiguous."""
    candidates = list(candidates)
    if name in candidates:
        return name
    key = fold(name)
    hits = [c for c in candidates if fold(c) == key]
    return hits[0] if len(hits) == 1 else None
