"""Structural values: immutable records, object references and their encodings."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterable, Iterator


@dataclass(frozen=True, order=True)
class Ref:
    """Reference to another warehouse object (or, before resolution, a source key)."""

    oid: str

    def __str__(self) -> str:
        return f"@{self.oid}"


class Record(Mapping):
    """Immutable, hashable attribute record.

    Attribute order is kept for printing; equality and hashing ignore it.
    """

    __slots__ = ("_data", "_hash")

    def __init__(self, items: Mapping[str, Any] | Iterable[tuple[str, Any]] = (), **kwargs: Any):
        data = dict(items)
        data.update(kwargs)
        self._data = data
        self._hash = None

    def __getitem__(self, key: str) -> Any:
        return self._data[key]

    def __iter__(self) -> Iterator[str]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Record):
            return self._data == other._data
        if isinstance(other, Mapping):
            return self._data == dict(other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._data.items()))
        return self._hash

    def __repr__(self) -> str:
        return f"Record({self._data!r})"

    def project(self, names: Iterable[str]) -> "Record":
        return Record((n, self._data[n]) for n in names)

    def without(self, names: Iterable[str]) -> "Record":
        drop = set(names)
        return Record((k, v) for k, v in self._data.items() if k not in drop)

    def merged(self, other: Mapping[str, Any]) -> "Record":
        data = dict(self._data)
        data.update(other)
        return Record(data)


def freeze(obj: Any) -> Any:
    """Turn decoded JSON into engine values (dict→Record, list→tuple, tags decoded)."""
    if isinstance(obj, Record):
        return obj
    if isinstance(obj, dict):
        if set(obj) == {"$ref"}:
            return Ref(obj["$ref"])
        if set(obj) == {"$frac"}:
            return normalize_number(Fraction(obj["$frac"]))
        return Record((k, freeze(v)) for k, v in obj.items())
    if isinstance(obj, (list, tuple)):
        return tuple(freeze(v) for v in obj)
    return obj


def thaw(obj: Any) -> Any:
    """Inverse of :func:`freeze`: JSON-compatible structure."""
    if isinstance(obj, Record):
        return {k: thaw(v) for k, v in obj.items()}
    if isinstance(obj, tuple):
        return [thaw(v) for v in obj]
    if isinstance(obj, Ref):
        return {"$ref": obj.oid}
    if isinstance(obj, Fraction):
        return {"$frac": str(obj)}
    return obj


def normalize_number(x: Any) -> Any:
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


def is_number(x: Any) -> bool:
    return isinstance(x, (int, float, Fraction)) and not isinstance(x, bool)


_TYPE_RANK = {bool: 0, int: 1, float: 1, Fraction: 1, str: 2, Ref: 3, tuple: 4, Record: 5}


def sort_key(v: Any) -> tuple:
    """Total order across heterogeneous values, for deterministic output."""
    if v is None:
        return (-1,)
    rank = _TYPE_RANK.get(type(v), 9)
    if isinstance(v, Record):
        return (rank, tuple((k, sort_key(v[k])) for k in sorted(v)))
    if isinstance(v, tuple):
        return (rank, tuple(sort_key(x) for x in v))
    if isinstance(v, Ref):
        return (rank, v.oid)
    if rank == 9:
        return (rank, repr(v))
    return (rank, v)
