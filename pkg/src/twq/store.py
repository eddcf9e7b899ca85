"""The warehouse store and its on-disk format.

A store file is one JSON document holding the schema (as DDL text), every
warehouse object with its current, past and archive states, the last refresh
instant and the rule-firing journal. Writes go to a temporary file that is
renamed over the target, so a crash mid-write leaves the previous version in
place. An advisory lock file serializes writers.
"""

from __future__ import annotations

import contextlib
import fcntl
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Optional

from twq.aggregate import Summary
from twq.chrono import Instant, TemporalDomain, TemporalUnit
from twq.errors import StoreError
from twq.model import Role, State, WarehouseObject, WarehouseSchema
from twq.values import freeze, thaw

FORMAT = "twq-store"
VERSION = 1

# Test hook: called with a stage name during save ("written" after the
# temporary file is flushed, "replaced" after the rename).
fault_hook: Optional[Callable[[str], None]] = None


def _oid_number(oid: str) -> tuple:
    digits = oid.lstrip("OID")
    return (0, int(digits)) if digits.isdigit() else (1, oid)


@dataclass
class Store:
    schema: WarehouseSchema
    objects: dict[str, WarehouseObject] = field(default_factory=dict)
    keys: dict[tuple[str, tuple[str, ...]], str] = field(default_factory=dict)
    last_refresh: Optional[Instant] = None
    next_oid: int = 1
    journal: list[dict] = field(default_factory=list)

    @staticmethod
    def oid_order(oid: str) -> tuple:
        return _oid_number(oid)

    def copy(self) -> "Store":
        return Store(self.schema, dict(self.objects), dict(self.keys), self.last_refresh,
                     self.next_oid, list(self.journal))

    def commit(self, other: "Store") -> None:
        self.objects = other.objects
        self.keys = other.keys
        self.last_refresh = other.last_refresh
        self.next_oid = other.next_oid
        self.journal = other.journal

    def allocate_oid(self, ident: tuple[str, tuple[str, ...]]) -> str:
        oid = f"OID{self.next_oid}"
        self.next_oid += 1
        self.keys[ident] = oid
        return oid

    def extension(self, class_name: str) -> list[WarehouseObject]:
        return sorted((o for o in self.objects.values() if o.class_name == class_name),
                      key=lambda o: _oid_number(o.oid))

    def get(self, oid: str) -> WarehouseObject:
        try:
            return self.objects[oid]
        except KeyError:
            raise StoreError(f"no object {oid!r}") from None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Store):
            return NotImplemented
        return (self.schema == other.schema and self.objects == other.objects
                and self.keys == other.keys and self.last_refresh == other.last_refresh
                and self.next_oid == other.next_oid and self.journal == other.journal)


# -- encoding -----------------------------------------------------------------

def _enc_state(s: State) -> dict:
    out: dict[str, Any] = {
        "value": thaw(s.value),
        "unit": s.domain.unit.value if s.domain.unit else None,
        "domain": str(s.domain),
    }
    if s.stats:
        out["stats"] = {a: st.to_json() for a, st in s.stats}
    if s.block is not None:
        out["block"] = s.block
    return out


def _dec_state(d: dict, role: Role, owner: str) -> State:
    domain = TemporalDomain.parse(d["domain"])
    if domain.unit is None and d.get("unit"):
        domain = TemporalDomain.empty(TemporalUnit(d["unit"]))
    stats = tuple((a, Summary.from_json(st)) for a, st in d.get("stats", {}).items())
    return State(freeze(d["value"]), domain, role, owner, stats, d.get("block"))


def _enc_object(o: WarehouseObject) -> dict:
    return {
        "oid": o.oid,
        "class": o.class_name,
        "key": list(o.key),
        "active": o.active,
        "since": str(o.since),
        "current": thaw(o.current),
        "past": [_enc_state(s) for s in o.past],
        "archive": [_enc_state(s) for s in o.archive],
    }


def _dec_object(d: dict) -> WarehouseObject:
    oid = d["oid"]
    return WarehouseObject(
        oid, d["class"], freeze(d["current"]), Instant.parse(d["since"]),
        tuple(_dec_state(s, Role.PAST, oid) for s in d["past"]),
        tuple(_dec_state(s, Role.ARCHIVE, oid) for s in d["archive"]),
        tuple(d["key"]), d["active"],
    )


def dumps(store: Store) -> str:
    from twq.dsl import print_ddl

    doc = {
        "format": FORMAT,
        "version": VERSION,
        "schema": print_ddl(store.schema),
        "last_refresh": str(store.last_refresh) if store.last_refresh else None,
        "next_oid": store.next_oid,
        "objects": [_enc_object(store.objects[k]) for k in sorted(store.objects, key=_oid_number)],
        "journal": store.journal,
    }
    return json.dumps(doc, indent=1, ensure_ascii=False, sort_keys=False) + "\n"


def loads(text: str) -> Store:
    from twq.dsl import parse_ddl

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise StoreError(f"store is not valid JSON: {exc}") from None
    if doc.get("format") != FORMAT:
        raise StoreError("not a twq store file")
    if doc.get("version") != VERSION:
        raise StoreError(f"unsupported store version {doc.get('version')!r}")
    schema = parse_ddl(doc["schema"]).schema
    objects = {}
    keys = {}
    for raw in doc["objects"]:
        obj = _dec_object(raw)
        objects[obj.oid] = obj
        keys[(obj.class_name, obj.key)] = obj.oid
    last = doc.get("last_refresh")
    return Store(schema, objects, keys, Instant.parse(last) if last else None,
                 doc["next_oid"], list(doc.get("journal", [])))


# -- files --------------------------------------------------------------------

def load(path: str | Path) -> Store:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise StoreError(f"cannot read store {path}: {exc.strerror}") from None
    return loads(text)


def save(store: Store, path: str | Path) -> None:
    """Write ``store`` atomically: temporary file, fsync, rename."""
    path = Path(path)
    text = dumps(store)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        if fault_hook:
            fault_hook("written")
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise
    if fault_hook:
        fault_hook("replaced")


@contextlib.contextmanager
def locked(path: str | Path) -> Iterator[None]:
    """Hold the advisory writer lock of the store at ``path``."""
    lock = Path(str(path) + ".lock")
    with open(lock, "a") as fh:
        fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
