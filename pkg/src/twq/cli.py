"""Command line front end.

    twq init SCHEMA.ddl          create an empty store for a schema
    twq validate SCHEMA.ddl      check a schema and print diagnostics
    twq refresh --snapshot F --at YYYY-MM
    twq query (-e TEXT | FILE) [--output text|paper|json]
    twq show [OID | CLASS]

The store path comes from ``--store`` or the ``TWQ_STORE`` variable.
Exit status: 0 ok, 1 usage, 2 parse or validation error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from twq import lifecycle, store as store_mod
from twq.chrono import Instant
from twq.dsl import parse_ddl, parse_query, render, render_history, typecheck
from twq.dsl.evaluate import evaluate
from twq.errors import DslSyntaxError, InstantSyntaxError, SnapshotError, TwqError
from twq.extraction import load_snapshot
from twq.model import validate_schema
from twq.names import resolve

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _store_path(args) -> Path:
    path = args.store or os.environ.get("TWQ_STORE")
    if not path:
        raise UsageError("no store given (use --store or set TWQ_STORE)")
    return Path(path)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _instant(text: Optional[str]) -> Optional[Instant]:
    if text is None:
        return None
    try:
        return Instant.parse(text)
    except InstantSyntaxError as exc:
        raise UsageError(str(exc)) from None


def _load_store(args):
    path = _store_path(args)
    if not path.exists():
        raise UsageError(f"store {path} does not exist (run 'twq init' first)")
    return store_mod.load(path)


def _schema_doc(path: str):
    doc = parse_ddl(_read(path))
    diags = validate_schema(doc.schema)
    return doc, diags


def _print_diags(diags) -> bool:
    errors = False
    for d in diags:
        print(d, file=sys.stderr)
        errors = errors or d.severity == "error"
    return errors


def cmd_validate(args) -> int:
    doc, diags = _schema_doc(args.schema)
    if _print_diags(diags):
        return EXIT_INVALID
    rules = sum(len(e.rules) for e in doc.schema.environments)
    print(f"ok: {len(doc.schema.classes)} class(es), {len(doc.schema.environments)} "
          f"environment(s), {rules} rule(s)")
    return EXIT_OK


def cmd_init(args) -> int:
    path = _store_path(args)
    doc, diags = _schema_doc(args.schema)
    if _print_diags(diags):
        return EXIT_INVALID
    if path.exists() and not args.force:
        raise UsageError(f"store {path} already exists (use --force to replace it)")
    with store_mod.locked(path):
        store_mod.save(store_mod.Store(doc.schema), path)
    rules = sum(len(e.rules) for e in doc.schema.environments)
    print(f"initialized {path}: {len(doc.schema.classes)} class(es), "
          f"{len(doc.schema.environments)} environment(s), {rules} rule(s)")
    return EXIT_OK


def cmd_refresh(args) -> int:
    path = _store_path(args)
    at = _instant(args.at) or _instant_from_name(args.snapshot)
    if at is None:
        raise UsageError("--at is required when the snapshot name is not an instant")
    if not Path(args.snapshot).exists():
        raise UsageError(f"cannot read {args.snapshot}")
    with store_mod.locked(path):
        st = _load_store(args)
        snapshot = load_snapshot(args.snapshot, at)
        report = lifecycle.refresh(st, snapshot, at)
        store_mod.save(st, path)
    print(report.render())
    return EXIT_OK


def _instant_from_name(name: str) -> Optional[Instant]:
    try:
        return Instant.parse(Path(name).stem)
    except InstantSyntaxError:
        return None


def cmd_query(args) -> int:
    if (args.expr is None) == (args.file is None):
        raise UsageError("give exactly one of -e TEXT or a query file")
    text = args.expr if args.expr is not None else _read(args.file)
    st = _load_store(args)
    q = parse_query(text)
    typed = typecheck(q, st.schema)
    if _print_diags(typed.diagnostics):
        return EXIT_INVALID
    as_of = _instant(args.as_of)
    result = evaluate(q, st, as_of)
    mode = "paper" if args.paper_style else args.output
    print(render(result, mode, as_of or st.last_refresh))
    return EXIT_OK


def cmd_show(args) -> int:
    st = _load_store(args)
    if args.target is None:
        objs = [st.objects[o] for o in sorted(st.objects, key=st.oid_order)]
    elif args.target in st.objects:
        objs = [st.objects[args.target]]
    else:
        cls = resolve(args.target, [c.name for c in st.schema.classes])
        if cls is None:
            raise UsageError(f"no object or class named {args.target!r}")
        objs = st.extension(cls)
    mode = "paper" if args.paper_style else args.output
    print("\n".join(render_history(o, mode, st.last_refresh) for o in objs))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twq", description="Temporal object warehouse: refresh, archive and query.")
    p.add_argument("--store", help="store file (default: $TWQ_STORE)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("init", help="create an empty store from a schema")
    s.add_argument("schema")
    s.add_argument("--force", action="store_true", help="replace an existing store")
    s.set_defaults(func=cmd_init)

    s = sub.add_parser("validate", help="check a schema file")
    s.add_argument("schema")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("refresh", help="load a source snapshot")
    s.add_argument("--snapshot", required=True, help="JSON-lines snapshot file")
    s.add_argument("--at", help="refresh instant, e.g. 2000-07 (default: snapshot file name)")
    s.set_defaults(func=cmd_refresh)

    for name, func, helptext in (("query", cmd_query, "evaluate a query"),
                                 ("show", cmd_show, "print object histories")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--output", choices=("text", "paper", "json"), default="text")
        s.add_argument("--paper-style", action="store_true", help="same as --output paper")
        s.set_defaults(func=func)
        if name == "query":
            s.add_argument("file", nargs="?", help="query file")
            s.add_argument("-e", "--expr", help="query text")
            s.add_argument("--as-of", help="instant at which current states are closed")
        else:
            s.add_argument("target", nargs="?", help="object id or class name")

    # accept --store after the subcommand too
    for action in sub.choices.values():
        action.add_argument("--store", dest="store", default=argparse.SUPPRESS,
                            help=argparse.SUPPRESS)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"twq: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DslSyntaxError, SnapshotError) as exc:
        print(f"twq: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except TwqError as exc:
        print(f"twq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
