"""Textual languages: schema definitions, configuration rules and queries."""

from twq.dsl.ddl import DdlDocument, format_rule, parse_ddl, parse_rule, print_ddl
from twq.dsl.evaluate import evaluate
from twq.dsl.query import Call, Name, Query, Range, parse_query, print_query
from twq.dsl.render import MODES, render, render_history
from twq.dsl.typecheck import Typed, typecheck

__all__ = [
    "DdlDocument", "format_rule", "parse_ddl", "parse_rule", "print_ddl",
    "evaluate", "Call", "Name", "Query", "Range", "parse_query", "print_query",
    "MODES", "render", "render_history", "Typed", "typecheck",
]
