"""Schema DDL and configuration rules: parser and printer.

Grammar (informal)::

    document    := item*
    item        := 'schema' name ';'
                 | 'config' '{' (name '=' literal ';')* '}' ';'?
                 | 'source'? 'interface' name (':' name (',' name)*)? '{' member* '}' filters? ';'?
                 | 'environment' name '{' name (',' name)* '}' ';'?
                 | 'mapping' name '=' mexpr ';'
                 | rule
    member      := 'attribute' type name ';'
                 | 'relationship' type name ('inverse' name '::' name)? ';'
                 | type name '(' (type name (',' type name)*)? ')' ';'
    type        := 'Struct' name? '{' type name (',' type name)* '}' | name ('<' type '>')?
    filters     := 'with' filter (',' filter)*
    filter      := 'temporal' 'filter' '{' '(' name ',' name ('(' ')')? ')' , ... '}'
                 | 'archive' 'filter' '{' '(' name ',' fn '(' name ')' ')' , ... '}' ('by' unit '(' int ')')?
    mexpr       := 'PROJECT' '(' name? mexpr ',' '{' name ':' ref, ... '}' ')'
                 | 'SELECT' '(' mexpr ',' pred ')'
                 | 'JOIN' '(' mexpr ',' mexpr ',' pred ')'
                 | ('UNION' | 'INTERSECT' | 'DIFFERENCE') '(' mexpr ',' mexpr ')'
                 | name name
    rule        := 'rule' name 'on' name 'when' ('self' '.')? event '(' ')'
                   'if' condition 'then' (name '.')? action '(' ')' ';'
    condition   := 'select' name 'from' name 'in' name ',' name 'in' name '.' 'PastStates' '(' ')'
                   ('where' pred)?
                 | pred

Identifiers may carry accents; the engine also matches their unaccented
spellings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from twq.aggregate import AggregationFn
from twq.chrono import TemporalUnit
from twq.dsl.common import format_number, format_predicate, parse_predicate, parse_ref, quote
from twq.dsl.lexer import TokenStream
from twq.errors import DslSyntaxError, InstantSyntaxError, UnsupportedAction, UnsupportedEvent
from twq.extraction import Join, MappingExpr, Project, Select, SetOp, Source
from twq.model import (
    SCALAR_TYPES,
    ArchiveEntry,
    ArchiveFilter,
    Attribute,
    ConfigRule,
    Environment,
    Operation,
    SelectionCondition,
    TemporalFilter,
    TypeSpec,
    WarehouseClass,
    WarehouseSchema,
)

COLLECTION_TYPES = ("list", "set", "bag", "array")
SET_OPS = ("UNION", "INTERSECT", "DIFFERENCE")


@dataclass
class DdlDocument:
    name: str = "warehouse"
    classes: list[WarehouseClass] = field(default_factory=list)
    sources: list[WarehouseClass] = field(default_factory=list)
    environments: list[Environment] = field(default_factory=list)
    config: list[tuple[str, Any]] = field(default_factory=list)

    @property
    def schema(self) -> WarehouseSchema:
        return WarehouseSchema(self.name, tuple(self.classes), tuple(self.environments),
                               tuple(self.sources), tuple(self.config))

    @property
    def rules(self) -> list[ConfigRule]:
        return [r for env in self.environments for r in env.rules]


# -- parsing ------------------------------------------------------------------

def parse_type(ts: TokenStream) -> TypeSpec:
    if ts.peek().is_word("struct"):
        ts.next()
        name = ts.ident() if ts.peek().kind == "ident" else ""
        ts.expect("{")
        fields = []
        for _ in ts.iter_until("}"):
            t = parse_type(ts)
            fields.append((ts.ident("field name"), t))
        return TypeSpec("struct", name, tuple(fields))
    name = ts.ident("type name")
    if name.lower() in COLLECTION_TYPES and ts.accept("<"):
        elem = parse_type(ts)
        ts.expect(">")
        return TypeSpec("list", name, elem=elem)
    kind = SCALAR_TYPES.get(name.lower(), "ref")
    return TypeSpec(kind, name)


def format_type(t: TypeSpec) -> str:
    if t.kind == "struct":
        inner = ", ".join(f"{format_type(ft)} {fn}" for fn, ft in t.fields)
        head = f"Struct {t.name} " if t.name else "Struct "
        return head + "{" + inner + "}"
    if t.kind == "list":
        return f"{t.name or 'List'}<{format_type(t.elem)}>"
    return t.name or t.kind


def _member(ts: TokenStream, attrs: list, ops: list) -> None:
    if ts.accept_word("attribute"):
        t = parse_type(ts)
        attrs.append(Attribute(ts.ident("attribute name"), t))
    elif ts.accept_word("relationship"):
        t = parse_type(ts)
        if t.kind not in ("ref", "list"):
            t = TypeSpec("ref", t.name)
        name = ts.ident("relationship name")
        inverse = ""
        if ts.accept_word("inverse"):
            owner = ts.ident()
            ts.expect("::")
            inverse = f"{owner}::{ts.ident()}"
        attrs.append(Attribute(name, t, True, inverse))
    else:
        returns = format_type(parse_type(ts))
        name = ts.ident("operation name")
        ts.expect("(")
        params = []
        for _ in ts.iter_until(")"):
            pt = format_type(parse_type(ts))
            params.append(f"{pt} {ts.ident('parameter name')}")
        ops.append(Operation(name, returns, tuple(params)))
    ts.expect(";")


def _temporal_filter(ts: TokenStream) -> TemporalFilter:
    ts.expect("{")
    entries, calls = [], set()
    for _ in ts.iter_until("}"):
        ts.expect("(")
        prop = ts.ident("temporal property")
        ts.expect(",")
        source = ts.ident("source attribute")
        if ts.accept("("):
            ts.expect(")")
            calls.add(prop)
        ts.expect(")")
        entries.append((prop, source))
    return TemporalFilter(tuple(entries), frozenset(calls))


def parse_agg_entries(ts: TokenStream) -> tuple[ArchiveEntry, ...]:
    """``{(attr, fn(source)), ...}``"""
    ts.expect("{")
    entries = []
    for _ in ts.iter_until("}"):
        ts.expect("(")
        attr = ts.ident("attribute")
        ts.expect(",")
        tok = ts.peek()
        fn_name = ts.ident("aggregation function")
        try:
            fn = AggregationFn.parse(fn_name)
        except ValueError as exc:
            raise DslSyntaxError(str(exc), tok.line, tok.col) from None
        ts.expect("(")
        source = ts.ident("aggregated attribute")
        ts.expect(")")
        ts.expect(")")
        entries.append(ArchiveEntry(attr, fn, source))
    return tuple(entries)


def format_agg_entries(entries) -> str:
    return "{" + ", ".join(f"({e.attribute}, {e.fn.name}({e.source}))" for e in entries) + "}"


def parse_unit(ts: TokenStream) -> TemporalUnit:
    tok = ts.peek()
    text = ts.string() if tok.kind == "string" else ts.ident("temporal unit")
    try:
        return TemporalUnit.parse(text)
    except InstantSyntaxError as exc:
        raise DslSyntaxError(str(exc), tok.line, tok.col) from None


def _interface(ts: TokenStream) -> WarehouseClass:
    name = ts.ident("interface name")
    supers = []
    if ts.accept(":"):
        supers.append(ts.ident())
        while ts.accept(","):
            supers.append(ts.ident())
    ts.expect("{")
    attrs: list[Attribute] = []
    ops: list[Operation] = []
    while not ts.accept("}"):
        if ts.at_end():
            raise ts.error("unterminated interface body")
        _member(ts, attrs, ops)
    tf, af = TemporalFilter(), ArchiveFilter()
    if ts.accept_word("with"):
        while True:
            if ts.accept_word("temporal"):
                ts.expect_word("filter")
                tf = _temporal_filter(ts)
            elif ts.accept_word("archive"):
                ts.expect_word("filter")
                entries = parse_agg_entries(ts)
                grain = None
                if ts.accept_word("by"):
                    unit = parse_unit(ts)
                    ts.expect("(")
                    grain = (unit, ts.number("grain count"))
                    ts.expect(")")
                af = ArchiveFilter(entries, grain)
            else:
                raise ts.error("expected 'temporal filter' or 'archive filter'")
            if not ts.accept(","):
                break
    ts.accept(";")
    return WarehouseClass(name, tuple(attrs), tuple(supers), None, tf, af, tuple(ops))


def parse_mapping_expr(ts: TokenStream) -> MappingExpr:
    tok = ts.peek()
    word = tok.text.upper() if tok.kind == "ident" else ""
    if ts.peek(1).is_("("):
        if word == "PROJECT":
            ts.next()
            ts.expect("(")
            alias = ""
            # `pp JOIN(...)` or `pp p Personnes`: a leading alias for the whole row
            if ts.peek().kind == "ident" and ts.peek(1).kind == "ident" and \
                    (ts.peek(2).is_("(") or ts.peek(2).kind == "ident"):
                alias = ts.ident()
            child = parse_mapping_expr(ts)
            ts.expect(",")
            ts.expect("{")
            assigns = []
            for _ in ts.iter_until("}"):
                target = ts.ident("target attribute")
                ts.expect(":")
                assigns.append((target, parse_ref(ts)))
            ts.expect(")")
            return Project(child, tuple(assigns), alias)
        if word == "SELECT":
            ts.next()
            ts.expect("(")
            child = parse_mapping_expr(ts)
            ts.expect(",")
            pred = parse_predicate(ts)
            ts.expect(")")
            return Select(child, pred)
        if word == "JOIN":
            ts.next()
            ts.expect("(")
            left = parse_mapping_expr(ts)
            ts.expect(",")
            right = parse_mapping_expr(ts)
            ts.expect(",")
            pred = parse_predicate(ts)
            ts.expect(")")
            return Join(left, right, pred)
        if word in SET_OPS:
            ts.next()
            ts.expect("(")
            left = parse_mapping_expr(ts)
            ts.expect(",")
            right = parse_mapping_expr(ts)
            ts.expect(")")
            return SetOp(word, left, right)
    var = ts.ident("range variable")
    return Source(var, ts.ident("source class"))


def format_mapping(m: MappingExpr) -> str:
    if isinstance(m, Source):
        return f"{m.var} {m.class_name}"
    if isinstance(m, Project):
        alias = f"{m.alias} " if m.alias else ""
        assigns = ", ".join(f"{t} : {r}" for t, r in m.assignments)
        return f"PROJECT({alias}{format_mapping(m.child)}, {{{assigns}}})"
    if isinstance(m, Select):
        return f"SELECT({format_mapping(m.child)}, {format_predicate(m.predicate)})"
    if isinstance(m, Join):
        return (f"JOIN({format_mapping(m.left)}, {format_mapping(m.right)}, "
                f"{format_predicate(m.predicate)})")
    if isinstance(m, SetOp):
        return f"{m.op}({format_mapping(m.left)}, {format_mapping(m.right)})"
    raise TypeError(f"not a mapping expression: {m!r}")


def _rule(ts: TokenStream) -> ConfigRule:
    name = ts.ident("rule name")
    ts.expect_word("on")
    env = ts.ident("environment name")
    ts.expect_word("when")
    if ts.peek().is_word("self") and ts.peek(1).is_("."):
        ts.next()
        ts.next()
    tok = ts.peek()
    event = ts.ident("event")
    ts.expect("(")
    ts.expect(")")
    if event.lower() != "refresh":
        raise UnsupportedEvent(f"unsupported rule event {event!r}; only refresh is supported",
                               tok.line, tok.col)
    ts.expect_word("if")
    if ts.peek().is_word("select") and ts.peek(2).is_word("from"):
        ts.next()
        state_var = ts.ident("state variable")
        ts.expect_word("from")
        obj_var = ts.ident("object variable")
        ts.expect_word("in")
        cls = ts.ident("class name")
        ts.expect(",")
        tok = ts.peek()
        if ts.ident("state variable") != state_var:
            raise DslSyntaxError(f"expected selected variable {state_var}", tok.line, tok.col)
        ts.expect_word("in")
        tok = ts.peek()
        if ts.ident("object variable") != obj_var:
            raise DslSyntaxError(f"expected {obj_var}.PastStates()", tok.line, tok.col)
        ts.expect(".")
        ts.expect_word("paststates")
        ts.expect("(")
        ts.expect(")")
        where = parse_predicate(ts) if ts.accept_word("where") else None
        cond: Any = SelectionCondition(state_var, obj_var, cls, where)
    else:
        cond = parse_predicate(ts)
    ts.expect_word("then")
    action_var = ""
    if ts.peek(1).is_("."):
        action_var = ts.ident()
        ts.next()
    tok = ts.peek()
    action = ts.ident("action")
    ts.expect("(")
    ts.expect(")")
    if action.lower() != "archive":
        raise UnsupportedAction(f"unsupported rule action {action!r}; only archive is supported",
                                tok.line, tok.col)
    ts.expect(";")
    return ConfigRule(name, env, "refresh", cond, "archive", action_var)


def _literal(ts: TokenStream) -> Any:
    tok = ts.next()
    if tok.kind in ("number", "string"):
        return tok.value
    if tok.is_word("true", "false"):
        return tok.text.lower() == "true"
    raise ts.error("expected a literal", tok)


def parse_ddl(text: str) -> DdlDocument:
    ts = TokenStream(text)
    doc = DdlDocument()
    mappings: dict[str, tuple[MappingExpr, Any]] = {}
    rules: list[tuple[ConfigRule, Any]] = []
    env_decls: list[tuple[str, tuple[str, ...]]] = []
    while not ts.at_end():
        tok = ts.peek()
        if ts.accept_word("schema"):
            doc.name = ts.ident("schema name")
            ts.expect(";")
        elif ts.accept_word("config"):
            ts.expect("{")
            while not ts.accept("}"):
                key = ts.ident("setting name")
                ts.expect("=")
                doc.config.append((key, _literal(ts)))
                ts.expect(";")
            ts.accept(";")
        elif ts.accept_word("source"):
            ts.expect_word("interface")
            doc.sources.append(_interface(ts))
        elif ts.accept_word("interface"):
            doc.classes.append(_interface(ts))
        elif ts.accept_word("environment"):
            name = ts.ident("environment name")
            ts.expect("{")
            members = []
            for _ in ts.iter_until("}"):
                members.append(ts.ident("class name"))
            ts.accept(";")
            env_decls.append((name, tuple(members)))
        elif ts.accept_word("mapping"):
            target = ts.ident("class name")
            ts.expect("=")
            mappings[target] = (parse_mapping_expr(ts), tok)
            ts.expect(";")
        elif ts.accept_word("rule"):
            rules.append((_rule(ts), tok))
        else:
            raise ts.error("expected a declaration")

    names = [c.name for c in doc.classes]
    for target, (m, tok) in mappings.items():
        if target not in names:
            raise DslSyntaxError(f"mapping for undeclared class {target}", tok.line, tok.col)
        i = names.index(target)
        c = doc.classes[i]
        doc.classes[i] = WarehouseClass(c.name, c.attributes, c.supers, m, c.temporal_filter,
                                        c.archive_filter, c.operations)
    env_names = [n for n, _ in env_decls]
    for rule, tok in rules:
        if rule.on not in env_names:
            raise DslSyntaxError(f"rule {rule.name} refers to undeclared environment {rule.on}",
                                 tok.line, tok.col)
    for name, members in env_decls:
        doc.environments.append(
            Environment(name, members, tuple(r for r, _ in rules if r.on == name)))
    return doc


def parse_rule(text: str) -> ConfigRule:
    ts = TokenStream(text)
    ts.expect_word("rule")
    rule = _rule(ts)
    if not ts.at_end():
        raise ts.error("unexpected text after rule")
    return rule


# -- printing -----------------------------------------------------------------

def _format_interface(c: WarehouseClass, keyword: str) -> str:
    head = f"{keyword} {c.name}"
    if c.supers:
        head += " : " + ", ".join(c.supers)
    lines = [head + " {"]
    for a in c.attributes:
        if a.relationship:
            inv = f" inverse {a.inverse}" if a.inverse else ""
            lines.append(f"    relationship {format_type(a.type)} {a.name}{inv} ;")
        else:
            lines.append(f"    attribute {format_type(a.type)} {a.name} ;")
    for op in c.operations:
        lines.append(f"    {op.returns} {op.name}({', '.join(op.params)}) ;")
    lines.append("}")
    filters = []
    if c.temporal_filter:
        tf = c.temporal_filter
        items = ", ".join(f"({p}, {s}{'()' if p in tf.calls else ''})" for p, s in tf.entries)
        filters.append(f"temporal filter {{{items}}}")
    if c.archive_filter:
        af = c.archive_filter
        text = f"archive filter {format_agg_entries(af.entries)}"
        if af.grain is not None:
            text += f"\n    by {af.grain[0].value}({af.grain[1]})"
        filters.append(text)
    if filters:
        lines.append("with " + ",\n    ".join(filters) + " ;")
    return "\n".join(lines)


def format_rule(r: ConfigRule) -> str:
    lines = [f"rule {r.name} on {r.on}", "when self.refresh()"]
    cond = r.condition
    if isinstance(cond, SelectionCondition):
        lines.append(f"if select {cond.state_var} from {cond.object_var} in {cond.class_name}, "
                     f"{cond.state_var} in {cond.object_var}.PastStates()")
        if cond.where is not None:
            lines.append(f"where {format_predicate(cond.where)}")
    else:
        lines.append(f"if {format_predicate(cond)}")
    target = f"{r.action_var}." if r.action_var else ""
    lines.append(f"then {target}archive() ;")
    return "\n".join(lines)


def print_ddl(doc: DdlDocument | WarehouseSchema) -> str:
    if isinstance(doc, DdlDocument):
        doc = doc.schema
    parts = []
    if doc.name != "warehouse":
        parts.append(f"schema {doc.name} ;")
    if doc.config:
        body = "".join(f"    {k} = {_format_literal(v)} ;\n" for k, v in doc.config)
        parts.append("config {\n" + body + "}")
    for s in doc.sources:
        parts.append(_format_interface(s, "source interface"))
    for c in doc.classes:
        parts.append(_format_interface(c, "interface"))
    for c in doc.classes:
        if c.mapping is not None:
            parts.append(f"mapping {c.name} = {format_mapping(c.mapping)} ;")
    for env in doc.environments:
        parts.append(f"environment {env.name} {{ {', '.join(env.class_names)} }}")
        for r in env.rules:
            parts.append(format_rule(r))
    return "\n\n".join(parts) + "\n"


def _format_literal(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return quote(v)
    return format_number(v)
