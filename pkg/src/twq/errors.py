"""Exception hierarchy shared by every layer of the engine."""

from __future__ import annotations


class TwqError(Exception):
    """Base class for all engine errors."""


# temporal kernel
class MixedUnits(TwqError):
    pass


class EmptyDomain(TwqError):
    pass


class IncomparableUnits(TwqError):
    pass


class NotCoarser(TwqError):
    pass


class NotFiner(TwqError):
    pass


class InstantSyntaxError(TwqError, ValueError):
    pass


# model / lifecycle
class MissingAttribute(TwqError):
    pass


class TypeMismatch(TwqError):
    pass


class NonMonotonicTimestamp(TwqError):
    pass


class OverlapDetected(TwqError):
    pass


class NoArchiveFilter(TwqError):
    pass


class BlockCollision(TwqError):
    pass


class SelectionNotPast(TwqError):
    pass


class RuleEvaluationError(TwqError):
    pass


# extraction
class MappingError(TwqError):
    pass


class UnknownSourceClass(MappingError):
    pass


class UnresolvedReference(MappingError):
    pass


class SnapshotError(MappingError):
    pass


# algebra
class KindMismatch(TwqError):
    pass


class IdentityOnStates(KindMismatch):
    pass


class UnknownAttribute(TwqError):
    pass


class PredicateTypeError(TwqError):
    pass


class OverlappingStates(TwqError):
    pass


class EmptySeries(TwqError):
    pass


class AttributeNameClash(TwqError):
    pass


# dsl
class DslSyntaxError(TwqError):
    """Parse failure carrying a 1-based line/column."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(f"{line}:{column}: {message}" if line else message)


class UnsupportedEvent(DslSyntaxError):
    pass


class UnsupportedAction(DslSyntaxError):
    pass


class QueryError(TwqError):
    """Runtime failure of a query, tagged with the operator that raised it."""

    def __init__(self, node: str, cause: Exception):
        self.node = node
        self.cause = cause
        super().__init__(f"{node}: {cause}")


# persistence
class StoreError(TwqError):
    pass
