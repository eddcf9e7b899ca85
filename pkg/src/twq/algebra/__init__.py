"""Query algebra over warehouse objects, state sets and series."""

from twq.algebra.collections import (
    Collection,
    GroupTuple,
    JoinRow,
    Kind,
    objects,
    series,
    states,
    value,
)
from twq.algebra.operators import (
    all_states,
    archive,
    concat_values,
    current,
    dgroup,
    dup_elim,
    empty_elim,
    flatten,
    ijoin,
    join,
    nest,
    objects_of,
    past,
    project,
    select,
    set_combine,
    state_restrict,
    ugroup,
    ujoin,
    unnest,
)
from twq.algebra.series import acum, agg_entries, agreg, amove, make_serie, scale_down, scale_up

__all__ = [
    "Collection", "GroupTuple", "JoinRow", "Kind", "objects", "series", "states", "value",
    "all_states", "archive", "concat_values", "current", "dgroup", "dup_elim", "empty_elim",
    "flatten", "ijoin", "join", "nest", "objects_of", "past", "project", "select",
    "set_combine", "state_restrict", "ugroup", "ujoin", "unnest",
    "acum", "agg_entries", "agreg", "amove", "make_serie", "scale_down", "scale_up",
]
