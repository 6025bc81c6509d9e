"""Loading interpretations from JSON documents.

Example::

    {
      "agents": [1, 2],
      "sorts": {"x1": {"int": [0, 4]}, "b": "bool", "c": {"tuple": [{"int": [0, 6]}, {"int": [0, 6]}]},
                "ballot": {"values": [[2, 1], [1, 2]]}},
      "outcome_sort": {"tuple": [{"int": [-4, 4]}, {"int": [-4, 4]}]},
      "constants": {"v1": 3},
      "functions": {"val": {"args": [{"int": [0, 2]}], "table": [[0, 0], [1, 3], [2, 0]]}},
      "relations": {"adj": {"arity": 2, "tuples": [[0, 1]]}},
      "preferences": {"1": {"utility": "outcome[1]"}, "2": {"pairs": [[[0, 0], [0, 0]]]}}
    }

Lists denote tuples wherever a value is expected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

from .interpretation import (BoolSort, EnumSort, FunctionTable, Interpretation,
                             InterpretationError, IntRange, Pairs, RelationTable, TupleSort,
                             Utility)

BUILTIN = "builtin"


def to_value(raw: Any):
    if isinstance(raw, list):
        return tuple(to_value(x) for x in raw)
    if isinstance(raw, (bool, int)):
        return raw
    raise InterpretationError(f"unsupported value {raw!r}")


def to_sort(raw: Any):
    if raw == "bool":
        return BoolSort()
    if isinstance(raw, Mapping) and len(raw) == 1:
        (kind, arg), = raw.items()
        if kind == "int":
            lo, hi = arg
            return IntRange(int(lo), int(hi))
        if kind == "tuple":
            return TupleSort(tuple(to_sort(c) for c in arg))
        if kind == "values":
            return EnumSort(tuple(to_value(v) for v in arg))
    raise InterpretationError(f"bad sort descriptor {raw!r}")


def _function(name: str, raw: Any) -> FunctionTable | None:
    if raw == BUILTIN:
        return None
    try:
        arg_sorts = tuple(to_sort(s) for s in raw["args"])
        table = {}
        for row in raw["table"]:
            *args, result = (to_value(x) for x in row)
            table[tuple(args)] = result
    except (KeyError, TypeError, ValueError) as exc:
        raise InterpretationError(f"function {name}: malformed table ({exc})") from None
    return FunctionTable(len(arg_sorts), table, arg_sorts)


def _relation(name: str, raw: Any) -> RelationTable | None:
    if raw == BUILTIN:
        return None
    try:
        return RelationTable(int(raw["arity"]),
                             frozenset(tuple(to_value(x) for x in t) for t in raw["tuples"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise InterpretationError(f"relation {name}: malformed table ({exc})") from None


def to_preference(raw: Mapping):
    if "utility" in raw:
        return Utility.parse(raw["utility"])
    if "pairs" in raw:
        return Pairs(frozenset((to_value(a), to_value(b)) for a, b in raw["pairs"]))
    raise InterpretationError(f"preference needs 'utility' or 'pairs', got {sorted(raw)}")


def interpretation_from_dict(doc: Mapping) -> Interpretation:
    try:
        agents = tuple(int(a) for a in doc["agents"])
        sorts = {name: to_sort(s) for name, s in doc["sorts"].items()}
        outcome_sort = to_sort(doc["outcome_sort"])
        prefs = doc["preferences"]
    except KeyError as exc:
        raise InterpretationError(f"interpretation lacks key {exc}") from None
    functions = {n: t for n, raw in doc.get("functions", {}).items()
                 if (t := _function(n, raw)) is not None}
    relations = {n: t for n, raw in doc.get("relations", {}).items()
                 if (t := _relation(n, raw)) is not None}
    rng = doc.get("int_range")
    return Interpretation(
        agents=agents, sorts=sorts, outcome_sort=outcome_sort,
        constants={n: to_value(v) for n, v in doc.get("constants", {}).items()},
        functions=functions, relations=relations,
        preferences={int(a): to_preference(p) for a, p in prefs.items()},
        int_range=tuple(rng) if rng is not None else None,
        outcome_bottom=bool(doc.get("outcome_bottom", False)))


def load_interpretation(path: str | Path) -> Interpretation:
    with open(path, encoding="utf-8") as fh:
        return interpretation_from_dict(json.load(fh))


def preferences_from_dict(doc: Mapping) -> dict:
    return {int(a): to_preference(p) for a, p in doc.items()}
