"""JSON documents for derivations.

A derivation document has a footprint, a table of named e-predicates and a
tree of rule nodes that refer to predicates by name::

    {"footprint": ["w", "x1"],
     "predicates": {"Q": {"formula": "w = 1 -> outcome = 1"},
                    "W": {"wpre": {"mech": "ch {1} (x1)", "post": "Q"}},
                    "E": {"fibers": [[[0, 1], [1, 2]]]}},
     "root": {"rule": "Consequence", "pre": "...", "mech": "...", "post": "...",
              "data": {}, "children": [...]}}

Fibers list ``[state, outcomes]`` pairs with the state in footprint order;
unlisted states have empty fibers.
"""

from __future__ import annotations

from typing import Mapping

from .config import to_value
from .equilibrium import WPre, jvalue, wpre
from .hoare import Derivation, HoareTriple
from .interpretation import EPredicate, Interpretation, canonical, explicit, extension
from .syntax import parse_mechanism, show_bool, show_mechanism


class DerivationFormatError(ValueError):
    pass


def derivation_to_json(D: Derivation) -> dict:
    space = D.triple.pre.space
    names: dict = {}
    table: dict = {}
    keep: list = []

    def ref(P: EPredicate) -> str:
        key = id(P)
        if key not in names:
            keep.append(P)
            name = names[key] = f"P{len(names)}"
            if P.formula is not None and not isinstance(P, WPre):
                table[name] = {"formula": show_bool(P.formula)}
            else:
                table[name] = {"fibers": [[[jvalue(v) for v in s], [jvalue(o) for o in canonical(f)]]
                                          for s in space.states() if (f := P.fiber(s))]}
        return names[key]

    def node(d: Derivation) -> dict:
        t = d.triple
        out = {"rule": d.rule, "pre": ref(t.pre), "mech": show_mechanism(t.mech),
               "post": ref(t.post)}
        if d.data:
            out["data"] = {k: ref(v) for k, v in d.data.items()}
        out["children"] = [node(c) for c in d.children]
        return out

    root = node(D)
    return {"footprint": list(space.footprint), "predicates": table, "root": root}


def derivation_from_json(doc: Mapping, interp: Interpretation,
                         depth_cap: int | None = None) -> Derivation:
    try:
        footprint = list(doc["footprint"])
        raw_preds = doc["predicates"]
        raw_root = doc["root"]
    except KeyError as exc:
        raise DerivationFormatError(f"derivation lacks key {exc}") from None
    space = interp.space(footprint)
    built: dict = {}
    active: set = set()

    def pred(name: str) -> EPredicate:
        if name in built:
            return built[name]
        if name not in raw_preds:
            raise DerivationFormatError(f"unknown predicate {name!r}")
        if name in active:
            raise DerivationFormatError(f"predicate {name!r} refers to itself")
        active.add(name)
        desc = raw_preds[name]
        if "formula" in desc:
            P = extension(desc["formula"], interp, footprint)
        elif "fibers" in desc:
            P = explicit(space, {tuple(to_value(v) for v in s): [to_value(o) for o in os]
                                 for s, os in desc["fibers"]}, label=name)
        elif "wpre" in desc:
            w = desc["wpre"]
            P = wpre(parse_mechanism(w["mech"]), pred(w["post"]), interp, depth_cap)
        else:
            raise DerivationFormatError(f"predicate {name!r} has no formula, fibers or wpre")
        P.label = name if "formula" not in desc else P.label
        active.discard(name)
        built[name] = P
        return P

    def node(raw: Mapping) -> Derivation:
        try:
            triple = HoareTriple(pred(raw["pre"]), parse_mechanism(raw["mech"]), pred(raw["post"]))
            data = {k: pred(v) for k, v in raw.get("data", {}).items()}
            return Derivation(raw["rule"], triple, [node(c) for c in raw.get("children", [])], data)
        except KeyError as exc:
            raise DerivationFormatError(f"derivation node lacks key {exc}") from None

    return node(raw_root)
