"""Finite interpretations, states and (extended) predicates.

Values are plain Python ints, bools and tuples, plus the distinguished
``BOTTOM`` element that every agent ranks last.  States are tuples aligned
with a :class:`StateSpace` footprint; user-facing helpers accept dicts.
"""

from __future__ import annotations

import itertools
import math
import operator
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .syntax import (
    And, App, BoolExpr, Lit, Not, Outcome, Rel, Term, TrueB, Tup, Var,
    bool_vars, parse_formula, parse_term, show_bool, show_term, term_vars,
    uses_outcome,
)


class EvalError(ValueError):
    """Evaluation failed: unbound variable, arity mismatch, bad table."""


class InterpretationError(ValueError):
    """An interpretation violates its structural invariants."""


class _Bottom:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "⊥"

    def __reduce__(self):
        return (_Bottom, ())


BOTTOM = _Bottom()

Value = Union[int, bool, tuple, _Bottom]


def value_key(v: Value):
    """Canonical order: ⊥ first, then booleans, ints, tuples (lexicographic)."""
    if v is BOTTOM:
        return (0,)
    if isinstance(v, bool):
        return (1, int(v))
    if isinstance(v, int):
        return (2, v)
    if isinstance(v, tuple):
        return (3, tuple(value_key(x) for x in v))
    raise TypeError(f"not a value: {v!r}")


def canonical(values: Iterable[Value]) -> list:
    return sorted(values, key=value_key)


def show_value(v: Value) -> str:
    if v is BOTTOM:
        return "⊥"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return "(" + ", ".join(show_value(x) for x in v) + ")"
    return str(v)


# --- sorts -----------------------------------------------------------------

@dataclass(frozen=True)
class IntRange:
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise InterpretationError(f"empty integer range [{self.lo}, {self.hi}]")

    def values(self) -> tuple:
        return tuple(range(self.lo, self.hi + 1))

    def __contains__(self, v) -> bool:
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi


@dataclass(frozen=True)
class BoolSort:
    def values(self) -> tuple:
        return (False, True)

    def __contains__(self, v) -> bool:
        return isinstance(v, bool)


@dataclass(frozen=True)
class TupleSort:
    components: tuple

    def __post_init__(self):
        if len(self.components) < 2:
            raise InterpretationError("tuple sorts need at least two components")

    def values(self) -> tuple:
        return tuple(itertools.product(*(c.values() for c in self.components)))

    def __contains__(self, v) -> bool:
        return (isinstance(v, tuple) and len(v) == len(self.components)
                and all(x in c for x, c in zip(v, self.components)))


@dataclass(frozen=True)
class EnumSort:
    members: tuple

    def __post_init__(self):
        if not self.members:
            raise InterpretationError("explicit value lists must be nonempty")
        keys = [value_key(m) for m in self.members]
        if len(set(keys)) != len(keys):
            raise InterpretationError("explicit value lists must be duplicate-free")
        object.__setattr__(self, "members", tuple(canonical(self.members)))

    def values(self) -> tuple:
        return self.members

    def __contains__(self, v) -> bool:
        try:
            k = value_key(v)
        except TypeError:
            return False
        return any(k == value_key(m) for m in self.members)


Sort = Union[IntRange, BoolSort, TupleSort, EnumSort]


def int_bounds(sort: Sort) -> tuple[int, int] | None:
    if isinstance(sort, IntRange):
        return sort.lo, sort.hi
    if isinstance(sort, TupleSort):
        spans = [b for b in map(int_bounds, sort.components) if b]
        if spans:
            return min(b[0] for b in spans), max(b[1] for b in spans)
    if isinstance(sort, EnumSort):
        ints = [m for m in _flatten(sort.members) if isinstance(m, int) and not isinstance(m, bool)]
        if ints:
            return min(ints), max(ints)
    return None


def _flatten(values):
    for v in values:
        if isinstance(v, tuple):
            yield from _flatten(v)
        else:
            yield v


# --- function / relation tables and preferences ----------------------------

@dataclass(frozen=True)
class FunctionTable:
    """A finite function graph; ``arg_sorts`` (optional) enables totality checks."""
    arity: int
    table: Mapping
    arg_sorts: tuple | None = None


@dataclass(frozen=True)
class RelationTable:
    arity: int
    tuples: frozenset


@dataclass(frozen=True)
class Utility:
    """Preference induced by a utility term over ``outcome``; ⊥ maps to -inf."""
    expr: Term

    @classmethod
    def parse(cls, text: str) -> "Utility":
        return cls(parse_term(text))


@dataclass(frozen=True)
class Pairs:
    """Explicit preference relation: (a, b) in pairs means a is weakly preferred to b."""
    pairs: frozenset


Preference = Union[Utility, Pairs]

BUILTIN_FUNCTIONS = frozenset({"+", "-", "*", "neg", "proj", "put", "min", "max"})
BUILTIN_RELATIONS = frozenset({"=", "!=", "<", "<=", ">", ">="})


# --- compilation of terms and boolean expressions --------------------------

Compiled = Callable[[Sequence, Value], Value]


class _BottomAccess(EvalError):
    pass


def compile_term(t: Term, interp: "Interpretation", index: Mapping[str, object],
                 saturate: bool = True) -> Compiled:
    """Compile ``t`` to ``f(state, outcome)``; ``index`` maps names to state keys."""
    lo, hi = interp.int_range
    if isinstance(t, Var):
        if t.name in index:
            k = index[t.name]
            return lambda s, o: s[k]
        if t.name in interp.constants:
            v = interp.constants[t.name]
            return lambda s, o: v
        raise EvalError(f"unbound variable {t.name!r}")
    if isinstance(t, Lit):
        v = t.value
        return lambda s, o: v
    if isinstance(t, Outcome):
        if t.k is None:
            def outcome(s, o):
                if o is None or o is BOTTOM:
                    raise _BottomAccess("outcome is undefined here")
                return o
            return outcome
        j = t.k - 1

        def component(s, o):
            if not isinstance(o, tuple):
                raise _BottomAccess("outcome has no components here")
            if j >= len(o):
                raise EvalError(f"outcome has no component {j + 1}")
            return o[j]
        return component
    if isinstance(t, Tup):
        parts = [compile_term(i, interp, index, saturate) for i in t.items]
        return lambda s, o: tuple(p(s, o) for p in parts)
    if isinstance(t, App):
        args = [compile_term(a, interp, index, saturate) for a in t.args]
        fn, n = t.fn, len(args)
        if fn in interp.functions:
            table = interp.functions[fn]
            if table.arity != n:
                raise EvalError(f"{fn} expects {table.arity} arguments, got {n}")
            graph = table.table

            def lookup(s, o):
                key = tuple(a(s, o) for a in args)
                try:
                    return graph[key]
                except KeyError:
                    raise EvalError(f"{fn} is undefined at {key}") from None
            return lookup
        if n == 0 and fn in interp.constants:
            v = interp.constants[fn]
            return lambda s, o: v
        if fn in ("+", "-", "*") and n == 2:
            a, b = args
            op = {"+": operator.add, "-": operator.sub, "*": operator.mul}[fn]
            if saturate:
                return lambda s, o: min(hi, max(lo, op(a(s, o), b(s, o))))
            return lambda s, o: op(a(s, o), b(s, o))
        if fn == "neg" and n == 1:
            a = args[0]
            if saturate:
                return lambda s, o: min(hi, max(lo, -a(s, o)))
            return lambda s, o: -a(s, o)
        if fn in ("min", "max") and n == 2:
            a, b = args
            f = min if fn == "min" else max
            return lambda s, o: f(a(s, o), b(s, o))
        if fn == "proj" and n == 2:
            a, k = args

            def proj(s, o):
                tup, i = a(s, o), k(s, o)
                if not isinstance(tup, tuple) or not 1 <= i <= len(tup):
                    raise EvalError(f"proj({tup!r}, {i!r}) is undefined")
                return tup[i - 1]
            return proj
        if fn == "put" and n == 3:
            a, k, v = args

            def put(s, o):
                tup, i = a(s, o), k(s, o)
                if not isinstance(tup, tuple) or not 1 <= i <= len(tup):
                    raise EvalError(f"put({tup!r}, {i!r}, _) is undefined")
                return tup[: i - 1] + (v(s, o),) + tup[i:]
            return put
        raise EvalError(f"unknown function {fn}/{n}")
    raise TypeError(f"not a term: {t!r}")


def compile_bool(b: BoolExpr, interp: "Interpretation", index: Mapping[str, object]
                 ) -> Callable[[Sequence, Value], bool]:
    if isinstance(b, TrueB):
        return lambda s, o: True
    if isinstance(b, Not):
        a = compile_bool(b.arg, interp, index)
        return lambda s, o: not a(s, o)
    if isinstance(b, And):
        left = compile_bool(b.left, interp, index)
        right = compile_bool(b.right, interp, index)
        return lambda s, o: left(s, o) and right(s, o)
    if isinstance(b, Rel):
        args = [compile_term(a, interp, index) for a in b.args]
        op = b.op
        if op in interp.relations:
            rel = interp.relations[op]
            if rel.arity != len(args):
                raise EvalError(f"{op} expects {rel.arity} arguments, got {len(args)}")
            tuples = rel.tuples
            return lambda s, o: tuple(a(s, o) for a in args) in tuples
        if op in BUILTIN_RELATIONS and len(args) == 2:
            x, y = args
            if op == "=":
                return lambda s, o: x(s, o) == y(s, o)
            if op == "!=":
                return lambda s, o: x(s, o) != y(s, o)
            if op == "<":
                return lambda s, o: x(s, o) < y(s, o)
            if op == "<=":
                return lambda s, o: x(s, o) <= y(s, o)
            if op == ">":
                return lambda s, o: x(s, o) > y(s, o)
            return lambda s, o: x(s, o) >= y(s, o)
        raise EvalError(f"unknown relation {op}/{len(args)}")
    raise TypeError(f"not a boolean expression: {b!r}")


# --- interpretations -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Interpretation:
    """A finite sorted interpretation with per-agent preferences.

    ``int_range`` bounds built-in arithmetic (results saturate); when omitted
    it spans every integer sort, including the outcome sort.
    """
    agents: tuple
    sorts: Mapping[str, Sort]
    outcome_sort: Sort
    constants: Mapping[str, Value] = field(default_factory=dict)
    functions: Mapping[str, FunctionTable] = field(default_factory=dict)
    relations: Mapping[str, RelationTable] = field(default_factory=dict)
    preferences: Mapping[int, Preference] = field(default_factory=dict)
    int_range: tuple | None = None
    outcome_bottom: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        agents = tuple(sorted(self.agents))
        if not agents:
            raise InterpretationError("an interpretation needs at least one agent")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "sorts", dict(self.sorts))
        object.__setattr__(self, "constants", dict(self.constants))
        object.__setattr__(self, "functions", dict(self.functions))
        object.__setattr__(self, "relations", dict(self.relations))
        object.__setattr__(self, "preferences", dict(self.preferences))
        if self.int_range is None:
            spans = [b for b in map(int_bounds, [*self.sorts.values(), self.outcome_sort]) if b]
            spans += [(v, v) for v in _flatten(self.constants.values())
                      if isinstance(v, int) and not isinstance(v, bool)]
            rng = (min(b[0] for b in spans), max(b[1] for b in spans)) if spans else (0, 0)
            object.__setattr__(self, "int_range", rng)
        else:
            object.__setattr__(self, "int_range", tuple(self.int_range))
        missing = [a for a in agents if a not in self.preferences]
        if missing:
            raise InterpretationError(f"no preference given for agents {missing}")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interpretation):
            return NotImplemented
        return all(getattr(self, f) == getattr(other, f) for f in (
            "agents", "sorts", "outcome_sort", "constants", "functions",
            "relations", "preferences", "int_range", "outcome_bottom"))

    __hash__ = object.__hash__

    # outcome domain
    @property
    def outcome_values(self) -> tuple:
        """Outcome values visible to e-predicates (⊥ only if declared)."""
        vals = tuple(self.outcome_sort.values())
        return ((BOTTOM,) + vals) if self.outcome_bottom else vals

    @property
    def outcome_universe(self) -> tuple:
        """Outcome sort plus ⊥: the range of outcome functions on any run."""
        return (BOTTOM,) + tuple(self.outcome_sort.values())

    # preferences
    def utility(self, agent: int, value: Value) -> float:
        pref = self.preferences[agent]
        if not isinstance(pref, Utility):
            raise TypeError(f"agent {agent} has no utility function")
        if value is BOTTOM:
            return -math.inf
        cache = self._cache.setdefault(("u", agent), {})
        try:
            return cache[value]
        except KeyError:
            fn = self._cache.get(("uf", agent))
            if fn is None:
                fn = compile_term(pref.expr, self, {}, saturate=False)
                self._cache[("uf", agent)] = fn
            u = fn((), value)
            if isinstance(u, bool) or not isinstance(u, (int, float)):
                raise EvalError(f"utility of agent {agent} is not a number at {value!r}")
            cache[value] = u
            return u

    def geq(self, agent: int, a: Value, b: Value) -> bool:
        """a ≥_agent b."""
        pref = self.preferences[agent]
        if isinstance(pref, Utility):
            return self.utility(agent, a) >= self.utility(agent, b)
        if b is BOTTOM:
            return True
        return (a, b) in pref.pairs

    def with_preferences(self, profile: Mapping[int, Preference]) -> "Interpretation":
        return with_preferences(self, profile)

    # states
    def space(self, footprint: Iterable[str]) -> "StateSpace":
        names = tuple(sorted(set(footprint)))
        key = ("space", names)
        sp = self._cache.get(key)
        if sp is None:
            unsorted = [n for n in names if n not in self.sorts]
            if unsorted:
                raise EvalError(f"unsorted variables: {', '.join(unsorted)}")
            sp = StateSpace(names, tuple(self.sorts[n] for n in names), self.outcome_values)
            self._cache[key] = sp
        return sp


def with_preferences(interp: Interpretation, profile: Mapping[int, Preference]) -> Interpretation:
    """Copy of ``interp`` with the preference relations replaced by ``profile``."""
    missing = [a for a in interp.agents if a not in profile]
    if missing:
        raise InterpretationError(f"profile does not cover agents {missing}")
    new = Interpretation(
        agents=interp.agents, sorts=interp.sorts, outcome_sort=interp.outcome_sort,
        constants=interp.constants, functions=interp.functions,
        relations=interp.relations, preferences=dict(profile),
        int_range=interp.int_range, outcome_bottom=interp.outcome_bottom)
    report = validate_interpretation(new)
    if report.preference_violations:
        raise InterpretationError("; ".join(report.preference_violations))
    return new


@dataclass
class ValidationReport:
    preference_violations: list = field(default_factory=list)
    table_violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.preference_violations or self.table_violations)

    @property
    def violations(self) -> list:
        return self.preference_violations + self.table_violations


def validate_interpretation(interp: Interpretation) -> ValidationReport:
    """Exhaustively check preorder, worst-element and table-totality conditions."""
    report = ValidationReport()
    universe = interp.outcome_universe
    n = len(universe)
    for agent in interp.agents:
        geq = np.array([[interp.geq(agent, a, b) for b in universe] for a in universe],
                       dtype=bool)
        for i in np.flatnonzero(~geq.diagonal()):
            report.preference_violations.append(
                f"agent {agent}: reflexivity fails at {show_value(universe[i])}")
        composed = (geq.astype(np.int64) @ geq.astype(np.int64)) > 0
        for i, k in zip(*np.nonzero(composed & ~geq)):
            j = next(j for j in range(n) if geq[i, j] and geq[j, k])
            report.preference_violations.append(
                f"agent {agent}: transitivity fails: {show_value(universe[i])} ≥ "
                f"{show_value(universe[j])} ≥ {show_value(universe[k])} but not "
                f"{show_value(universe[i])} ≥ {show_value(universe[k])}")
        for i in np.flatnonzero(~geq[:, 0]):
            report.preference_violations.append(
                f"agent {agent}: {show_value(universe[i])} is not weakly preferred to ⊥")
    for name, table in interp.functions.items():
        if table.arg_sorts is None:
            continue
        for args in itertools.product(*(s.values() for s in table.arg_sorts)):
            if args not in table.table:
                report.table_violations.append(f"function {name} is undefined at {args}")
    return report


# --- state spaces ----------------------------------------------------------

class StateSpace:
    """The finite set of states over a sorted footprint, plus the outcome values."""

    def __init__(self, footprint: tuple, sorts: tuple, outcomes: tuple):
        self.footprint = footprint
        self.sorts = sorts
        self.outcomes = outcomes
        self.index = {name: i for i, name in enumerate(footprint)}
        self._outcome_set = frozenset(outcomes)

    def __eq__(self, other) -> bool:
        return (isinstance(other, StateSpace) and self.footprint == other.footprint
                and self.sorts == other.sorts and self.outcomes == other.outcomes)

    def __hash__(self) -> int:
        return hash((self.footprint, self.sorts))

    def __repr__(self) -> str:
        return f"StateSpace({', '.join(self.footprint)})"

    @property
    def size(self) -> int:
        return math.prod(len(s.values()) for s in self.sorts)

    def states(self) -> Iterator[tuple]:
        return itertools.product(*(s.values() for s in self.sorts))

    def as_dict(self, state: Sequence) -> dict:
        return dict(zip(self.footprint, state))

    def from_dict(self, values: Mapping[str, Value]) -> tuple:
        missing = [n for n in self.footprint if n not in values]
        if missing:
            raise EvalError(f"state does not bind {', '.join(missing)}")
        state = tuple(values[n] for n in self.footprint)
        for name, v, sort in zip(self.footprint, state, self.sorts):
            if v not in sort:
                raise EvalError(f"{name} = {v!r} is outside its sort")
        return state

    def state(self, state) -> tuple:
        return self.from_dict(state) if isinstance(state, Mapping) else tuple(state)

    def assign(self, state: tuple, name: str, value: Value) -> tuple:
        """s[x ↦ v]; integers are clamped into x's range, other strays are errors."""
        i = self.index[name]
        sort = self.sorts[i]
        if value not in sort:
            if isinstance(sort, IntRange) and isinstance(value, int) and not isinstance(value, bool):
                value = min(sort.hi, max(sort.lo, value))
            else:
                raise EvalError(f"value {value!r} is outside the sort of {name}")
        return state[:i] + (value,) + state[i + 1:]

    def show(self, state: Sequence) -> str:
        return "{" + ", ".join(f"{n}↦{show_value(v)}" for n, v in zip(self.footprint, state)) + "}"


def eval_term(t: Term, s: Mapping[str, Value], interp: Interpretation) -> Value:
    """Evaluate ``t`` at the state ``s`` (a name → value mapping)."""
    return compile_term(t, interp, {n: n for n in s})(s, None)


def eval_bool(b: BoolExpr, s: Mapping[str, Value], interp: Interpretation) -> bool:
    return compile_bool(b, interp, {n: n for n in s})(s, None)


# --- predicates and e-predicates -------------------------------------------

class Predicate:
    """A set of states, given by a membership test."""

    def __init__(self, space: StateSpace, test: Callable[[tuple], bool],
                 formula: BoolExpr | None = None, label: str | None = None):
        self.space = space
        self._test = test
        self.formula = formula
        self.label = label or (show_bool(formula) if formula is not None else "predicate")

    def __repr__(self) -> str:
        return f"Predicate({self.label})"

    def holds(self, state) -> bool:
        return bool(self._test(self.space.state(state)))

    def __contains__(self, state) -> bool:
        return self.holds(state)

    def complement(self) -> "Predicate":
        formula = Not(self.formula) if self.formula is not None else None
        return Predicate(self.space, lambda s: not self._test(s), formula,
                         f"¬({self.label})")

    def states(self) -> Iterator[tuple]:
        return (s for s in self.space.states() if self._test(s))

    def as_epredicate(self) -> "EPredicate":
        full = frozenset(self.space.outcomes)
        return EPredicate(self.space, lambda s: full if self._test(s) else frozenset(),
                          label=self.label)


def predicate(b: BoolExpr | str, interp: Interpretation, footprint: Iterable[str]) -> Predicate:
    if isinstance(b, str):
        b = parse_formula(b)
    if uses_outcome(b):
        raise EvalError("a state predicate cannot mention the outcome")
    space = interp.space(footprint)
    _check_free(bool_vars(b), space, interp)
    test = compile_bool(b, interp, space.index)
    return Predicate(space, lambda s: test(s, None), b)


class EPredicate:
    """A set of e-states (state, outcome), queried through per-state fibers.

    Fibers are computed lazily by ``fiber_fn`` and cached; ``formula`` is kept
    when the e-predicate is the extension of a formula.
    """

    def __init__(self, space: StateSpace, fiber_fn: Callable[[tuple], frozenset],
                 formula: BoolExpr | None = None, label: str | None = None):
        self.space = space
        self._fiber_fn = fiber_fn
        self._cache: dict = {}
        self.formula = formula
        self.label = label or (show_bool(formula) if formula is not None else "e-predicate")

    def __repr__(self) -> str:
        return f"EPredicate({self.label})"

    def fiber(self, state) -> frozenset:
        if not isinstance(state, tuple):
            state = self.space.state(state)
        try:
            return self._cache[state]
        except KeyError:
            f = self._fiber_fn(state)
            self._cache[state] = f
            return f

    def __contains__(self, estate) -> bool:
        state, o = estate
        return o in self.fiber(state)

    def items(self) -> Iterator[tuple]:
        """All e-states in canonical order."""
        for s in self.space.states():
            for o in canonical(self.fiber(s)):
                yield s, o

    def __iter__(self):
        return self.items()

    def count(self) -> int:
        return sum(len(self.fiber(s)) for s in self.space.states())

    def is_empty(self) -> bool:
        return not any(self.fiber(s) for s in self.space.states())

    def find_outside(self, other: "EPredicate") -> tuple | None:
        """Canonically least e-state of self not in other, or None if self ⊆ other."""
        _same_space(self, other)
        for s in self.space.states():
            extra = self.fiber(s) - other.fiber(s)
            if extra:
                return s, canonical(extra)[0]
        return None

    def issubset(self, other: "EPredicate") -> bool:
        return self.find_outside(other) is None

    def __le__(self, other: "EPredicate") -> bool:
        return self.issubset(other)

    def set_equal(self, other: "EPredicate") -> bool:
        return self is other or (self.issubset(other) and other.issubset(self))

    def difference_witness(self, other: "EPredicate") -> tuple | None:
        """An e-state in exactly one of the two, or None when equal."""
        if self is other:
            return None
        return self.find_outside(other) or other.find_outside(self)

    def complement(self) -> "EPredicate":
        full = frozenset(self.space.outcomes)
        return EPredicate(self.space, lambda s: full - self.fiber(s),
                          Not(self.formula) if self.formula is not None else None,
                          f"¬({self.label})")

    def intersect(self, other: "EPredicate") -> "EPredicate":
        _same_space(self, other)
        formula = (And(self.formula, other.formula)
                   if self.formula is not None and other.formula is not None else None)
        return EPredicate(self.space, lambda s: self.fiber(s) & other.fiber(s), formula,
                          f"({self.label}) ∧ ({other.label})")

    def union(self, other: "EPredicate") -> "EPredicate":
        _same_space(self, other)
        return EPredicate(self.space, lambda s: self.fiber(s) | other.fiber(s),
                          label=f"({self.label}) ∨ ({other.label})")

    def materialize(self) -> "EPredicate":
        fibers = {s: self.fiber(s) for s in self.space.states()}
        return explicit(self.space, fibers, label=self.label)


def explicit(space: StateSpace, fibers: Mapping[tuple, Iterable[Value]],
             label: str = "explicit") -> EPredicate:
    """E-predicate from a state → outcomes table (missing states have empty fibers)."""
    table = {tuple(s): frozenset(os) for s, os in fibers.items()}
    allowed = frozenset(space.outcomes)
    for s, os in table.items():
        if not os <= allowed:
            raise EvalError(f"fiber at {space.show(s)} leaves the outcome sort")
    empty = frozenset()
    return EPredicate(space, lambda s: table.get(s, empty), label=label)


def _same_space(a, b):
    if a.space != b.space:
        raise EvalError(f"footprint mismatch: {a.space.footprint} vs {b.space.footprint}")


def _check_free(names: Iterable[str], space: StateSpace, interp: Interpretation):
    for n in names:
        if n not in space.index and n not in interp.constants:
            if n in interp.sorts:
                raise EvalError(f"variable {n!r} is not in the footprint")
            raise EvalError(f"unsorted variable {n!r}")


def extension(phi: BoolExpr | str, interp: Interpretation, footprint: Iterable[str]) -> EPredicate:
    """The e-predicate {(s, o) | I, s ⊨ φ with outcome ↦ o} over the footprint."""
    if isinstance(phi, str):
        phi = parse_formula(phi)
    space = interp.space(footprint)
    _check_free(bool_vars(phi), space, interp)
    test = compile_bool(phi, interp, space.index)
    outcomes = space.outcomes

    def fiber(s):
        out = []
        for o in outcomes:
            try:
                if test(s, o):
                    out.append(o)
            except _BottomAccess:
                pass
        return frozenset(out)
    return EPredicate(space, fiber, phi)


def substitute(P: EPredicate, x: str, t: Term | str, interp: Interpretation) -> EPredicate:
    """P[x/t]: fiber at s is P's fiber at s with x ↦ value of t."""
    if isinstance(t, str):
        t = parse_term(t, formula=False)
    space = P.space
    if x not in space.index:
        raise EvalError(f"{x!r} is not in the footprint")
    _check_free(term_vars(t), space, interp)
    value = compile_term(t, interp, space.index)
    return EPredicate(space, lambda s: P.fiber(space.assign(s, x, value(s, None))),
                      label=f"({P.label})[{x}/{show_term(t)}]")


def mix_intersect(P1: Predicate, P2: EPredicate) -> EPredicate:
    """{(s, o) ∈ P2 | s ∈ P1}."""
    _same_space(P1, P2)
    empty = frozenset()
    return EPredicate(P2.space, lambda s: P2.fiber(s) if P1._test(s) else empty,
                      label=f"({P1.label}) ∩ ({P2.label})")


def is_functional(Q: EPredicate) -> bool:
    return all(len(Q.fiber(s)) == 1 for s in Q.space.states())


def lift_predicate(P: Predicate, d: Value) -> EPredicate:
    """P* = {(s, d) | s ∈ P}."""
    if d not in P.space.outcomes:
        raise EvalError(f"{show_value(d)} is outside the outcome sort")
    single, empty = frozenset([d]), frozenset()
    return EPredicate(P.space, lambda s: single if P._test(s) else empty,
                      label=f"({P.label})*")


def full_epredicate(space: StateSpace) -> EPredicate:
    full = frozenset(space.outcomes)
    return EPredicate(space, lambda s: full, TrueB())


def empty_epredicate(space: StateSpace) -> EPredicate:
    empty = frozenset()
    return EPredicate(space, lambda s: empty, Not(TrueB()))
