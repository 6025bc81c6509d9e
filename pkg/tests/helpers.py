"""Shared builders and brute-force oracles for the test suite.

The oracles deliberately avoid the library's dynamic programming: they
enumerate outcome functions, strategy profiles and unilateral deviations.
"""

from __future__ import annotations

import itertools
import random

from mechverify.config import interpretation_from_dict
from mechverify.interpretation import (FunctionTable, Interpretation, IntRange, Pairs,
                                       TupleSort, Utility, explicit)
from mechverify.semantics import INFINITE_LEAF, TERMINAL_LEAF, run_of
from mechverify.syntax import App, Outcome

PAIR = TupleSort((IntRange(-4, 4), IntRange(-4, 4)))

PSI = ("(x1 >= x2 -> outcome[1] = v1 - x2 and outcome[2] = 0) and "
       "(x1 < x2 -> outcome[1] = 0 and outcome[2] = v2 - x1)")
PHI = ("(v1 >= v2 -> outcome[1] = v1 - v2 and outcome[2] = 0) and "
       "(v1 < v2 -> outcome[1] = 0 and outcome[2] = v2 - v1)")


def auction(v1: int, v2: int) -> Interpretation:
    """Two bidders with bids in [0, 4] and payoffs as outcome components."""
    return Interpretation(
        agents=(1, 2), sorts={"x1": IntRange(0, 4), "x2": IntRange(0, 4)}, outcome_sort=PAIR,
        constants={"v1": v1, "v2": v2},
        preferences={1: Utility.parse("outcome[1]"), 2: Utility.parse("outcome[2]")})


def dutch() -> Interpretation:
    return interpretation_from_dict({
        "agents": [1, 2],
        "sorts": {n: {"int": [0, 4]} for n in ("p", "v1", "v2", "init")}
        | {"x1": {"int": [0, 1]}, "x2": {"int": [0, 1]}, "w": {"int": [0, 2]}},
        "outcome_sort": {"tuple": [{"int": [-4, 4]}, {"int": [-4, 4]}]},
        "preferences": {"1": {"utility": "outcome[1]"}, "2": {"utility": "outcome[2]"}}})


DUTCH_FOOTPRINT = ["init", "p", "v1", "v2", "w", "x1", "x2"]
DUTCH_BODY = ("ch {1,2} (x1, x2); if x1 > 0 then w := 1 "
              "else if x2 > 0 then w := 2 else p := p - 1 fi fi")
DUTCH = f"p := init; w := 0; while p > 0 and w = 0 do {DUTCH_BODY} od"
DUTCH_Q = ("(w = 1 -> outcome[1] = v1 - p and outcome[2] = 0) and "
           "(w = 2 -> outcome[1] = 0 and outcome[2] = v2 - p) and "
           "(w = 0 -> outcome[1] = 0 and outcome[2] = 0)")
INV = ("v1 >= v2 and v2 > 0 and p >= v2 and (w = 0 or w = 1 or w = 2) and "
       "(w = 1 -> outcome[1] = v1 - p and outcome[2] = 0) and "
       "(w = 2 -> outcome[1] = 0 and outcome[2] = v2 - p) and "
       "(w = 0 -> outcome[1] = v1 - v2 and outcome[2] = 0)")


# --- random small interpretations ------------------------------------------

def preorder_pairs(rng: random.Random, values) -> Pairs:
    """A random reflexive-transitive relation (often partial)."""
    values = list(values)
    rel = {(a, a) for a in values}
    for a, b in itertools.permutations(values, 2):
        if rng.random() < 0.3:
            rel.add((a, b))
    changed = True
    while changed:
        changed = False
        for (a, b), (c, d) in itertools.product(list(rel), repeat=2):
            if b == c and (a, d) not in rel:
                rel.add((a, d))
                changed = True
    return Pairs(frozenset(rel))


def random_interp(rng: random.Random, variables: dict, outcomes: int = 3,
                  partial: bool | None = None, bottom: bool = False) -> Interpretation:
    """Agents 1 and 2 over the given variable sorts; outcomes are 0..outcomes-1."""
    osort = IntRange(0, outcomes - 1)
    prefs, functions = {}, {}
    for agent in (1, 2):
        use_pairs = rng.random() < 0.3 if partial is None else partial
        if use_pairs:
            prefs[agent] = preorder_pairs(rng, osort.values())
        else:
            name = f"u{agent}"
            functions[name] = FunctionTable(1, {(o,): rng.randint(0, 3) for o in osort.values()},
                                            (osort,))
            prefs[agent] = Utility(App(name, (Outcome(),)))
    return Interpretation(agents=(1, 2), sorts=variables, outcome_sort=osort,
                          functions=functions, preferences=prefs, outcome_bottom=bottom)


def random_fibers(rng: random.Random, space, max_size: int = 3, empty_rate: float = 0.05):
    outcomes = list(space.outcomes)
    fibers = {}
    for s in space.states():
        if rng.random() < empty_rate:
            fibers[s] = []
        else:
            k = rng.randint(1, min(max_size, len(outcomes)))
            fibers[s] = rng.sample(outcomes, k)
    return explicit(space, fibers, label="random")


def random_subset(rng: random.Random, P, keep: float = 0.6):
    fibers = {s: [o for o in P.fiber(s) if rng.random() < keep] for s in P.space.states()}
    return explicit(P.space, fibers, label="subset")


# --- brute-force oracles ---------------------------------------------------

def agent_nodes(tree, agent, root=None):
    nodes = tree.descendants(root or tree.root)
    return [n for n in nodes if n.kind == "choice" and agent in n.agents]


def _values_for(node, agent):
    k = node.agents.index(agent)
    return sorted({joint[k] for joint in node.children})


def strategies(tree, agent, root=None):
    """Every strategy of ``agent`` restricted to the subtree at ``root``."""
    nodes = agent_nodes(tree, agent, root)
    for values in itertools.product(*(_values_for(n, agent) for n in nodes)):
        yield {n.path: v for n, v in zip(nodes, values)}


def profiles(tree):
    choice = tree.choice_nodes()
    for joints in itertools.product(*(list(n.children) for n in choice)):
        prof = {a: {} for a in tree.interp.agents}
        for n, joint in zip(choice, joints):
            for a, v in zip(n.agents, joint):
                prof[a][n.path] = v
        yield prof


def brute_deviation_outcomes(agent, profile, tree, ohat, node=None):
    out = set()
    for tau in strategies(tree, agent, node):
        dev = {a: dict(s) for a, s in profile.items()}
        dev[agent] = {**dev[agent], **tau}
        out.add(ohat[run_of(tree, dev, node).leaf.path])
    return out


def brute_is_spe(profile, tree, ohat) -> bool:
    interp = tree.interp
    for node in tree.nodes:
        o = ohat[run_of(tree, profile, node).leaf.path]
        for agent in interp.agents:
            for dev in brute_deviation_outcomes(agent, profile, tree, ohat, node):
                if not interp.geq(agent, o, dev):
                    return False
    return True


def outcome_functions(tree, Q):
    leaves = tree.leaves()
    universe = tree.interp.outcome_universe
    choices = [sorted(Q.fiber(n.state), key=repr) if n.kind == TERMINAL_LEAF else list(universe)
               for n in leaves]
    for values in itertools.product(*choices):
        yield {n.path: v for n, v in zip(leaves, values)}


def brute_support(tree, Q) -> frozenset:
    """Root outcomes of SPEs over all admissible outcome functions."""
    found = set()
    all_profiles = list(profiles(tree))
    for ohat in outcome_functions(tree, Q):
        for prof in all_profiles:
            o = ohat[run_of(tree, prof).leaf.path]
            if o in found:
                continue
            if brute_is_spe(prof, tree, ohat):
                found.add(o)
    return frozenset(found)


def has_infinite_leaf(tree) -> bool:
    return any(n.kind == INFINITE_LEAF for n in tree.nodes)


# --- random games ----------------------------------------------------------

GAME_SHAPES = {
    "simultaneous": "ch {1,2} (a, b)",
    "single": "ch {1} (a)",
    "sequential": "ch {1} (a); ch {2} (b)",
    "two-level": "ch {1,2} (a, b); if a = b then ch {1} (c) else c := 0 fi",
    "loop": "while a = 0 do ch {1} (a) od",
}


def random_game(rng: random.Random, shape: str | None = None):
    """(interp, mechanism source, initial state, Q) for a small random game."""
    shape = shape or rng.choice(sorted(GAME_SHAPES))
    sizes = {v: rng.randint(1, 2) for v in ("a", "b", "c")}
    sorts = {v: IntRange(0, n - 1) for v, n in sizes.items()}
    interp = random_interp(rng, sorts, outcomes=rng.randint(2, 4))
    space = interp.space(["a", "b", "c"])
    Q = random_fibers(rng, space, max_size=2 if shape == "two-level" else 3)
    initial = rng.choice(list(space.states()))
    return interp, GAME_SHAPES[shape], initial, Q


# --- random mechanisms -----------------------------------------------------

_TERMS = ["0", "1", "x + 1", "x - 1", "y", "x + y", "y - x"]
_CONDS = ["x = y", "x > 0", "y > x", "not x = 1", "x > 0 and y > 0"]


def _assign(rng, var):
    return f"{var} := {rng.choice(_TERMS)}"


def _choice(rng, allowed):
    agents = rng.choice([[1], [2], [1, 2]][:3 if len(allowed) > 1 else 2])
    vars_ = rng.sample(allowed, len(agents))
    return f"ch {{{','.join(map(str, agents))}}} ({', '.join(vars_)})"


def random_mechanism(rng: random.Random, depth: int = 3, allowed=("x", "y"),
                     loops: bool = True) -> str:
    """MPL source over x and y with AST depth at most ``depth``.

    Loops count x down and their bodies never write x, so every run ends.
    """
    allowed = list(allowed)
    kinds = ["assign", "choice"] + (["seq", "if"] if depth > 1 else [])
    if loops and depth > 2 and "x" in allowed:
        kinds.append("while")
    kind = rng.choice(kinds)
    if kind == "assign":
        return _assign(rng, rng.choice(allowed))
    if kind == "choice":
        return _choice(rng, allowed)
    if kind == "seq":
        return (f"{random_mechanism(rng, depth - 1, allowed, loops)}; "
                f"{random_mechanism(rng, depth - 1, allowed, loops)}")
    if kind == "if":
        return (f"if {rng.choice(_CONDS)} then {random_mechanism(rng, depth - 1, allowed, loops)} "
                f"else {random_mechanism(rng, depth - 1, allowed, loops)} fi")
    inner = random_mechanism(rng, 1, ["y"], loops=False)
    return f"while x > 0 do {inner}; x := x - 1 od"


def random_setting(rng: random.Random):
    """An interpretation over x, y with sorts of size at most 3 and its state space."""
    sorts = {v: IntRange(0, rng.randint(1, 2)) for v in ("x", "y")}
    interp = random_interp(rng, sorts, outcomes=rng.randint(2, 3))
    return interp, interp.space(["x", "y"])
