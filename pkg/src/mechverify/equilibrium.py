"""Outcome functions, Nash and subgame-perfect equilibria, supportable outcomes and wpre."""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass
from typing import Iterable, Mapping

from .interpretation import (BOTTOM, EPredicate, Interpretation, StateSpace, Utility,
                             canonical, value_key)
from .semantics import (INFINITE_LEAF, SILENT_NODE, TERMINAL_LEAF, Config,
                        GameTree, Node, NonTerminationError, Silent, Stepper, divergence_limit,
                        diverges, joint_action, run_of)
from .syntax import Mechanism, mechanism_vars, summarize

DEFAULT_DEPTH_CAP = 256


def default_depth_cap() -> int:
    raw = os.environ.get("MPL_DEPTH_CAP")
    return int(raw) if raw else DEFAULT_DEPTH_CAP


# --- running games ---------------------------------------------------------

def outcome_of(tree: GameTree, profile, ohat: Mapping[tuple, object], node: Node | None = None):
    """ô(σ) in the subgame at ``node``."""
    return ohat[run_of(tree, profile, node).leaf.path]


def deviation_outcomes(agent: int, profile, tree: GameTree, ohat: Mapping[tuple, object],
                       node: Node | None = None) -> frozenset:
    """{ô((τ, σ⁻ⁱ)) | τ a strategy of ``agent``} in the subgame at ``node``.

    Computed bottom-up: the agent's coordinate ranges freely at its own
    choice nodes, everything else follows σ.
    """
    start = node or tree.root
    order = tree.descendants(start)
    memo: dict = {}
    for n in reversed(order):
        if n.is_leaf:
            memo[n.id] = frozenset([ohat[n.path]])
        elif n.kind == SILENT_NODE:
            memo[n.id] = memo[n.children[None].id]
        elif agent not in n.agents:
            memo[n.id] = memo[n.children[joint_action(profile, n)].id]
        else:
            k = n.agents.index(agent)
            fixed = joint_action(profile, n)
            out = set()
            for joint, child in n.children.items():
                if all(joint[j] == fixed[j] for j in range(len(fixed)) if j != k):
                    out |= memo[child.id]
            memo[n.id] = frozenset(out)
    return memo[start.id]


def is_nash(profile, tree: GameTree, ohat: Mapping[tuple, object], node: Node | None = None) -> bool:
    interp = tree.interp
    o = outcome_of(tree, profile, ohat, node)
    return all(interp.geq(i, o, dev)
               for i in interp.agents
               for dev in deviation_outcomes(i, profile, tree, ohat, node))


def is_spe(profile, tree: GameTree, ohat: Mapping[tuple, object]) -> bool:
    return all(is_nash(profile, tree, ohat, n) for n in tree.nodes)


def admissible(tree: GameTree, Q: EPredicate, ohat: Mapping[tuple, object]) -> bool:
    """ô ∈ Ô_Q: every terminal leaf lands in Q's fiber."""
    return all(ohat[n.path] in Q.fiber(n.state) for n in tree.leaves() if n.kind == TERMINAL_LEAF)


# --- the support recurrence ------------------------------------------------

def _deviations(actions: Iterable[tuple], agents: tuple):
    """For each joint action: per agent position, the cells reachable by unilateral deviation."""
    actions = list(actions)
    by_rest: dict = {}
    for a in actions:
        for k in range(len(agents)):
            by_rest.setdefault((k, a[:k] + a[k + 1:]), []).append(a)
    return {a: [[b for b in by_rest[(k, a[:k] + a[k + 1:])] if b != a]
                for k in range(len(agents))]
            for a in actions}


def _punishable(interp: Interpretation, agent: int, cands: Iterable, pool: frozenset) -> list:
    """Candidates o with o ≥_agent o' for some o' in ``pool``."""
    pref = interp.preferences[agent]
    if isinstance(pref, Utility):
        floor = min(interp.utility(agent, o) for o in pool)
        return [o for o in cands if interp.utility(agent, o) >= floor]
    return [o for o in cands if any(interp.geq(agent, o, p) for p in pool)]


def combine_choice(interp: Interpretation, agents: tuple, supports: Mapping[tuple, frozenset]
                   ) -> frozenset:
    """Supp of a one-shot choice node from the Supp sets of its children.

    o is supported iff some cell a* supports o and every unilateral
    deviation b by i can be answered with o' ∈ Supp(b) such that o ≥_i o'.
    Empty if any child supports nothing: that subgame has no equilibrium.
    """
    if any(not s for s in supports.values()):
        return frozenset()
    devs = _deviations(supports, agents)
    out = set()
    for a, cands in supports.items():
        cands = [o for o in cands if o not in out]
        for k, agent in enumerate(agents):
            for b in devs[a][k]:
                if not cands:
                    break
                cands = _punishable(interp, agent, cands, supports[b])
        out.update(cands)
    return frozenset(out)


def choice_witness(interp: Interpretation, agents: tuple, supports: Mapping[tuple, frozenset],
                   target) -> tuple | None:
    """Least cell a* and least punishments realising ``target`` at a choice node.

    Returns (a*, {cell: outcome}) covering every cell, or None.
    """
    devs = _deviations(supports, agents)
    for a in supports:
        if target not in supports[a]:
            continue
        assigned = {a: target}
        ok = True
        for k, agent in enumerate(agents):
            for b in devs[a][k]:
                good = [p for p in canonical(supports[b]) if interp.geq(agent, target, p)]
                if not good:
                    ok = False
                    break
                assigned[b] = good[0]
            if not ok:
                break
        if ok:
            for cell, sup in supports.items():
                assigned.setdefault(cell, canonical(sup)[0])
            return a, assigned
    return None


@dataclass
class SupportTable:
    """Supp(n) for every node of a tree, keyed by node id."""
    tree: GameTree
    supp: dict

    def __getitem__(self, node: Node) -> frozenset:
        return self.supp[node.id]

    @property
    def root(self) -> frozenset:
        return self.supp[self.tree.root.id]


def supportable_outcomes(tree: GameTree, Q: EPredicate) -> SupportTable:
    if Q.space != tree.space:
        raise ValueError("postcondition and tree use different footprints")
    interp = tree.interp
    universe = frozenset(interp.outcome_universe)
    supp: dict = {}
    for n in reversed(tree.nodes):
        if n.kind == TERMINAL_LEAF:
            supp[n.id] = Q.fiber(n.state)
        elif n.kind == INFINITE_LEAF:
            supp[n.id] = universe
        elif n.kind == SILENT_NODE:
            supp[n.id] = supp[n.children[None].id]
        else:
            supp[n.id] = combine_choice(
                interp, n.agents, {j: supp[c.id] for j, c in n.children.items()})
    if any(not supp[n.id] for n in tree.nodes if n.kind == TERMINAL_LEAF):
        supp = {k: frozenset() for k in supp}
    return SupportTable(tree, supp)


@dataclass
class Witness:
    """An outcome function and strategy profile realising an SPE outcome."""
    outcome: object
    ohat: dict
    profile: dict

    def to_json(self) -> dict:
        sigma = [[jpath(p), a, jvalue(v)]
                 for a, strat in sorted(self.profile.items())
                 for p, v in sorted(strat.items(), key=lambda kv: _path_key(kv[0]))]
        ohat = [[jpath(p), jvalue(v)]
                for p, v in sorted(self.ohat.items(), key=lambda kv: _path_key(kv[0]))]
        return {"outcome": jvalue(self.outcome), "sigma": sigma, "ohat": ohat}


def _path_key(path):
    return tuple((0,) if e is None else (1, value_key(e)) for e in path)


def jvalue(v):
    if v is BOTTOM:
        return None
    if isinstance(v, tuple):
        return [jvalue(x) for x in v]
    return v


def jpath(path):
    return [None if e is None else jvalue(e) for e in path]


def find_spe_with_outcome(tree: GameTree, Q: EPredicate, target,
                          table: SupportTable | None = None) -> Witness | None:
    """Rebuild (ô, σ) with ô ∈ Ô_Q, σ an SPE and ô(σ) = target, or None."""
    table = table or supportable_outcomes(tree, Q)
    if target not in table.root:
        return None
    interp = tree.interp
    ohat: dict = {}
    profile: dict = {a: {} for a in interp.agents}
    todo = [(tree.root, target)]
    while todo:
        n, o = todo.pop()
        if n.is_leaf:
            ohat[n.path] = o
        elif n.kind == SILENT_NODE:
            todo.append((n.children[None], o))
        else:
            found = choice_witness(interp, n.agents,
                                   {j: table[c] for j, c in n.children.items()}, o)
            assert found is not None, "support table and witness search disagree"
            a_star, assigned = found
            for agent, v in zip(n.agents, a_star):
                profile[agent][n.path] = v
            for joint, child in n.children.items():
                todo.append((child, assigned[joint]))
    return Witness(target, ohat, profile)


# --- weakest preconditions -------------------------------------------------

class Solver:
    """Supp of ⟨γ, s⟩ computed on configurations with memoisation.

    Equal to ``supportable_outcomes`` on the unfolded tree, without building it.
    Memo entries record the tallest internal depth below the configuration so
    results are reused only where the depth cap cannot bite.
    """

    def __init__(self, interp: Interpretation, space: StateSpace, Q: EPredicate,
                 depth_cap: int, strict: bool = False):
        if depth_cap < 1:
            raise ValueError("depth cap must be at least 1")
        self.interp, self.space, self.Q = interp, space, Q
        self.cap, self.strict = depth_cap, strict
        self.stepper = Stepper(interp, space)
        self.universe = frozenset(interp.outcome_universe)
        self._free: dict = {}
        self._capped: dict = {}
        self.diverged = False

    def root(self, mech: Mechanism, state: tuple) -> tuple[frozenset, bool]:
        """(Supp of the tree of ⟨mech, state⟩, whether a branch was capped)."""
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 8 * self.cap + 2000))
        try:
            supp, _, capped = self._supp(Config(mech, state), 1)
        finally:
            sys.setrecursionlimit(limit)
        return supp, capped

    def _supp(self, c: Config, depth: int):
        """(supp, height, capped); height is the depth offset of the lowest internal node.

        An empty leaf fiber needs no special casing: emptiness propagates to
        the root through ``combine_choice``.
        """
        if c.mech is None:
            return self.Q.fiber(c.state), -1, False
        if depth >= self.cap:
            divergent = diverges(self.stepper, c, divergence_limit(self.cap))
            self.diverged = self.diverged or divergent
            if self.strict and not divergent:
                raise NonTerminationError(
                    f"branch exceeds depth cap {self.cap} at {self.space.show(c.state)}")
            return self.universe, 0, not divergent
        hit = self._free.get(c)
        if hit is not None and depth + hit[1] < self.cap:
            return hit
        hit = self._capped.get((c, depth))
        if hit is not None:
            return hit
        result = self.stepper.step(c)
        if isinstance(result, Silent):
            s, h, capped = self._supp(result.succ, depth + 1)
            out = (s, h + 1, capped)
        else:
            supports, h, capped = {}, 0, False
            for joint in result.actions:
                s, hc, cc = self._supp(result.successor(joint), depth + 1)
                supports[joint] = s
                h, capped = max(h, hc + 1), capped or cc
            out = (combine_choice(self.interp, result.agents, supports), h, capped)
        if out[2]:
            self._capped[(c, depth)] = out
        else:
            self._free[c] = out
        return out


class WPre(EPredicate):
    """wpre(γ, Q, I) with fibers computed on demand; remembers capped states."""

    def __init__(self, mech: Mechanism, Q: EPredicate, interp: Interpretation,
                 depth_cap: int | None = None, strict: bool = False):
        self.mech, self.Q, self.interp = mech, Q, interp
        self.depth_cap = depth_cap or default_depth_cap()
        self.solver = Solver(interp, Q.space, Q, self.depth_cap, strict)
        self.capped_states: set = set()
        missing = set(mechanism_vars(mech)) - set(Q.space.footprint)
        if missing:
            raise ValueError(f"mechanism variables outside the footprint: {sorted(missing)}")
        allowed = frozenset(Q.space.outcomes)

        def fiber(s):
            supp, capped = self.solver.root(mech, s)
            if capped:
                self.capped_states.add(s)
            return supp & allowed
        super().__init__(Q.space, fiber, label=f"wpre({summarize(mech)}, {Q.label})")

    def exact_at(self, state) -> bool:
        self.fiber(state)
        return state not in self.capped_states

    @property
    def inexact(self) -> bool:
        return bool(self.capped_states)

    @property
    def diverged(self) -> bool:
        """Some consulted tree had a provably infinite branch."""
        return self.solver.diverged


def wpre(mech: Mechanism, Q: EPredicate, interp: Interpretation,
         depth_cap: int | None = None, strict: bool = False) -> WPre:
    return WPre(mech, Q, interp, depth_cap, strict)
