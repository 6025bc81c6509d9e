"""Structured operational semantics: configurations, steps and game trees."""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple

from .interpretation import EvalError, Interpretation, StateSpace, compile_bool, compile_term
from .syntax import Assign, Choice, If, Mechanism, Seq, While, mechanism_vars


class NonTerminationError(RuntimeError):
    """A branch reached the depth cap while running in strict mode."""


class Config(NamedTuple):
    """A configuration ⟨γ, s⟩; ``mech`` is None for the empty mechanism Λ."""
    mech: Mechanism | None
    state: tuple


@dataclass(frozen=True)
class Terminal:
    pass


@dataclass(frozen=True)
class Silent:
    succ: Config


@dataclass(frozen=True)
class ChoiceStep:
    """A move by ``agents`` (ascending) choosing ``vars``; ``actions`` lists joint actions."""
    agents: tuple
    vars: tuple
    actions: tuple
    successor: Callable[[tuple], Config] = field(compare=False)


TERMINAL = Terminal()
StepResult = Terminal | Silent | ChoiceStep


class Stepper:
    """The transition relation for one interpretation and state space.

    Compiled guards and terms are cached per AST node.
    """

    def __init__(self, interp: Interpretation, space: StateSpace):
        self.interp = interp
        self.space = space
        self._terms: dict = {}
        self._conds: dict = {}
        self._actions: dict = {}

    def _term(self, t):
        f = self._terms.get(t)
        if f is None:
            f = self._terms[t] = compile_term(t, self.interp, self.space.index)
        return f

    def _cond(self, b):
        f = self._conds.get(b)
        if f is None:
            f = self._conds[b] = compile_bool(b, self.interp, self.space.index)
        return f

    def actions(self, choice: Choice) -> tuple:
        acts = self._actions.get(choice)
        if acts is None:
            for v in choice.vars:
                if v not in self.space.index:
                    raise EvalError(f"choice variable {v!r} is not in the footprint")
            sorts = [self.space.sorts[self.space.index[v]] for v in choice.vars]
            acts = self._actions[choice] = tuple(itertools.product(*(s.values() for s in sorts)))
        return acts

    def step(self, config: Config) -> StepResult:
        m, s = config
        if m is None:
            return TERMINAL
        if isinstance(m, Assign):
            return Silent(Config(None, self.space.assign(s, m.var, self._term(m.term)(s, None))))
        if isinstance(m, Choice):
            space, names = self.space, m.vars

            def successor(joint, s=s):
                for name, v in zip(names, joint):
                    s = space.assign(s, name, v)
                return Config(None, s)
            return ChoiceStep(m.agents, m.vars, self.actions(m), successor)
        if isinstance(m, Seq):
            inner = self.step(Config(m.first, s))
            rest = m.second
            if isinstance(inner, Silent):
                return Silent(_then(inner.succ, rest))
            if isinstance(inner, ChoiceStep):
                succ = inner.successor
                return ChoiceStep(inner.agents, inner.vars, inner.actions,
                                  lambda joint: _then(succ(joint), rest))
            raise AssertionError("a nonempty mechanism always steps")
        if isinstance(m, If):
            branch = m.then if self._cond(m.cond)(s, None) else m.else_
            return Silent(Config(branch, s))
        if isinstance(m, While):
            if self._cond(m.cond)(s, None):
                return Silent(Config(Seq(m.body, m), s))
            return Silent(Config(None, s))
        raise TypeError(f"not a mechanism: {m!r}")


def _then(c: Config, rest: Mechanism) -> Config:
    return Config(rest if c.mech is None else Seq(c.mech, rest), c.state)


def step(config: Config, interp: Interpretation, space: StateSpace) -> StepResult:
    return Stepper(interp, space).step(config)


def diverges(stepper: Stepper, config: Config, limit: int) -> bool:
    """True when the silent steps from ``config`` revisit a configuration.

    Such a run never reaches Λ and never reaches a choice, whatever the
    agents do. False means "not shown within ``limit`` steps".
    """
    seen = set()
    for _ in range(limit):
        if config.mech is None or config in seen:
            return config.mech is not None
        seen.add(config)
        result = stepper.step(config)
        if not isinstance(result, Silent):
            return False
        config = result.succ
    return False


def divergence_limit(depth_cap: int) -> int:
    return 4 * depth_cap + 64


# --- game trees ------------------------------------------------------------

TERMINAL_LEAF, INFINITE_LEAF, SILENT_NODE, CHOICE_NODE = "terminal", "infinite", "silent", "choice"


@dataclass(eq=False)
class Node:
    """A history: the path of configurations from the root to ``config``.

    ``path`` lists the edge labels from the root (joint actions for choice
    edges, None for silent ones) and identifies the history.
    """
    config: Config
    depth: int
    path: tuple
    parent: "Node | None" = field(default=None, repr=False)
    kind: str = TERMINAL_LEAF
    children: dict = field(default_factory=dict, repr=False)
    agents: tuple = ()
    vars: tuple = ()
    id: int = 0
    divergent: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.kind in (TERMINAL_LEAF, INFINITE_LEAF)

    @property
    def state(self) -> tuple:
        return self.config.state

    def history(self) -> list:
        out, n = [], self
        while n is not None:
            out.append(n.config)
            n = n.parent
        return out[::-1]

    def child(self, edge=None) -> "Node":
        return self.children[edge]


@dataclass(eq=False)
class GameTree:
    root: Node
    nodes: list
    space: StateSpace
    interp: Interpretation
    depth_cap: int

    @property
    def capped(self) -> bool:
        """Some branch was cut by the cap without being shown to diverge."""
        return any(n.kind == INFINITE_LEAF and not n.divergent for n in self.nodes)

    def leaves(self) -> list:
        return [n for n in self.nodes if n.is_leaf]

    def choice_nodes(self) -> list:
        return [n for n in self.nodes if n.kind == CHOICE_NODE]

    def movers(self) -> tuple:
        return tuple(sorted({a for n in self.choice_nodes() for a in n.agents}))

    def node_at(self, path: tuple) -> Node:
        n = self.root
        for edge in path:
            n = n.children[edge]
        return n

    def descendants(self, node: Node) -> list:
        out, todo = [], [node]
        while todo:
            n = todo.pop()
            out.append(n)
            todo.extend(reversed(list(n.children.values())))
        return out


def footprint_of(mechanism: Mechanism, *extra) -> set:
    names = set(mechanism_vars(mechanism))
    for e in extra:
        names |= set(e)
    return names


def build_game_tree(mechanism: Mechanism, initial, interp: Interpretation, depth_cap: int,
                    space: StateSpace | None = None, strict: bool = False,
                    stepper: Stepper | None = None) -> GameTree:
    """Unfold ⟨γ, s0⟩ breadth-first.

    A non-Λ configuration at depth ``depth_cap`` (root depth 1) becomes an
    infinite-run leaf. The leaf is marked divergent when its silent
    continuation cycles; otherwise strict mode raises NonTerminationError.
    """
    if depth_cap < 1:
        raise ValueError("depth cap must be at least 1")
    if space is None:
        if not isinstance(initial, Mapping):
            raise TypeError("pass a state space with tuple states")
        space = interp.space(set(initial) | footprint_of(mechanism))
    state = space.state(initial)
    stepper = stepper or Stepper(interp, space)
    root = Node(Config(mechanism, state), 1, ())
    nodes = []
    queue = deque([root])
    while queue:
        node = queue.popleft()
        node.id = len(nodes)
        nodes.append(node)
        if node.config.mech is None:
            node.kind = TERMINAL_LEAF
            continue
        if node.depth >= depth_cap:
            node.divergent = diverges(stepper, node.config, divergence_limit(depth_cap))
            if strict and not node.divergent:
                raise NonTerminationError(
                    f"branch exceeds depth cap {depth_cap} at {space.show(node.state)}")
            node.kind = INFINITE_LEAF
            continue
        result = stepper.step(node.config)
        if isinstance(result, Silent):
            node.kind = SILENT_NODE
            child = Node(result.succ, node.depth + 1, node.path + (None,), node)
            node.children[None] = child
            queue.append(child)
        else:
            node.kind = CHOICE_NODE
            node.agents, node.vars = result.agents, result.vars
            for joint in result.actions:
                child = Node(result.successor(joint), node.depth + 1, node.path + (joint,), node)
                node.children[joint] = child
                queue.append(child)
    return GameTree(root, nodes, space, interp, depth_cap)


# --- strategies and runs ---------------------------------------------------

def joint_action(profile: Mapping[int, Mapping[tuple, object]], node: Node) -> tuple:
    """The joint action σ prescribes at a choice node."""
    try:
        return tuple(profile[a][node.path] for a in node.agents)
    except KeyError:
        raise KeyError(f"strategy profile undefined at history {node.path}") from None


@dataclass
class Run:
    configs: list
    finite: bool
    leaf: Node

    @property
    def final_state(self) -> tuple | None:
        return self.configs[-1].state if self.finite else None


def run_of(tree: GameTree, profile: Mapping[int, Mapping[tuple, object]],
           start: Node | None = None) -> Run:
    """The unique run from ``start`` (default: root) under the profile."""
    node = start or tree.root
    configs = [node.config]
    while not node.is_leaf:
        edge = None if node.kind == SILENT_NODE else joint_action(profile, node)
        if edge not in node.children:
            raise KeyError(f"profile chooses {edge!r} outside the sorts at {node.path}")
        node = node.children[edge]
        configs.append(node.config)
    return Run(configs, node.kind == TERMINAL_LEAF, node)


def subgame_roots(tree: GameTree) -> list:
    """Every history roots a subgame."""
    return list(tree.nodes)
