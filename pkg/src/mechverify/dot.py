"""Graphviz export of game trees."""

from __future__ import annotations

from .interpretation import show_value
from .semantics import CHOICE_NODE, INFINITE_LEAF, TERMINAL_LEAF, GameTree
from .syntax import summarize


def _quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def to_dot(tree: GameTree, name: str = "game", width: int = 40) -> str:
    """DOT text; node order and labels depend only on the tree, so output is stable."""
    space = tree.space
    lines = [f"digraph {name} {{", "  node [fontname=\"monospace\"];"]
    for n in tree.nodes:
        label = f"{summarize(n.config.mech, width)}\n{space.show(n.state)}"
        attrs = {"label": label}
        if n.kind == INFINITE_LEAF:
            attrs["shape"] = "doublecircle"
            attrs["label"] = label + ("\n(diverges)" if n.divergent else "\n(capped)")
        elif n.kind == TERMINAL_LEAF:
            attrs["shape"] = "box"
        elif n.kind == CHOICE_NODE:
            attrs["shape"] = "ellipse"
            attrs["style"] = "bold"
        else:
            attrs["shape"] = "ellipse"
        rendered = ", ".join(f"{k}={_quote(v)}" for k, v in attrs.items())
        lines.append(f"  n{n.id} [{rendered}];")
    for n in tree.nodes:
        for joint, child in n.children.items():
            if joint is None:
                lines.append(f"  n{n.id} -> n{child.id};")
            else:
                label = ", ".join(f"{a}:{show_value(v)}" for a, v in zip(n.agents, joint))
                lines.append(f"  n{n.id} -> n{child.id} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
