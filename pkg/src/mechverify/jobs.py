"""Assembling triples from source text and files."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .interpretation import EPredicate, Interpretation, extension
from .syntax import Mechanism, bool_vars, mechanism_vars, parse_formula, parse_mechanism


@dataclass
class VerificationJob:
    mech: Path
    pre: Path
    post: Path
    interp: Path
    depth_cap: int | None = None
    strict: bool = False
    fmt: str = "text"


@dataclass
class Triple:
    interp: Interpretation
    mech: Mechanism
    pre: EPredicate
    post: EPredicate

    @property
    def footprint(self) -> tuple:
        return self.pre.space.footprint


def footprint(interp: Interpretation, mech: Mechanism | None, *formulas) -> list:
    """Variables of the mechanism and formulas; undeclared names bound as constants are skipped."""
    names = set(mechanism_vars(mech)) if mech is not None else set()
    for f in formulas:
        names |= set(bool_vars(f))
    return sorted(n for n in names if n in interp.sorts or n not in interp.constants)


def build_triple(interp: Interpretation, mech_src: str, pre_src: str, post_src: str) -> Triple:
    mech = parse_mechanism(mech_src)
    pre, post = parse_formula(pre_src), parse_formula(post_src)
    fp = footprint(interp, mech, pre, post)
    return Triple(interp, mech, extension(pre, interp, fp), extension(post, interp, fp))


def read_text(path: str | Path) -> str:
    return Path(path).read_text(encoding="utf-8")
