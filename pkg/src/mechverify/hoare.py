"""SPE Hoare triples: validity, derivation checking and derivation synthesis."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .equilibrium import WPre, default_depth_cap, find_spe_with_outcome, jvalue, wpre
from .interpretation import (EPredicate, Interpretation, Predicate, Value,
                             compile_bool, is_functional, lift_predicate, mix_intersect,
                             show_value, substitute)
from .semantics import Config, Stepper, build_game_tree
from .syntax import Assign, Choice, If, Mechanism, Seq, While, classify, summarize

VALID, INVALID, INEXACT = "valid", "invalid", "inexact"
RULES = {"Assign": 0, "Choice": 0, "Comp": 2, "If": 2, "While": 1, "Consequence": 1}


class InexactError(RuntimeError):
    """A capped branch prevents an exact answer."""


@dataclass
class HoareTriple:
    pre: EPredicate
    mech: Mechanism
    post: EPredicate

    def __post_init__(self):
        if self.pre.space != self.post.space:
            raise ValueError("pre- and postcondition use different footprints")

    def __str__(self) -> str:
        return f"{{{self.pre.label}}} {summarize(self.mech)} {{{self.post.label}}}"


@dataclass
class Verdict:
    status: str
    counterexample: tuple | None = None
    witness: object = None
    capped: bool = False
    space: object = field(default=None, repr=False)

    @property
    def valid(self) -> bool:
        return self.status == VALID

    def describe(self) -> str:
        if self.status == INVALID:
            s, o = self.counterexample
            return f"invalid: no SPE yields {show_value(o)} from {self.space.show(s)}"
        if self.status == INEXACT:
            return "inexact: the precondition is covered only with capped branches"
        return "valid"

    def to_json(self) -> dict:
        out = {"verdict": self.status}
        if self.counterexample is not None:
            s, o = self.counterexample
            out["counterexample"] = {"state": {k: jvalue(v) for k, v in self.space.as_dict(s).items()},
                                     "outcome": jvalue(o)}
        if self.witness is not None:
            s, w = self.witness
            out["witness"] = {"state": {k: jvalue(v) for k, v in self.space.as_dict(s).items()},
                              **w.to_json()}
        return out


def check_validity(interp: Interpretation, P: EPredicate, mech: Mechanism, Q: EPredicate,
                   depth_cap: int | None = None, strict: bool = False,
                   witness: bool = False, W: WPre | None = None) -> Verdict:
    """Decide I ⊨ {P} γ {Q} as P ⊆ wpre(γ, Q).

    Failures are exact even under a cap, since capping only enlarges Supp.
    """
    if P.space != Q.space:
        raise ValueError("pre- and postcondition use different footprints")
    W = W or wpre(mech, Q, interp, depth_cap, strict)
    bad = P.find_outside(W)
    if bad is not None:
        return Verdict(INVALID, counterexample=bad, space=P.space)
    capped = any(not W.exact_at(s) for s in P.space.states() if P.fiber(s))
    verdict = Verdict(INEXACT if capped else VALID, capped=capped, space=P.space)
    if witness and not capped:
        sample = next(iter(P.items()), None)
        if sample is not None:
            s, o = sample
            tree = build_game_tree(mech, s, interp, W.depth_cap, space=P.space)
            verdict.witness = (s, find_spe_with_outcome(tree, Q, o))
    return verdict


# --- derivations -----------------------------------------------------------

@dataclass
class Derivation:
    rule: str
    triple: HoareTriple
    children: list = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def nodes(self):
        """Pre-order traversal yielding (position, node); position is a child-index path."""
        todo = [((), self)]
        while todo:
            pos, d = todo.pop()
            yield pos, d
            todo.extend(((pos + (i,), c) for i, c in reversed(list(enumerate(d.children)))))

    @property
    def size(self) -> int:
        return sum(1 for _ in self.nodes())


@dataclass
class NodeReport:
    position: tuple
    rule: str
    ok: bool
    message: str = ""

    def __str__(self) -> str:
        where = ".".join(map(str, self.position)) or "root"
        return f"[{'ok' if self.ok else 'FAIL'}] {where} {self.rule}: {self.message or 'accepted'}"


@dataclass
class DerivationReport:
    nodes: list

    @property
    def ok(self) -> bool:
        return all(n.ok for n in self.nodes)

    def failures(self) -> list:
        return [n for n in self.nodes if not n.ok]

    def __bool__(self) -> bool:
        return self.ok


def _state_predicate(b, space, interp) -> Predicate:
    test = compile_bool(b, interp, space.index)
    return Predicate(space, lambda s: test(s, None), b)


def _differ(a: EPredicate, b: EPredicate) -> str:
    w = a.difference_witness(b)
    if w is None:
        return ""
    s, o = w
    side = "first" if o in a.fiber(s) else "second"
    return f"differ at ({a.space.show(s)}, {show_value(o)}), present only in the {side}"


def _not_subset(a: EPredicate, b: EPredicate) -> str:
    w = a.find_outside(b)
    if w is None:
        return ""
    s, o = w
    return f"({a.space.show(s)}, {show_value(o)}) is not included"


def _check_node(d: Derivation, interp: Interpretation, depth_cap: int, strict: bool) -> str:
    """Empty string when the rule application is correct, else the reason."""
    rule, t, kids = d.rule, d.triple, d.children
    if rule not in RULES:
        return f"unknown rule {rule!r}"
    if len(kids) != RULES[rule]:
        return f"{rule} takes {RULES[rule]} premises, got {len(kids)}"
    for k in kids:
        if k.triple.pre.space != t.pre.space:
            return "footprint mismatch with a premise"
    m = t.mech
    if rule == "Assign":
        if not isinstance(m, Assign):
            return "Assign applied to a non-assignment"
        msg = _differ(t.pre, substitute(t.post, m.var, m.term, interp))
        return msg and f"precondition is not Q[{m.var}/...]: {msg}"
    if rule == "Choice":
        if not isinstance(m, Choice):
            return "Choice applied to a non-choice"
        msg = _differ(t.pre, wpre(m, t.post, interp, depth_cap, strict))
        return msg and f"precondition is not wpre of the choice: {msg}"
    if rule == "Consequence":
        (k,) = kids
        if k.triple.mech != m:
            return "premise concerns a different mechanism"
        msg = _not_subset(t.pre, k.triple.pre)
        if msg:
            return f"P ⊄ P': {msg}"
        msg = _not_subset(k.triple.post, t.post)
        return msg and f"Q' ⊄ Q: {msg}"
    if rule == "Comp":
        if not isinstance(m, Seq):
            return "Comp applied to a non-sequence"
        k1, k2 = kids
        if k1.triple.mech != m.first or k2.triple.mech != m.second:
            return "premises do not match the two components"
        R = d.data.get("midpoint")
        checks = [("first premise precondition", t.pre, k1.triple.pre),
                  ("midpoint", k1.triple.post, k2.triple.pre),
                  ("second premise postcondition", k2.triple.post, t.post)]
        if R is not None:
            checks.append(("declared midpoint", R, k2.triple.pre))
        for what, a, b in checks:
            msg = _differ(a, b)
            if msg:
                return f"{what} mismatch: {msg}"
        return ""
    if rule == "If":
        if not isinstance(m, If):
            return "If applied to a non-conditional"
        k1, k2 = kids
        if k1.triple.mech != m.then or k2.triple.mech != m.else_:
            return "premises do not match the branches"
        B = _state_predicate(m.cond, t.pre.space, interp)
        for what, k, cond in (("then", k1, B), ("else", k2, B.complement())):
            msg = _differ(k.triple.pre, mix_intersect(cond, t.pre))
            if msg:
                return f"{what} premise precondition is not P ∩ B: {msg}"
            msg = _differ(k.triple.post, t.post)
            if msg:
                return f"{what} premise postcondition mismatch: {msg}"
        return ""
    if rule == "While":
        if not isinstance(m, While):
            return "While applied to a non-loop"
        (k,) = kids
        if k.triple.mech != m.body:
            return "premise does not concern the loop body"
        inv = d.data.get("invariant", t.pre)
        B = _state_predicate(m.cond, t.pre.space, interp)
        for what, a, b in (("invariant", inv, t.pre),
                           ("premise precondition", k.triple.pre, mix_intersect(B, t.pre)),
                           ("premise postcondition", k.triple.post, t.pre),
                           ("postcondition", t.post, mix_intersect(B.complement(), t.pre))):
            msg = _differ(a, b)
            if msg:
                return f"{what} mismatch: {msg}"
        return ""
    raise AssertionError(rule)


def check_derivation(interp: Interpretation, D: Derivation, depth_cap: int | None = None,
                     strict: bool = False) -> DerivationReport:
    cap = depth_cap or default_depth_cap()
    reports = []
    for pos, d in D.nodes():
        msg = _check_node(d, interp, cap, strict)
        reports.append(NodeReport(pos, d.rule, not msg, msg))
    return DerivationReport(reports)


def derive(interp: Interpretation, P: EPredicate, mech: Mechanism, Q: EPredicate,
           depth_cap: int | None = None, strict: bool = False) -> Derivation | None:
    """A derivation of {P} γ {Q} following the completeness construction, or None if invalid."""
    cap = depth_cap or default_depth_cap()
    W = wpre(mech, Q, interp, cap, strict)
    verdict = check_validity(interp, P, mech, Q, cap, strict, W=W)
    if verdict.status == INVALID:
        return None
    if verdict.status == INEXACT:
        raise InexactError("refusing to derive a triple whose trees were capped")
    if W.diverged and not interp.outcome_bottom:
        # intermediate wpre sets drop ⊥, which diverging runs may need as a punishment
        raise InexactError("diverging runs need ⊥ among the outcomes (set outcome_bottom)")
    return _derive(interp, P, mech, Q, cap)


def _wp(mech, Q, interp, cap) -> EPredicate:
    W = wpre(mech, Q, interp, cap, strict=True).materialize()
    W.label = f"wpre({summarize(mech)})"
    return W


def _derive(interp, P, mech, Q, cap) -> Derivation:
    here = HoareTriple(P, mech, Q)
    if isinstance(mech, Assign):
        inner = HoareTriple(substitute(Q, mech.var, mech.term, interp), mech, Q)
        return Derivation("Consequence", here, [Derivation("Assign", inner)])
    if isinstance(mech, Choice):
        inner = HoareTriple(_wp(mech, Q, interp, cap), mech, Q)
        return Derivation("Consequence", here, [Derivation("Choice", inner)])
    if isinstance(mech, Seq):
        R = _wp(mech.second, Q, interp, cap)
        return Derivation("Comp", here, [_derive(interp, P, mech.first, R, cap),
                                         _derive(interp, R, mech.second, Q, cap)],
                          {"midpoint": R})
    if isinstance(mech, If):
        B = _state_predicate(mech.cond, P.space, interp)
        return Derivation("If", here, [
            _derive(interp, mix_intersect(B, P), mech.then, Q, cap),
            _derive(interp, mix_intersect(B.complement(), P), mech.else_, Q, cap)])
    if isinstance(mech, While):
        R = _wp(mech, Q, interp, cap)
        B = _state_predicate(mech.cond, P.space, interp)
        body = _derive(interp, mix_intersect(B, R), mech.body, R, cap)
        loop = Derivation("While", HoareTriple(R, mech, mix_intersect(B.complement(), R)),
                          [body], {"invariant": R})
        return Derivation("Consequence", here, [loop])
    raise TypeError(f"not a mechanism: {mech!r}")


# --- implementation and the classical embedding ----------------------------

@dataclass
class SocialChoiceSpec:
    """Pairs (preference profile, desired outcomes); an empty outcome set imposes nothing."""
    entries: list = field(default_factory=list)

    def add(self, profile: Mapping[int, object], outcomes: Iterable[Value]) -> "SocialChoiceSpec":
        self.entries.append((dict(profile), frozenset(outcomes)))
        return self


@dataclass
class ImplementationReport:
    verdicts: list
    functional: bool

    @property
    def implements(self) -> bool:
        return all(v.status == VALID for v in self.verdicts)


def check_spe_implementation(mech: Mechanism, Q: EPredicate, spec: SocialChoiceSpec,
                             interp: Interpretation, depth_cap: int | None = None,
                             strict: bool = False) -> ImplementationReport:
    functional = is_functional(Q)
    if not functional:
        warnings.warn("payoff postcondition is not functional; checking validity per profile anyway",
                      stacklevel=2)
    verdicts = []
    space = Q.space
    for profile, wanted in spec.entries:
        bad = [o for o in wanted if o not in space.outcomes]
        if bad:
            raise ValueError(f"outcome {show_value(bad[0])} is outside the outcome sort")
        target = interp.with_preferences(profile)
        star = EPredicate(space, lambda s, w=wanted: w, label="f*")
        verdicts.append(check_validity(target, star, mech, Q, depth_cap, strict))
    return ImplementationReport(verdicts, functional)


def check_partial_correctness_embedding(P: Predicate, mech: Mechanism, Q: Predicate,
                                        interp: Interpretation, d: Value,
                                        depth_cap: int | None = None) -> bool:
    """{P} γ {Q} in the classical sense, decided as {P*} γ {Q*}."""
    if classify(mech) != "PRG":
        raise ValueError("the classical embedding applies to choice-free mechanisms only")
    verdict = check_validity(interp, lift_predicate(P, d), mech, lift_predicate(Q, d), depth_cap)
    if verdict.status == INEXACT:
        raise InexactError("a run was capped before it could be classified")
    return verdict.status == VALID


def partial_correctness_by_trace(P: Predicate, mech: Mechanism, Q: Predicate,
                                 interp: Interpretation, depth_cap: int | None = None) -> bool:
    """Run the unique trace of every P-state; nontermination satisfies the triple vacuously."""
    cap = depth_cap or default_depth_cap()
    stepper = Stepper(interp, P.space)
    for s in P.states():
        c, depth = Config(mech, s), 1
        while c.mech is not None and depth < cap:
            c, depth = stepper.step(c).succ, depth + 1
        if c.mech is None and not Q.holds(c.state):
            return False
    return True
