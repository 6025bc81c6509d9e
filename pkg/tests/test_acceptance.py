"""Acceptance criteria, one test per criterion (criterion 3 has three parts).

Each test prints a PASS/FAIL line and records it for the terminal summary.
"""

from __future__ import annotations

import itertools
import json
import random
import sys
import time

import pytest

from conftest import ACCEPTANCE
from helpers import (DUTCH, DUTCH_BODY, DUTCH_FOOTPRINT, DUTCH_Q, INV, PHI, PSI, auction,
                     brute_deviation_outcomes, brute_support, dutch, outcome_functions,
                     profiles, random_fibers, random_game, random_mechanism, random_setting,
                     random_subset)
from mechverify import (SocialChoiceSpec, build_game_tree, check_derivation,
                        check_partial_correctness_embedding, check_spe_implementation,
                        check_validity, derive, deviation_outcomes, extension,
                        interpretation_from_dict, parse_mechanism, predicate,
                        supportable_outcomes, wpre)
from mechverify.config import preferences_from_dict
from mechverify.corpus import corpus_entry, data_text, simulate
from mechverify.jobs import footprint
from mechverify.serialize import derivation_from_json
from mechverify.syntax import Assign, If, Seq, While

CAP = 64


def report(criterion: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line, file=sys.__stdout__, flush=True)


# 1 -------------------------------------------------------------------------

def test_criterion_1_second_price_valid_for_all_valuations():
    start = time.perf_counter()
    mech = parse_mechanism("ch {1,2} (x1, x2)")
    bad = []
    for v1, v2 in itertools.product(range(5), repeat=2):
        interp = auction(v1, v2)
        fp = ["x1", "x2"]
        verdict = check_validity(interp, extension(PHI, interp, fp), mech,
                                 extension(PSI, interp, fp), strict=True)
        if verdict.status != "valid":
            bad.append((v1, v2, verdict.status))
    elapsed = time.perf_counter() - start
    ok = not bad and elapsed < 10
    report("1", ok, f"25 valuation pairs, {25 - len(bad)} valid, {elapsed:.2f}s (limit 10s)")
    assert not bad
    assert elapsed < 10


# 2 -------------------------------------------------------------------------

def _solomon(name):
    doc = json.loads(data_text(name))
    return interpretation_from_dict(doc)


def test_criterion_2_solomon_implementation_and_derivation():
    start = time.perf_counter()
    interp = _solomon("solomon-theta1.json")
    mech = parse_mechanism(data_text("solomon.mpl"))
    post = data_text("solomon.post.pred")
    Q = extension(post, interp, footprint(interp, mech, post))
    profs = {k: preferences_from_dict(v)
             for k, v in json.loads(data_text("solomon-profiles.json")).items()}
    spec = (SocialChoiceSpec().add(profs["theta1"], [(1, 0, 0)])
                              .add(profs["theta2"], [(2, 0, 0)]))
    implementation = check_spe_implementation(mech, Q, spec, interp, strict=True)

    doc = corpus_entry("solomon-theta1").derivation
    accepted = check_derivation(interp, derivation_from_json(doc, interp)).ok

    cheap = _solomon("solomon-cheap-fine.json")
    Qc = extension(post, cheap, Q.space.footprint)
    pre = data_text("solomon-theta1.pre.pred")
    cheap_verdict = check_validity(cheap, extension(pre, cheap, Q.space.footprint), mech, Qc,
                                   strict=True)
    cheap_report = check_derivation(cheap, derivation_from_json(doc, cheap))
    elapsed = time.perf_counter() - start

    ok = (implementation.implements and accepted and cheap_verdict.status == "invalid"
          and not cheap_report.ok and elapsed < 5)
    report("2", ok, f"implements={implementation.implements}, derivation accepted={accepted}, "
                    f"M=0 verdict={cheap_verdict.status}, M=0 derivation accepted={cheap_report.ok}, "
                    f"{elapsed:.2f}s (limit 5s)")
    assert implementation.implements
    assert accepted
    assert cheap_verdict.status == "invalid"
    assert not cheap_report.ok
    assert elapsed < 5


# 3 -------------------------------------------------------------------------

def test_criterion_3a_dutch_invariant_body_triple():
    interp = dutch()
    start = time.perf_counter()
    pre = extension(f"({INV}) and p > 0 and w = 0", interp, DUTCH_FOOTPRINT)
    verdict = check_validity(interp, pre, parse_mechanism(DUTCH_BODY),
                             extension(INV, interp, DUTCH_FOOTPRINT), strict=True)
    elapsed = time.perf_counter() - start
    detail = f"{{Inv and p>0 and w=0}} body {{Inv}} is {verdict.status}"
    if verdict.counterexample is not None:
        s, o = verdict.counterexample
        detail += f" (counterexample {pre.space.show(s)}, outcome {o})"
    report("3a", verdict.status == "valid", f"{detail}, {elapsed:.2f}s")
    assert verdict.status == "valid"


def test_criterion_3b_dutch_full_triple():
    interp = dutch()
    start = time.perf_counter()
    pre = extension("v1 >= v2 and v2 > 0 and init >= v2 and outcome[1] = v1 - v2 "
                    "and outcome[2] = 0", interp, DUTCH_FOOTPRINT)
    verdict = check_validity(interp, pre, parse_mechanism(DUTCH),
                             extension(DUTCH_Q, interp, DUTCH_FOOTPRINT), strict=True)
    elapsed = time.perf_counter() - start
    ok = verdict.status == "valid" and elapsed < 60
    report("3b", ok, f"full descending-auction triple is {verdict.status}, {elapsed:.2f}s (limit 60s)")
    assert verdict.status == "valid"
    assert elapsed < 60


@pytest.mark.parametrize("v1,v2,init", [(2, 0, 2), (3, 3, 2)], ids=["v2-zero", "init-low"])
def test_criterion_3c_dutch_dropped_conditions(v1, v2, init):
    interp = dutch()
    pre = extension(f"v1 = {v1} and v2 = {v2} and init = {init} and outcome[1] = v1 - v2 "
                    "and outcome[2] = 0", interp, DUTCH_FOOTPRINT)
    verdict = check_validity(interp, pre, parse_mechanism(DUTCH),
                             extension(DUTCH_Q, interp, DUTCH_FOOTPRINT), strict=True)
    report(f"3c[v1={v1},v2={v2},init={init}]", verdict.status == "invalid",
           f"instance triple is {verdict.status}")
    assert verdict.status == "invalid"


# 4 -------------------------------------------------------------------------

def test_criterion_4_oracle_equivalence():
    rng = random.Random(2024)
    start = time.perf_counter()
    games = support_mismatch = deviation_mismatch = deviation_checks = 0
    while games < 240:
        interp, src, s0, Q = random_game(rng)
        tree = build_game_tree(parse_mechanism(src), s0, interp, 6, space=Q.space)
        games += 1
        if supportable_outcomes(tree, Q).root != brute_support(tree, Q):
            support_mismatch += 1
        ohats = list(itertools.islice(outcome_functions(tree, Q), 4))
        for prof in itertools.islice(profiles(tree), 4):
            for ohat in ohats:
                for agent in interp.agents:
                    for node in (tree.root, rng.choice(tree.nodes)):
                        deviation_checks += 1
                        fast = deviation_outcomes(agent, prof, tree, ohat, node)
                        if fast != brute_deviation_outcomes(agent, prof, tree, ohat, node):
                            deviation_mismatch += 1
    elapsed = time.perf_counter() - start
    ok = not support_mismatch and not deviation_mismatch and elapsed < 60
    report("4", ok, f"{games} games, {support_mismatch} support mismatches, "
                    f"{deviation_mismatch}/{deviation_checks} deviation mismatches, "
                    f"{elapsed:.2f}s (limit 60s)")
    assert support_mismatch == 0
    assert deviation_mismatch == 0
    assert elapsed < 60


# 5 -------------------------------------------------------------------------

def _composition_violations(rng, interp, space, mech, Q, W):
    """Composition and Decomposition on a sequence; other shapes have nothing to check."""
    if not isinstance(mech, Seq):
        return 0, 0
    violations = 0
    W2 = wpre(mech.second, Q, interp, CAP, strict=True)
    R = random_subset(rng, W2)
    P1 = random_subset(rng, wpre(mech.first, R, interp, CAP, strict=True))
    # {P1} first {R} and {R} second {Q} hold by construction
    if check_validity(interp, P1, mech, Q, CAP, strict=True).status != "valid":
        violations += 1
    P2 = random_subset(rng, W)
    if check_validity(interp, P2, mech.first, W2, CAP, strict=True).status != "valid":
        violations += 1
    return violations, 1


def test_criterion_5_soundness_completeness_round_trip():
    rng = random.Random(77)
    start = time.perf_counter()
    n = valid = derivations = violations = lemma_instances = 0
    for _ in range(160):
        interp, space = random_setting(rng)
        mech = parse_mechanism(random_mechanism(rng, depth=3))
        Q = random_fibers(rng, space)
        W = wpre(mech, Q, interp, CAP, strict=True)
        P = random_subset(rng, W) if rng.random() < 0.6 else random_fibers(rng, space, 2)
        verdict = check_validity(interp, P, mech, Q, CAP, strict=True, W=W)
        D = derive(interp, P, mech, Q, CAP, strict=True)
        n += 1
        valid += verdict.status == "valid"
        if (verdict.status == "valid") != (D is not None):
            violations += 1
        if D is not None:
            derivations += 1
            if not check_derivation(interp, D, CAP).ok:
                violations += 1
        v, k = _composition_violations(rng, interp, space, mech, Q, W)
        violations += v
        lemma_instances += k
    elapsed = time.perf_counter() - start
    ok = violations == 0 and elapsed < 300
    report("5", ok, f"{n} instances ({valid} valid, {derivations} derivations checked, "
                    f"{lemma_instances} sequence instances for the lemmas), {violations} violations, "
                    f"{elapsed:.2f}s (limit 300s)")
    assert violations == 0
    assert elapsed < 300


# 6 -------------------------------------------------------------------------

PRG_TRIPLES = [
    ("true", "x := 1", "x = 1", True),
    ("x = 2", "x := x + 1", "x = 3", True),
    ("x = 4", "x := x + 1", "x = 4", True),
    ("x >= 1", "while x > 0 do x := x - 1 od", "x = 0", True),
    ("true", "while x > 0 do x := x - 1 od", "x = 0", True),
    ("true", "while x > 0 do x := x - 1 od", "x = 1", False),
    ("true", "while true do x := x od", "false", True),
    ("x = 1", "while x > 0 do x := x od", "x = 3", True),
    ("true", "while x > 0 do y := y od", "x = 0", True),
    ("true", "if x > y then z := x else z := y fi", "z >= x and z >= y", True),
    ("true", "if x > y then z := y else z := x fi", "z >= x", False),
    ("x = 1 and y = 2", "z := x; x := y; y := z", "x = 2 and y = 1", True),
    ("true", "y := 0; while x > 0 do y := y + 1; x := x - 1 od", "x = 0", True),
    ("x = 3", "y := 0; while x > 0 do y := y + 1; x := x - 1 od", "y = 3", True),
    ("x = 3", "y := 0; while x > 0 do y := y + 2; x := x - 1 od", "y = 3", False),
    ("true", "x := y", "x = y", True),
    ("true", "x := y + 1", "x > y", False),
    ("x < y", "while x < y do x := x + 1 od", "x = y", True),
    ("true", "while not x = y do x := x + 1 od", "x = y", True),
    ("true", "y := x; while x > 0 do x := x - 1 od", "y = 0", False),
]


def _prg_interp():
    return interpretation_from_dict({
        "agents": [1], "sorts": {v: {"int": [0, 4]} for v in "xyz"},
        "outcome_sort": {"int": [0, 0]}, "preferences": {"1": {"utility": "outcome"}}})


def _trace_holds(pre, src, post, interp, fuel=500):
    """Big-step execution with fuel; runs that exhaust it count as nonterminating."""
    from mechverify.interpretation import eval_bool, eval_term

    def clamp(v):
        return max(0, min(4, v))

    def run(m, s, fuel):
        if fuel <= 0:
            return None, 0
        if isinstance(m, Assign):
            return {**s, m.var: clamp(eval_term(m.term, s, interp))}, fuel - 1
        if isinstance(m, Seq):
            s, fuel = run(m.first, s, fuel)
            return (None, 0) if s is None else run(m.second, s, fuel)
        if isinstance(m, If):
            return run(m.then if eval_bool(m.cond, s, interp) else m.else_, s, fuel - 1)
        if isinstance(m, While):
            while eval_bool(m.cond, s, interp):
                s, fuel = run(m.body, s, fuel - 1)
                if s is None:
                    return None, 0
            return s, fuel
        raise TypeError(m)

    P, Q = predicate(pre, interp, "xyz"), predicate(post, interp, "xyz")
    mech = parse_mechanism(src)
    for values in itertools.product(range(5), repeat=3):
        s = dict(zip("xyz", values))
        if not P.holds(P.space.from_dict(s)):
            continue
        final, _ = run(mech, s, fuel)
        if final is not None and not Q.holds(Q.space.from_dict(final)):
            return False
    return True


def test_criterion_6_classical_embedding():
    interp = _prg_interp()
    disagreements = []
    for pre, src, post, expected in PRG_TRIPLES:
        P, Q = predicate(pre, interp, "xyz"), predicate(post, interp, "xyz")
        embedded = check_partial_correctness_embedding(P, parse_mechanism(src), Q, interp, 0)
        traced = _trace_holds(pre, src, post, interp)
        if not embedded == traced == expected:
            disagreements.append((pre, src, post, embedded, traced, expected))
    ok = not disagreements
    report("6", ok, f"{len(PRG_TRIPLES)} classical triples, {len(disagreements)} disagreements "
                    f"between the embedding, the trace evaluator and the expected answer")
    assert not disagreements


# 7 -------------------------------------------------------------------------

def test_criterion_7_borda_tally():
    final = simulate(corpus_entry("borda"))
    ok = final["c"] == (3, 3)
    report("7", ok, f"ballots (2,1) and (1,2) give tallies c={final['c']}")
    assert final["c"] == (3, 3)
