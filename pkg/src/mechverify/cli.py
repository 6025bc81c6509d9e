"""The ``mpl`` command.

Exit codes: 0 valid (or accepted), 1 invalid (or rejected), 2 inexact or
capped, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_interpretation, to_value
from .dot import to_dot
from .equilibrium import default_depth_cap, jvalue, wpre
from .hoare import INEXACT, INVALID, VALID, InexactError, check_derivation, check_validity, derive
from .interpretation import EvalError, InterpretationError, canonical, show_value
from .jobs import build_triple, footprint, read_text
from .semantics import NonTerminationError, build_game_tree
from .serialize import DerivationFormatError, derivation_from_json, derivation_to_json
from .syntax import MPLSyntaxError, parse_mechanism

EXIT = {VALID: 0, INVALID: 1, INEXACT: 2}
INPUT_ERROR = 3


class InputError(Exception):
    pass


def _emit(args, payload: dict, text: str) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(text)


def _triple(args):
    interp = load_interpretation(args.interp)
    return build_triple(interp, read_text(args.mech), read_text(args.pre), read_text(args.post))


def cmd_verify(args) -> int:
    t = _triple(args)
    verdict = check_validity(t.interp, t.pre, t.mech, t.post, args.cap, args.strict, witness=True)
    lines = [verdict.describe()]
    if verdict.witness is not None and verdict.witness[1] is not None:
        s, w = verdict.witness
        lines.append(f"witness from {t.pre.space.show(s)} with outcome {show_value(w.outcome)}:")
        for agent, strat in sorted(w.profile.items()):
            for path, v in strat.items():
                lines.append(f"  agent {agent} at {list(path)} plays {show_value(v)}")
    _emit(args, verdict.to_json(), "\n".join(lines))
    return EXIT[verdict.status]


def _initial_state(args, interp, mech):
    given = {k: to_value(v) for k, v in json.loads(args.state or "{}").items()}
    names = set(footprint(interp, mech)) | set(given)
    space = interp.space(names)
    return space, {n: given.get(n, space.sorts[space.index[n]].values()[0]) for n in space.footprint}


def cmd_tree(args) -> int:
    interp = load_interpretation(args.interp)
    mech = parse_mechanism(read_text(args.mech))
    space, state = _initial_state(args, interp, mech)
    tree = build_game_tree(mech, state, interp, args.cap or default_depth_cap(), space, args.strict)
    sys.stdout.write(to_dot(tree))
    return EXIT[INEXACT] if tree.capped else 0


def cmd_wpre(args) -> int:
    interp = load_interpretation(args.interp)
    pre_src = read_text(args.pre) if args.pre else "true"
    t = build_triple(interp, read_text(args.mech), pre_src, read_text(args.post))
    W = wpre(t.mech, t.post, interp, args.cap, args.strict)
    space = W.space
    rows = [(s, canonical(W.fiber(s))) for s in space.states()]
    payload = {"footprint": list(space.footprint),
               "fibers": [[[jvalue(v) for v in s], [jvalue(o) for o in f]] for s, f in rows if f],
               "inexact": W.inexact}
    text = "\n".join(f"{space.show(s)}: {{{', '.join(map(show_value, f))}}}" for s, f in rows if f)
    if W.inexact:
        text += "\n(inexact: some branches were capped)"
    _emit(args, payload, text or "(empty)")
    return EXIT[INEXACT] if W.inexact else 0


def cmd_derive(args) -> int:
    t = _triple(args)
    try:
        D = derive(t.interp, t.pre, t.mech, t.post, args.cap, args.strict)
    except InexactError as exc:
        print(f"inexact: {exc}", file=sys.stderr)
        return EXIT[INEXACT]
    if D is None:
        print("invalid: the triple has no derivation", file=sys.stderr)
        return EXIT[INVALID]
    doc = json.dumps(derivation_to_json(D), ensure_ascii=False, indent=1)
    if args.output:
        Path(args.output).write_text(doc + "\n", encoding="utf-8")
        print(f"derivation with {D.size} nodes written to {args.output}")
    else:
        print(doc)
    return 0


def cmd_check_derivation(args) -> int:
    interp = load_interpretation(args.interp)
    try:
        doc = json.loads(read_text(args.derivation))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.derivation}: {exc}") from None
    D = derivation_from_json(doc, interp, args.cap)
    report = check_derivation(interp, D, args.cap, args.strict)
    payload = {"accepted": report.ok,
               "nodes": [{"position": list(n.position), "rule": n.rule, "ok": n.ok,
                          "message": n.message} for n in report.nodes]}
    text = "\n".join(str(n) for n in report.nodes)
    text += "\naccepted" if report.ok else f"\nrejected ({len(report.failures())} failing nodes)"
    _emit(args, payload, text)
    return 0 if report.ok else 1


def cmd_corpus(args) -> int:
    from .corpus import format_results, run_corpus
    results = run_corpus(args.names or None)
    if not results:
        raise InputError(f"no corpus entries named {', '.join(args.names)}")
    payload = [{"name": r.name, "expected": r.expected, "actual": r.actual, "ok": r.ok,
                "seconds": round(r.seconds, 3), "detail": r.detail} for r in results]
    if args.format == "json":
        print(json.dumps(payload, ensure_ascii=False, indent=2))
    else:
        print(format_results(results))
    return 0 if all(r.ok for r in results) else 1


def _cap(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("the depth cap must be at least 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpl", description="SPE Hoare-triple verifier for MPL mechanisms")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, pre=True, post=True, mech=True):
        if mech:
            p.add_argument("--mech", required=True, help="mechanism (.mpl)")
        if pre:
            p.add_argument("--pre", required=pre is True, help="precondition (.pred)")
        if post:
            p.add_argument("--post", required=True, help="postcondition (.pred)")
        p.add_argument("--interp", required=True, help="interpretation (.json)")
        p.add_argument("--cap", type=_cap, default=None,
                       help="depth cap (default: $MPL_DEPTH_CAP or 256)")
        p.add_argument("--strict", action="store_true", help="fail on capped branches")
        p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("verify", help="decide validity of {pre} mech {post}")
    common(p)
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("tree", help="print the game tree as DOT")
    common(p, pre=False, post=False)
    p.add_argument("--state", help='initial state as JSON, e.g. {"x": 1}; missing variables take their least value')
    p.set_defaults(func=cmd_tree)
    p = sub.add_parser("wpre", help="print the fibers of wpre(mech, post)")
    common(p, pre="optional")
    p.set_defaults(func=cmd_wpre)
    p = sub.add_parser("derive", help="emit a derivation of a valid triple")
    common(p)
    p.add_argument("-o", "--output", help="write the derivation here")
    p.set_defaults(func=cmd_derive)
    p = sub.add_parser("check-derivation", help="check a derivation document")
    common(p, pre=False, post=False, mech=False)
    p.add_argument("--derivation", required=True)
    p.set_defaults(func=cmd_check_derivation)
    p = sub.add_parser("corpus", help="run the bundled examples")
    p.add_argument("names", nargs="*")
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NonTerminationError as exc:
        print(f"inexact: {exc}", file=sys.stderr)
        return EXIT[INEXACT]
    except (OSError, MPLSyntaxError, EvalError, InterpretationError, DerivationFormatError,
            InputError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
