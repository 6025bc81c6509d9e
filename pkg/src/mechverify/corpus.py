"""The bundled example corpus and its self-check."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from .config import interpretation_from_dict, to_value
from .hoare import INEXACT, check_derivation, check_validity
from .jobs import Triple, build_triple
from .semantics import build_game_tree, run_of
from .serialize import derivation_from_json
from .syntax import parse_mechanism

DATA = resources.files("mechverify") / "data"


def data_text(name: str) -> str:
    return (DATA / name).read_text(encoding="utf-8")


@dataclass
class CorpusEntry:
    name: str
    mech: str
    interp: dict
    expected: str
    note: str = ""
    pre: str | None = None
    post: str | None = None
    kind: str = "triple"
    mode: str = "strict"
    cap: int | None = None
    derivation: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def strict(self) -> bool:
        return self.mode == "strict"

    def interpretation(self):
        return interpretation_from_dict(self.interp)

    def triple(self) -> Triple:
        return build_triple(self.interpretation(), self.mech, self.pre, self.post)


def load_corpus() -> list[CorpusEntry]:
    entries = []
    for raw in json.loads(data_text("corpus.json")):
        raw = dict(raw)
        entry = CorpusEntry(
            name=raw.pop("name"), mech=data_text(raw.pop("mech")),
            interp=json.loads(data_text(raw.pop("interp"))), expected=raw.pop("expected"),
            note=raw.pop("note", ""), kind=raw.pop("kind", "triple"),
            mode=raw.pop("mode", "strict"), cap=raw.pop("cap", None))
        if "pre" in raw:
            entry.pre = data_text(raw.pop("pre"))
            entry.post = data_text(raw.pop("post"))
        if "derivation" in raw:
            entry.derivation = json.loads(data_text(raw.pop("derivation")))
        entry.extra = raw
        entries.append(entry)
    return entries


def corpus_entry(name: str) -> CorpusEntry:
    for e in load_corpus():
        if e.name == name:
            return e
    raise KeyError(f"no corpus entry named {name!r}")


@dataclass
class CorpusResult:
    name: str
    expected: str
    actual: str
    seconds: float
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


def simulate(entry: CorpusEntry) -> dict:
    """Run the mechanism under fixed first-move choices; returns the final state."""
    interp = entry.interpretation()
    mech = parse_mechanism(entry.mech)
    initial = {k: to_value(v) for k, v in entry.extra["initial"].items()}
    tree = build_game_tree(mech, initial, interp, entry.cap or 10_000)
    ballots = {int(a): to_value(v) for a, v in entry.extra["ballots"].items()}
    profile = {a: {n.path: ballots[a] for n in tree.choice_nodes() if a in n.agents}
               for a in ballots}
    run = run_of(tree, profile)
    if not run.finite:
        raise RuntimeError("simulation did not terminate below the cap")
    return tree.space.as_dict(run.final_state)


def run_entry(entry: CorpusEntry) -> CorpusResult:
    start = time.perf_counter()
    if entry.kind == "simulation":
        final = simulate(entry)
        want = {k: to_value(v) for k, v in entry.extra["expect"].items()}
        got = {k: final[k] for k in want}
        actual = "tally" if got == want else "mismatch"
        return CorpusResult(entry.name, entry.expected, actual, time.perf_counter() - start,
                            ", ".join(f"{k}={v}" for k, v in got.items()))
    t = entry.triple()
    verdict = check_validity(t.interp, t.pre, t.mech, t.post, entry.cap,
                             strict=entry.strict and entry.expected != INEXACT)
    detail = verdict.describe()
    if entry.derivation is not None:
        D = derivation_from_json(entry.derivation, t.interp, entry.cap)
        report = check_derivation(t.interp, D, entry.cap)
        detail += f"; derivation {'accepted' if report.ok else 'rejected'}"
        if not report.ok:
            return CorpusResult(entry.name, entry.expected, "derivation-rejected",
                                time.perf_counter() - start, detail)
    return CorpusResult(entry.name, entry.expected, verdict.status,
                        time.perf_counter() - start, detail)


def run_corpus(names: list[str] | None = None, workers: int = 4) -> list[CorpusResult]:
    entries = [e for e in load_corpus() if names is None or e.name in names]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_entry, entries))


def format_results(results: list[CorpusResult]) -> str:
    width = max((len(r.name) for r in results), default=4)
    lines = []
    for r in results:
        mark = "PASS" if r.ok else "FAIL"
        lines.append(f"{mark}  {r.name:<{width}}  expected={r.expected:<8} got={r.actual:<8} "
                     f"{r.seconds:6.2f}s  {r.detail}")
    passed = sum(r.ok for r in results)
    lines.append(f"{passed}/{len(results)} corpus entries behave as expected")
    return "\n".join(lines)
