"""Case-study fixtures: derive every variant with every approach and compare
against shared golden models."""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

from .cepc import apply_configuration
from .errors import AmbiguousLabels, BpvarError, FixtureError, SkippedPair
from .graph.compare import diff, isomorphic
from .graph.model import ProcessModel
from .graph.traces import enumerate_traces
from .pesoa import resolve
from .provop import apply_option, check_context_rule, derive_variant, partition_options
from .vardl import Document, load_document
from .worklet import Repertoire, bind_worklets, enumerate_cases

APPROACHES = ("provop", "cepc", "worklet", "pesoa")
CASES = ("vehicle", "healthcare", "ebusiness")


def corpus_root() -> Path:
    """``$BPVAR_CORPUS`` if set, else the corpus shipped with the package."""
    env = os.environ.get("BPVAR_CORPUS")
    if env:
        return Path(env)
    return Path(str(resources.files("bpvar") / "data" / "corpus"))


@lru_cache(maxsize=8)
def _manifest(root: str) -> dict:
    return json.loads((Path(root) / "manifest.json").read_text(encoding="utf-8"))


@lru_cache(maxsize=64)
def _load(path: str) -> Document:
    return load_document(path)


def load_manifest(root: Optional[Path] = None) -> dict:
    return _manifest(str(root or corpus_root()))


@dataclass(frozen=True)
class Fixture:
    case: str
    approach: str
    path: Path
    variants: dict  # variant id -> input bundle
    goldens: dict  # variant id -> golden file path
    skips: dict = field(default_factory=dict)  # variant id -> note

    @property
    def document(self) -> Document:
        return _load(str(self.path))

    def golden(self, variant: str) -> ProcessModel:
        return _load(str(self.goldens[variant])).base

    def where(self, variant: str) -> str:
        return f"{self.case}/{self.approach}/{variant} ({self.path})"


def fixture(case: str, approach: str, root: Optional[Path] = None) -> Fixture:
    root = Path(root or corpus_root())
    entry = load_manifest(root)["cases"][case]
    spec = entry["approaches"][approach]
    base = root / case
    return Fixture(case, approach, base / spec["file"], dict(spec["variants"]),
                   {v: base / p for v, p in entry["goldens"].items()},
                   dict(entry.get("skips", {}).get(approach, {})))


def fixtures(root: Optional[Path] = None) -> list:
    m = load_manifest(root)
    return [fixture(c, a, root) for c in m["cases"] for a in m["cases"][c]["approaches"]]


# -- derivation --------------------------------------------------------------

@dataclass(frozen=True)
class Derivation:
    model: ProcessModel
    traces: frozenset
    overflow: bool = False


def _runtime_selected(options, values) -> list:
    return [o for o in options if o.rule is None or check_context_rule(o.rule, values)]


def _derive_provop(doc: Document, inputs: dict) -> Derivation:
    values = doc.get("context", inputs["context"]).values
    design, runtime = partition_options(doc.visible("option"), values)
    model = derive_variant(doc.base, design)
    chosen = _runtime_selected(runtime, values)
    if not chosen:
        ts = enumerate_traces(model)
        return Derivation(model, ts.traces, ts.overflow)
    # run-time options go through the case simulator
    run = enumerate_cases(model, Repertoire("none"), (), values, runtime_options=chosen)
    for opt in chosen:
        model = apply_option(model, opt)
    return Derivation(model, run.traces, run.overflow)


def _derive_cepc(doc: Document, inputs: dict) -> Derivation:
    cm = doc.local("cepc")[0]
    model = apply_configuration(cm, doc.get("cepc-config", inputs["config"]))
    ts = enumerate_traces(model)
    return Derivation(model, ts.traces, ts.overflow)


def _derive_worklet(doc: Document, inputs: dict) -> Derivation:
    values = doc.get("context", inputs["case"]).values
    rep = doc.visible("repertoire")[0]
    trees = doc.visible("rdr")
    model = bind_worklets(doc.base, rep, trees, values)
    run = enumerate_cases(doc.base, rep, trees, values)
    return Derivation(model, run.traces, run.overflow)


def _derive_pesoa(doc: Document, inputs: dict) -> Derivation:
    model = resolve(doc.local("stereotypes")[0], doc.local("features")[0], inputs["select"])
    ts = enumerate_traces(model)
    return Derivation(model, ts.traces, ts.overflow)


_ENGINES = {"provop": _derive_provop, "cepc": _derive_cepc,
            "worklet": _derive_worklet, "pesoa": _derive_pesoa}


def derive(f: Fixture, variant: str) -> Derivation:
    if variant in f.skips:
        raise SkippedPair(f.case, f.approach, variant, f.skips[variant])
    if variant not in f.variants:
        raise KeyError(f"{f.case}/{f.approach} has no variant {variant!r}")
    try:
        return _ENGINES[f.approach](f.document, f.variants[variant])
    except BpvarError as exc:
        raise FixtureError(f.where(variant), exc) from exc


# -- verdicts ----------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    case: str
    approach: str
    variant: str
    match: bool
    traces_match: bool
    model: ProcessModel
    golden: ProcessModel
    differences: tuple = ()
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.match and self.traces_match

    def line(self) -> str:
        status = "ok" if self.ok else "MISMATCH"
        text = f"{self.case:<10} {self.approach:<8} {self.variant:<3} {status}"
        if not self.ok:
            text += f" (isomorphic={self.match}, traces={self.traces_match})"
        return text


def run_fixture(f: Fixture, variant: str) -> Verdict:
    """Derive ``variant`` with the fixture's engine and judge it against the golden."""
    got = derive(f, variant)
    golden = f.golden(variant)
    match = bool(isomorphic(got.model, golden))
    traces_match = got.traces == enumerate_traces(golden).traces
    differences, note = (), ""
    if not match:
        try:
            differences = tuple(diff(golden, got.model))
        except AmbiguousLabels as exc:
            note = str(exc)
    return Verdict(f.case, f.approach, variant, match, traces_match, got.model, golden,
                   differences, note)


@dataclass(frozen=True)
class CrossCheck:
    case: str
    variant: str
    traces: dict  # approach -> frozenset of traces
    skipped: tuple = ()  # SkippedPair instances

    @property
    def equivalent(self) -> bool:
        return len(set(self.traces.values())) <= 1

    def asymmetric(self) -> dict:
        """Per approach pair, traces present in the first but not the second."""
        out = {}
        names = sorted(self.traces)
        for a in names:
            for b in names:
                extra = self.traces[a] - self.traces[b]
                if a != b and extra:
                    out[(a, b)] = sorted(extra)
        return out


def cross_check(case: str, variant: str, root: Optional[Path] = None) -> CrossCheck:
    traces, skipped = {}, []
    for approach in load_manifest(root)["cases"][case]["approaches"]:
        f = fixture(case, approach, root)
        try:
            traces[approach] = derive(f, variant).traces
        except SkippedPair as sp:
            skipped.append(sp)
    return CrossCheck(case, variant, traces, tuple(skipped))


def check_pair(case: str, approach: str, variant: str, root: Optional[Path] = None) -> Verdict:
    """Like ``run_fixture`` but addressed by names; raises ``SkippedPair``."""
    return run_fixture(fixture(case, approach, root), variant)


@dataclass
class MatrixReport:
    verdicts: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    missing: list = field(default_factory=list)  # mandated pairs with no fixture entry
    cross: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return (all(v.ok for v in self.verdicts) and not self.missing
                and all(c.equivalent for c in self.cross))

    def lines(self) -> list:
        out = [v.line() for v in self.verdicts]
        out += [f"{s.case:<10} {s.approach:<8} {s.variant:<3} skipped: {s.note}"
                for s in self.skipped]
        out += [f"{c:<10} {a:<8} {v:<3} MISSING" for c, a, v in self.missing]
        for c in self.cross:
            status = "equivalent" if c.equivalent else "DIFFERENT"
            out.append(f"{c.case:<10} cross    {c.variant:<3} {status} "
                       f"({', '.join(sorted(c.traces))})")
        good = sum(v.ok for v in self.verdicts)
        out.append(f"{good}/{len(self.verdicts)} derivations match, "
                   f"{len(self.skipped)} skipped, {len(self.missing)} missing, "
                   f"{self.seconds:.2f}s")
        return out


def run_matrix(root: Optional[Path] = None, cases=None) -> MatrixReport:
    """Run every fixture variant plus a cross-approach check per variant."""
    start = time.perf_counter()
    report = MatrixReport()
    m = load_manifest(root)
    for case in cases or m["cases"]:
        entry = m["cases"][case]
        variants = sorted(entry["goldens"])
        for approach in entry["approaches"]:
            f = fixture(case, approach, root)
            for variant in variants:
                try:
                    report.verdicts.append(run_fixture(f, variant))
                except SkippedPair as sp:
                    report.skipped.append(sp)
                except KeyError:
                    if approach in entry["mandated"].get(variant, ()):
                        report.missing.append((case, approach, variant))
        for variant in variants:
            report.cross.append(cross_check(case, variant, root))
    report.seconds = time.perf_counter() - start
    return report
