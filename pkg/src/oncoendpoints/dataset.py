"""Corpus ingestion, annotation import, splits, and synthetic data.

File formats (all UTF-8, newline-delimited JSON):

* sentence corpus: ``{"pmid", "sentence_id", "text", "section"?}``
* abstract records: ``{"pmid", "title"?, "abstract", "section"?}``
* annotations/predictions: see `tagging.import_predictions`

The k-fold shuffle uses a splitmix64 stream (constants below) rather than a
platform RNG so that a fixed seed produces identical folds everywhere.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from random import Random
from typing import Iterable, Optional, Sequence

from .schema import (
    AnnotationSet,
    EndpointClass,
    EntitySpan,
    SentenceRecord,
    make_span,
    parse_class,
)
from .tagging import ImportSummary, import_predictions
from .patterns import QueryEnsemble, filter_corpus


class ParseError(ValueError):
    def __init__(self, message: str, record_index: Optional[int] = None):
        if record_index is not None:
            message = f"record {record_index}: {message}"
        super().__init__(message)
        self.record_index = record_index


class InvalidK(ValueError):
    pass


class EmptyAxis(ValueError):
    pass


@dataclass
class Document:
    pmid: str
    sentences: list[SentenceRecord]
    title: Optional[str] = None


@dataclass
class Corpus:
    documents: list[Document] = field(default_factory=list)

    def sentences(self) -> list[SentenceRecord]:
        return [s for d in self.documents for s in d.sentences]

    def sentence_map(self) -> dict[str, SentenceRecord]:
        return {s.sentence_id: s for s in self.sentences()}

    def pmids(self) -> list[str]:
        return [d.pmid for d in self.documents]

    def __len__(self) -> int:
        return sum(len(d.sentences) for d in self.documents)


# ---------------------------------------------------------------------------
# Sentence splitting

_ABBREVIATIONS = {
    "vs", "al", "dr", "mr", "mrs", "ms", "prof", "fig", "figs", "ref", "refs",
    "no", "nos", "approx", "ca", "resp", "e.g", "i.e", "etc", "inc", "ltd",
    "st", "jr", "sr", "med", "min", "max",
}

_SPLIT_RE = re.compile(r"([.!?])(\s+)(?=[A-Z0-9])")


def split_sentences(text: str) -> list[str]:
    """Deterministic splitter: sentence-final punctuation, whitespace, then an
    uppercase letter or digit, guarded by an abbreviation list."""
    sentences = []
    start = 0
    for m in _SPLIT_RE.finditer(text):
        if m.group(1) == ".":
            before = text[: m.start(1)]
            word = re.search(r"([A-Za-z][\w.]*)$", before)
            if word:
                w = word.group(1).rstrip(".").lower()
                if w in _ABBREVIATIONS or (len(w) == 1 and w.isalpha()):
                    continue
        chunk = text[start : m.end(1)].strip()
        if chunk:
            sentences.append(chunk)
        start = m.end()
    tail = text[start:].strip()
    if tail:
        sentences.append(tail)
    return sentences


# ---------------------------------------------------------------------------
# Ingestion


def _read_jsonl(path) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad JSON: {exc}", i) from None
    return records


def ingest(path, format: str = "plain_sentences") -> Corpus:
    """Load a corpus file.

    plain_sentences: one sentence record per line. abstract_records: one
    abstract per line, split into sentences here with ids "<pmid>:<index>".
    """
    records = _read_jsonl(path)
    corpus = Corpus()
    if format == "plain_sentences":
        docs: dict[str, Document] = {}
        seen_ids: set[str] = set()
        for i, rec in enumerate(records):
            try:
                pmid = str(rec["pmid"])
                text = rec["text"]
            except KeyError as exc:
                raise ParseError(f"missing field {exc}", i) from None
            doc = docs.get(pmid)
            if doc is None:
                doc = docs[pmid] = Document(pmid, [])
                corpus.documents.append(doc)
            sid = str(rec.get("sentence_id") or f"{pmid}:{len(doc.sentences)}")
            if sid in seen_ids:
                raise ParseError(f"duplicate sentence_id {sid!r}", i)
            seen_ids.add(sid)
            doc.sentences.append(SentenceRecord(sid, pmid, text, rec.get("section")))
        return corpus
    if format == "abstract_records":
        seen: set[str] = set()
        for i, rec in enumerate(records):
            try:
                pmid = str(rec["pmid"])
                abstract = rec["abstract"]
            except KeyError as exc:
                raise ParseError(f"missing field {exc}", i) from None
            if pmid in seen:
                raise ParseError(f"duplicate pmid {pmid!r}", i)
            seen.add(pmid)
            section = rec.get("section", "abstract")
            doc = Document(pmid, [], title=rec.get("title"))
            for j, sentence in enumerate(split_sentences(abstract)):
                doc.sentences.append(
                    SentenceRecord(f"{pmid}:{j}", pmid, sentence, section)
                )
            corpus.documents.append(doc)
        return corpus
    raise ParseError(f"unknown corpus format {format!r}")


def write_corpus(sentences: Iterable[SentenceRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in sentences:
            rec = {"pmid": s.pmid, "sentence_id": s.sentence_id, "text": s.text}
            if s.section:
                rec["section"] = s.section
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def import_label_export(path, corpus: Corpus, source: str = "labels") -> tuple[AnnotationSet, ImportSummary]:
    """Import a labelling-tool JSON export (list of tasks with span results)."""
    with open(path, encoding="utf-8") as fh:
        tasks = json.load(fh)
    records = []
    for task in tasks:
        data = task.get("data", {})
        sid = str(data.get("sentence_id") or data.get("id") or "")
        spans = []
        for annotation in task.get("annotations", []):
            for result in annotation.get("result", []):
                value = result.get("value", {})
                labels = value.get("labels", [])
                if not labels:
                    continue
                spans.append(
                    {"start": value.get("start"), "end": value.get("end"), "class": labels[0]}
                )
        records.append({"sentence_id": sid, "spans": spans})
    return import_predictions(records, corpus.sentence_map(), source=source)


# ---------------------------------------------------------------------------
# Training-corpus construction and splits


def build_training_corpus(
    ensembles: Sequence[QueryEnsemble],
    negatives: Sequence[QueryEnsemble],
    sentences: Iterable[SentenceRecord],
) -> list[SentenceRecord]:
    """Positive-query hits plus negative-sample hits, deduplicated, in corpus order."""
    sentences = list(sentences)
    selected: dict[str, SentenceRecord] = {}
    for s in filter_corpus(list(ensembles) + list(negatives), sentences):
        selected[s.sentence_id] = s
    return [s for s in sentences if s.sentence_id in selected]


def split_pmid_disjoint(
    sentences: Iterable[SentenceRecord], test_pmids: set[str]
) -> tuple[list[SentenceRecord], list[SentenceRecord]]:
    train, test = [], []
    for s in sentences:
        (test if s.pmid in test_pmids else train).append(s)
    return train, test


_MASK64 = (1 << 64) - 1
_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_SPLITMIX_MUL1 = 0xBF58476D1CE4E5B9
_SPLITMIX_MUL2 = 0x94D049BB133111EB


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + _SPLITMIX_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * _SPLITMIX_MUL1) & _MASK64
    z = ((z ^ (z >> 27)) * _SPLITMIX_MUL2) & _MASK64
    return state, z ^ (z >> 31)


def _shuffled_indices(n: int, seed: int) -> list[int]:
    indices = list(range(n))
    state = seed & _MASK64
    for i in range(n - 1, 0, -1):
        state, z = _splitmix64(state)
        j = z % (i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return indices


def kfold(sentences: Sequence, k: int, seed: int) -> list[list]:
    """Disjoint, covering folds whose sizes differ by at most one.

    Shuffling runs on a splitmix64 Fisher-Yates so the assignment is a pure
    function of (input order, k, seed) on every platform.
    """
    n = len(sentences)
    if k < 2 or k > n:
        raise InvalidK(f"k must be in [2, {n}], got {k}")
    order = _shuffled_indices(n, seed)
    base, extra = divmod(n, k)
    folds = []
    cursor = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append([sentences[j] for j in order[cursor : cursor + size]])
        cursor += size
    return folds


# ---------------------------------------------------------------------------
# Fine-tune configuration grid

EPOCH_AXIS = (2, 3, 4)
LEARNING_RATE_AXIS = (2e-5, 3e-5, 5e-5)
BATCH_SIZE_AXIS = (16, 32)


@dataclass(frozen=True)
class FineTuneConfig:
    epochs: int
    learning_rate: float
    batch_size: int
    seed: int
    model_name: str


def finetune_grid(
    model_name: str = "bert-base-cased",
    seed: int = 42,
    epochs: Sequence[int] = EPOCH_AXIS,
    learning_rates: Sequence[float] = LEARNING_RATE_AXIS,
    batch_sizes: Sequence[int] = BATCH_SIZE_AXIS,
) -> list[FineTuneConfig]:
    if not epochs or not learning_rates or not batch_sizes:
        raise EmptyAxis("every hyperparameter axis needs at least one value")
    return [
        FineTuneConfig(e, lr, bs, seed, model_name)
        for e in epochs
        for lr in learning_rates
        for bs in batch_sizes
    ]


def export_finetune_grid(configs: Sequence[FineTuneConfig], path) -> None:
    """Write one human-readable key-value stanza per grid point."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, cfg in enumerate(configs, start=1):
            fh.write(f"[config-{i:02d}]\n")
            fh.write(f"model_name = {cfg.model_name}\n")
            fh.write(f"epochs = {cfg.epochs}\n")
            fh.write(f"learning_rate = {cfg.learning_rate:g}\n")
            fh.write(f"batch_size = {cfg.batch_size}\n")
            fh.write(f"seed = {cfg.seed}\n")
            fh.write("\n")


# ---------------------------------------------------------------------------
# Synthetic corpus generation

# Default class-frequency targets: entity word counts observed in a large
# annotated training corpus; keeps the synthetic mix as imbalanced as the
# real literature.
DEFAULT_CLASS_WEIGHTS = {
    "DFS": 2907, "DFS_CIH": 1282, "DFS_CIL": 1176,
    "DFS_percent": 6847, "DFS_percent_CIH": 1980, "DFS_percent_CIL": 1770,
    "DoR": 1931, "DoR_CIH": 677, "DoR_CIL": 737,
    "ORR": 3320, "ORR_CIH": 541, "ORR_CIL": 503,
    "OS": 5051, "OS_CIH": 1418, "OS_CIL": 1372,
    "OS_percent": 5805, "OS_percent_CIH": 2063, "OS_percent_CIL": 1880,
    "PFS": 5139, "PFS_CIH": 1332, "PFS_CIL": 1256,
    "PFS_percent": 1758, "PFS_percent_CIH": 959, "PFS_percent_CIL": 981,
    "time_point": 5925,
}


class _Builder:
    """Accumulates sentence text while recording gold span offsets."""

    def __init__(self):
        self.parts: list[str] = []
        self.length = 0
        self.spans: list[tuple[int, int, EndpointClass]] = []

    def add(self, text: str, label: Optional[EndpointClass] = None) -> "_Builder":
        start = self.length
        self.parts.append(text)
        self.length += len(text)
        if label is not None:
            self.spans.append((start, self.length, label))
        return self

    def build(self, sentence_id: str, pmid: str) -> tuple[SentenceRecord, list[EntitySpan]]:
        text = "".join(self.parts)
        record = SentenceRecord(sentence_id, pmid, text)
        spans = [make_span(text, s, e, c) for s, e, c in self.spans]
        return record, spans


_CUE_SURFACES = {
    ("OS", "percent"): ["overall survival", "OS", "survival"],
    ("OS", "duration"): ["overall survival", "OS", "median survival"],
    ("PFS", "percent"): ["PFS", "progression-free survival"],
    ("PFS", "duration"): ["PFS", "progression-free survival"],
    ("DFS", "percent"): ["DFS", "disease-free survival"],
    ("DFS", "duration"): ["DFS", "disease-free survival"],
    ("ORR", "percent"): ["objective response rate", "ORR", "overall response rate"],
    ("DoR", "duration"): ["duration of response", "DoR"],
}

# Cue surfaces that still match when not followed by "rate(s)".
_STANDALONE_CUES = {
    "OS": ["OS", "overall survival"],
    "PFS": ["PFS", "progression-free survival"],
    "DFS": ["DFS", "disease-free survival"],
}

_TIME_POINTS = [1, 2, 3, 5, 7, 10]
_DRUGS = ["AB-123", "veximab", "cartinib", "placitaxel", "olaparib", "standard care"]
_GROUPS = ["treatment", "control", "experimental", "combination"]


def _pct(rng: Random) -> str:
    whole = rng.randint(5, 99)
    if rng.random() < 0.5:
        return f"{whole}.{rng.randint(0, 9)}"
    return str(whole)


def _months(rng: Random) -> str:
    whole = rng.randint(2, 48)
    if rng.random() < 0.6:
        return f"{whole}.{rng.randint(0, 9)}"
    return str(whole)


def _ci_around(rng: Random, value: str, spread: int) -> tuple[str, str]:
    v = float(value)
    low = max(0.1, v - rng.randint(1, spread))
    high = v + rng.randint(1, spread)
    fmt = lambda x: f"{x:.1f}" if "." in value else str(int(x))
    return fmt(low), fmt(high)


class SyntheticGenerator:
    """Deterministic sentence factory mirroring the construction families."""

    FAMILIES = (
        ("simple", 0.42),
        ("respectively_tp", 0.14),
        ("respectively_endpoints", 0.08),
        ("comparison", 0.12),
        ("combined", 0.05),
        ("ambiguous", 0.04),
        ("negative", 0.15),
    )

    @staticmethod
    def _point_name(base: str, measure: str) -> str:
        if base in ("ORR", "DoR") or measure == "duration":
            return base
        return f"{base}_percent"

    def __init__(self, seed: int, class_weights: Optional[dict[str, float]] = None):
        self.rng = Random(seed)
        weights = dict(class_weights or DEFAULT_CLASS_WEIGHTS)
        self._pairs = list(_CUE_SURFACES)
        self._pair_weights = [
            weights.get(self._point_name(base, measure), 1.0)
            for base, measure in self._pairs
        ]
        self._ci_prob = {}
        for base, measure in self._pairs:
            point = self._point_name(base, measure)
            cil = weights.get(f"{point}_CIL", 0.0)
            self._ci_prob[(base, measure)] = min(0.9, cil / max(weights.get(point, 1.0), 1.0))

    # -- helpers --

    def _pick_pair(self, measure: Optional[str] = None) -> tuple[str, str]:
        pairs = self._pairs
        weights = self._pair_weights
        if measure is not None:
            chosen = [(p, w) for p, w in zip(pairs, weights) if p[1] == measure]
            pairs = [p for p, _ in chosen]
            weights = [w for _, w in chosen]
        return self.rng.choices(pairs, weights=weights, k=1)[0]

    def _cue(self, base: str, measure: str) -> str:
        return self.rng.choice(_CUE_SURFACES[(base, measure)])

    def _point_class(self, base: str, measure: str) -> EndpointClass:
        return parse_class(self._point_name(base, measure))

    def _want_ci(self, base: str, measure: str) -> bool:
        return self.rng.random() < self._ci_prob[(base, measure)]

    def _add_ci(self, b: _Builder, base: str, measure: str, value: str, bracket="()") -> None:
        cls = self._point_class(base, measure)
        cil = parse_class(cls.value + "_CIL")
        cih = parse_class(cls.value + "_CIH")
        low, high = _ci_around(self.rng, value, 8 if measure == "percent" else 5)
        b.add(f" {bracket[0]}95% CI ")
        b.add(low, cil)
        b.add("-")
        b.add(high, cih)
        b.add(bracket[1])

    def _tp_phrase(self, b: _Builder, tp: int) -> None:
        b.add(f"{tp}-year", EndpointClass.time_point)

    # -- families --

    def _simple(self, b: _Builder) -> None:
        base, measure = self._pick_pair()
        cue = self._cue(base, measure)
        if measure == "percent":
            if base != "ORR" and self.rng.random() < 0.75:
                tp = self.rng.choice(_TIME_POINTS)
                b.add("The ")
                self._tp_phrase(b, tp)
                b.add(f" {cue} rate was ")
            else:
                if base != "ORR":
                    cue = self.rng.choice(_STANDALONE_CUES[base])
                b.add(f"The {cue} was ")
            value = _pct(self.rng)
            b.add(f"{value}%", self._point_class(base, measure))
            if self._want_ci(base, measure):
                self._add_ci(b, base, measure, value)
        else:
            b.add(f"The median {cue} was ")
            value = _months(self.rng)
            b.add(f"{value} months", self._point_class(base, measure))
            if self._want_ci(base, measure):
                self._add_ci(b, base, measure, value)
        b.add(f" in the {self.rng.choice(_GROUPS)} group.")

    def _respectively_tp(self, b: _Builder) -> None:
        base, measure = self._pick_pair(measure="percent")
        if base == "ORR":
            base = "OS"
        cue = self._cue(base, "percent")
        count = self.rng.randint(2, 3)
        tps = sorted(self.rng.sample(_TIME_POINTS, count))
        b.add("The ")
        for i, tp in enumerate(tps):
            last = i == len(tps) - 1
            if last:
                b.add(f"{tp}-year", EndpointClass.time_point)
            else:
                b.add(str(tp), EndpointClass.time_point)
                b.add("-, " if i < len(tps) - 2 else "- and ")
        b.add(f" {cue} rates were ")
        cls = self._point_class(base, "percent")
        values = sorted((_pct(self.rng) for _ in tps), key=float, reverse=True)
        for i, v in enumerate(values):
            b.add(f"{v}%", cls)
            if i < len(values) - 2:
                b.add(", ")
            elif i == len(values) - 2:
                b.add(" and ")
        b.add(", respectively.")

    def _respectively_endpoints(self, b: _Builder) -> None:
        pools = [("PFS", "OS"), ("OS", "PFS"), ("DFS", "OS")]
        first, second = self.rng.choice(pools)
        cue1 = self.rng.choice(_STANDALONE_CUES[first])
        cue2 = self.rng.choice(_STANDALONE_CUES[second])
        if self.rng.random() < 0.5:
            # shared trailing unit: bare-number spans
            b.add(f"The median {cue1} and {cue2} were ")
            v1, v2 = _months(self.rng), _months(self.rng)
            b.add(v1, self._point_class(first, "duration"))
            b.add(" and ")
            b.add(v2, self._point_class(second, "duration"))
            b.add(" months, respectively.")
        else:
            b.add(f"The {cue1} and {cue2} rates were ")
            v1, v2 = _pct(self.rng), _pct(self.rng)
            b.add(f"{v1}%", self._point_class(first, "percent"))
            b.add(" and ")
            b.add(f"{v2}%", self._point_class(second, "percent"))
            b.add(", respectively.")

    def _comparison(self, b: _Builder) -> None:
        base, measure = self._pick_pair()
        cue = self._cue(base, measure)
        cls = self._point_class(base, measure)
        cue_word = self.rng.choice(["versus", "vs"])
        if measure == "percent":
            b.add("The ")
            if base != "ORR":
                self._tp_phrase(b, self.rng.choice(_TIME_POINTS))
                b.add(" ")
            b.add(f"{cue} rate was " if base != "ORR" else f"{cue} was ")
            v1, v2 = _pct(self.rng), _pct(self.rng)
            b.add(f"{v1}%", cls)
            b.add(f" {cue_word} ")
            b.add(f"{v2}%", cls)
            b.add(f" for {self.rng.choice(_DRUGS)} and {self.rng.choice(_DRUGS)}.")
        else:
            b.add(f"Median {cue} was ")
            v1, v2 = _months(self.rng), _months(self.rng)
            b.add(f"{v1} months", cls)
            if self._want_ci(base, measure):
                self._add_ci(b, base, measure, v1)
                b.add(f" {cue_word} ")
                b.add(f"{v2} months", cls)
                self._add_ci(b, base, measure, v2)
            else:
                b.add(f" {cue_word} ")
                b.add(f"{v2} months", cls)
            b.add(" in the control group.")

    def _combined(self, b: _Builder) -> None:
        orr = _pct(self.rng)
        b.add("The objective response rate was ")
        b.add(f"{orr}%", EndpointClass.ORR)
        b.add("; the median progression-free survival and OS were ")
        v1, v2 = _months(self.rng), _months(self.rng)
        b.add(v1, EndpointClass.PFS)
        b.add(" and ")
        b.add(v2, EndpointClass.OS)
        b.add(" months, respectively.")

    def _ambiguous(self, b: _Builder) -> None:
        # 2x2 time-point/endpoint grid over versus pairs. Gold follows the
        # same-endpoint-per-pair reading; positional adjacent grouping reads
        # it the other way, so these sentences are deliberately unwinnable.
        e1, e2 = self.rng.choice([("OS", "PFS"), ("DFS", "OS")])
        t1, t2 = sorted(self.rng.sample(_TIME_POINTS, 2))
        g1, g2 = self.rng.sample(_GROUPS, 2)
        b.add(f"In the {g1} and {g2} groups, the ")
        b.add(f"{t1}-year", EndpointClass.time_point)
        b.add(" and ")
        b.add(f"{t2}-year", EndpointClass.time_point)
        b.add(f" {e1} and {e2} rates were ")
        values = [_pct(self.rng) for _ in range(4)]
        gold = [self._point_class(e1, "percent")] * 2 + [self._point_class(e2, "percent")] * 2
        b.add(f"{values[0]}%", gold[0])
        b.add(" versus ")
        b.add(f"{values[1]}%", gold[1])
        b.add(" and ")
        b.add(f"{values[2]}%", gold[2])
        b.add(" versus ")
        b.add(f"{values[3]}%", gold[3])
        b.add(", respectively.")

    def _negative(self, b: _Builder) -> None:
        kind = self.rng.choice(["age", "los", "duration", "sd", "bare_percent"])
        if kind == "age":
            lo = self.rng.randint(25, 50)
            hi = lo + self.rng.randint(10, 40)
            b.add(
                self.rng.choice(
                    [
                        f"Median age was {lo + 10} years (range {lo}-{hi}).",
                        f"The median age of enrolled patients was {lo + 12} years.",
                        f"Patients had a mean age of {lo + 8}.{self.rng.randint(0,9)} years at diagnosis.",
                    ]
                )
            )
        elif kind == "los":
            days = self.rng.randint(2, 30)
            b.add(
                self.rng.choice(
                    [
                        f"The median LOS was {days} days.",
                        f"Median length of stay was {days} days (range {max(1, days - 3)}-{days + 9}).",
                        f"Hospital LOS averaged {days}.{self.rng.randint(0,9)} days.",
                    ]
                )
            )
        elif kind == "duration":
            months = self.rng.randint(2, 36)
            b.add(
                self.rng.choice(
                    [
                        f"The median duration of treatment was {months} months.",
                        f"Median duration of follow-up was {months}.{self.rng.randint(0,9)} months.",
                        f"Therapy continued for a mean duration of {months} months (range {max(1, months - 2)}-{months + 10} months).",
                    ]
                )
            )
        elif kind == "sd":
            v = self.rng.randint(3, 40)
            b.add(
                self.rng.choice(
                    [
                        f"The mean lesion diameter was {v}.{self.rng.randint(0,9)} mm (SD {self.rng.randint(1, 5)}.{self.rng.randint(0,9)}).",
                        f"Mean time to recovery was {v} days (SD {self.rng.randint(1, 9)}).",
                        f"The mean score was {v}.{self.rng.randint(0,9)} with a standard deviation of {self.rng.randint(1, 6)}.{self.rng.randint(0,9)}.",
                    ]
                )
            )
        else:
            pct = self.rng.randint(3, 80)
            b.add(
                self.rng.choice(
                    [
                        f"Grade 3 adverse events occurred in {pct}% of patients.",
                        f"In total, {pct}% of participants completed the study.",
                        f"Toxicity led to discontinuation in {pct}.{self.rng.randint(0,9)}% of cases.",
                    ]
                )
            )

    def sentence(self, sentence_id: str, pmid: str) -> tuple[SentenceRecord, list[EntitySpan]]:
        family = self.rng.choices(
            [f for f, _ in self.FAMILIES], weights=[w for _, w in self.FAMILIES], k=1
        )[0]
        b = _Builder()
        getattr(self, f"_{family}")(b)
        return b.build(sentence_id, pmid)


def generate_synthetic(
    n: int,
    seed: int,
    class_weights: Optional[dict[str, float]] = None,
    sentences_per_doc: int = 5,
) -> tuple[Corpus, AnnotationSet]:
    """Build a corpus of n sentences with exact gold spans by construction."""
    generator = SyntheticGenerator(seed, class_weights)
    corpus = Corpus()
    gold = AnnotationSet(source="gold")
    doc: Optional[Document] = None
    for i in range(n):
        if doc is None or len(doc.sentences) >= sentences_per_doc:
            doc = Document(pmid=f"SYN{i // sentences_per_doc:06d}", sentences=[])
            corpus.documents.append(doc)
        sid = f"{doc.pmid}:{len(doc.sentences)}"
        record, spans = generator.sentence(sid, doc.pmid)
        doc.sentences.append(record)
        gold.add(sid, spans)
    return corpus, gold
