"""Token-label codec, the rule-based tagger, and external-prediction import.

Tags use a BIO scheme over the 25 classes (51 tags total) so that adjacent
same-class entities, which "respectively" value lists produce routinely,
survive a round trip through per-token labels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from . import lexical
from .lexical import (
    IntervalGroup,
    MentionKind,
    NumericMention,
    Token,
    TokenKind,
    Unit,
)
from .patterns import QueryEnsemble, find_matches, load_query_library
from .schema import (
    AnnotationSet,
    Base,
    Bound,
    EndpointClass,
    EntitySpan,
    Measure,
    OffsetOutOfBounds,
    OverlappingSpans,
    SentenceRecord,
    UnknownClass,
    class_for,
    make_span,
    parse_class,
)


class MisalignedSpan(ValueError):
    """A span boundary falls inside a token: annotation/tokenizer mismatch."""


OUTSIDE = "O"


def tag_names() -> list[str]:
    """The 51 valid tag values: O plus B-/I- per class."""
    out = [OUTSIDE]
    for c in EndpointClass:
        out.append(f"B-{c.value}")
        out.append(f"I-{c.value}")
    return out


def encode(spans: Sequence[EntitySpan], tokens: Sequence[Token]) -> list[str]:
    """Project character spans onto per-token BIO tags.

    Every span boundary must coincide with token boundaries; anything else
    raises MisalignedSpan.
    """
    starts = {t.start: i for i, t in enumerate(tokens)}
    ends = {t.end: i for i, t in enumerate(tokens)}
    tags = [OUTSIDE] * len(tokens)
    for span in spans:
        if span.start not in starts or span.end not in ends:
            raise MisalignedSpan(
                f"span ({span.start}, {span.end}) does not align with token boundaries"
            )
        first, last = starts[span.start], ends[span.end]
        tags[first] = f"B-{span.label.value}"
        for i in range(first + 1, last + 1):
            if tags[i] != OUTSIDE:
                raise MisalignedSpan(f"overlapping spans at token {i}")
            tags[i] = f"I-{span.label.value}"
        if tags[first] != f"B-{span.label.value}":  # pragma: no cover - guarded above
            raise MisalignedSpan(f"overlapping spans at token {first}")
    return tags


def decode(
    tags: Sequence[str],
    tokens: Sequence[Token],
    text: Optional[str] = None,
    diagnostics: Optional[list[str]] = None,
) -> list[EntitySpan]:
    """Rebuild character spans from BIO tags.

    Never fails: an I- tag with no live entity of the same class is repaired
    to B- and reported through `diagnostics`. decode(encode(s)) == s for any
    legal span set.
    """
    if len(tags) != len(tokens):
        raise ValueError(f"{len(tags)} tags for {len(tokens)} tokens")
    diags = diagnostics if diagnostics is not None else []
    spans: list[EntitySpan] = []
    current: Optional[tuple[EndpointClass, int, int]] = None  # (class, first, last)

    def flush():
        nonlocal current
        if current is not None:
            cls, first, last = current
            start, end = tokens[first].start, tokens[last].end
            surface = text[start:end] if text is not None else ""
            spans.append(EntitySpan(start, end, cls, surface))
            current = None

    for i, tag in enumerate(tags):
        if tag == OUTSIDE:
            flush()
            continue
        prefix, _, name = tag.partition("-")
        cls = parse_class(name)
        if prefix == "I" and current is not None and current[0] is cls:
            current = (cls, current[1], i)
            continue
        if prefix == "I":
            diags.append(f"ill-formed I-{name} at token {i} repaired to B-{name}")
        flush()
        current = (cls, i, i)
    flush()
    return spans


# ---------------------------------------------------------------------------
# Rule-based tagger


_CUE_ENSEMBLE_BASES = {
    "os": Base.OS,
    "pfs": Base.PFS,
    "dfs": Base.DFS,
    "orr": Base.ORR,
    "dor": Base.DoR,
}

# Heads that intercept a value before it can reach an endpoint cue.
_NEGATIVE_HEAD_WORDS = {"age", "ages", "stay", "follow", "followup", "deviation", "enrollment"}
_NEGATIVE_HEAD_EXACT = {"LOS", "SD", "IQR", "SE", "SEM"}
_COMPARE_WORDS = {"vs", "versus", "than"}
_SEPARATOR_WORDS = {"and", "or"}

# ORR percents must sit close to their cue ("responses (24.1%)"), otherwise
# unrelated percentages in the same clause would be swept in.
_ORR_MAX_GAP = 3


@dataclass(frozen=True)
class Cue:
    base: Base
    token_start: int
    token_end: int
    start: int
    end: int
    gated: bool = False  # DoR "median duration" form: needs response evidence


@dataclass
class SentenceAnalysis:
    """Everything the tagger derives from one sentence."""

    record: SentenceRecord
    tokens: list[Token]
    mentions: list[NumericMention]
    groups: list[IntervalGroup]
    cues: list[Cue]
    clauses: list[tuple[int, int]]  # token index ranges, split at semicolons
    diagnostics: list[str] = field(default_factory=list)


class RuleTagger:
    """Deterministic tagger driven by the bundled query ensembles.

    Emits endpoint value spans, CI bound spans and time-point spans; anything
    ambiguous is left untagged and surfaced as a diagnostic instead.
    """

    def __init__(self, ensembles: Optional[dict[str, QueryEnsemble]] = None):
        library = ensembles if ensembles is not None else load_query_library()
        self.cue_ensembles = [
            (library[name], base) for name, base in _CUE_ENSEMBLE_BASES.items() if name in library
        ]
        if not self.cue_ensembles:
            raise ValueError("no cue ensembles (os/pfs/dfs/orr/dor) in query library")

    # -- cue detection ------------------------------------------------------

    def _raw_cues(self, tokens, numeric_kinds) -> list[Cue]:
        found: list[Cue] = []
        for ensemble, base in self.cue_ensembles:
            for pattern in ensemble.positive:
                for m in find_matches(pattern, tokens, numeric_kinds):
                    found.append(
                        Cue(base, m.token_start, m.token_end, m.start, m.end)
                    )
        # Longest-wins overlap resolution, then position order.
        found.sort(key=lambda c: (c.token_start, -(c.token_end - c.token_start)))
        kept: list[Cue] = []
        for cue in found:
            if kept and cue.token_start < kept[-1].token_end:
                continue
            kept.append(cue)
        return kept

    def _cues(self, tokens, numeric_kinds) -> list[Cue]:
        cues = self._raw_cues(tokens, numeric_kinds)

        # Bare "survival" never means OS when it is the tail of a
        # "...-free survival" compound (metastasis-free, event-free, ...).
        def free_compound(cue: Cue) -> bool:
            return (
                cue.base is Base.OS
                and tokens[cue.token_start].lower() == "survival"
                and cue.token_start > 0
                and tokens[cue.token_start - 1].lower() == "free"
            )

        cues = [c for c in cues if not free_compound(c)]

        # Merge same-base cues separated only by brackets/punctuation, so
        # "overall survival (OS)" is one cue.
        merged: list[Cue] = []
        for cue in cues:
            if merged and merged[-1].base is cue.base:
                prev = merged[-1]
                between = tokens[prev.token_end : cue.token_start]
                if all(
                    t.kind
                    in (TokenKind.OPEN_BRACKET, TokenKind.CLOSE_BRACKET, TokenKind.PUNCTUATION)
                    for t in between
                ):
                    merged[-1] = Cue(
                        cue.base, prev.token_start, cue.token_end, prev.start, cue.end
                    )
                    continue
            merged.append(cue)

        # DoR cues whose surface lacks "response" are gated on sentence-level
        # response evidence (an ORR cue or an explicit duration-of-response).
        out: list[Cue] = []
        for cue in merged:
            if cue.base is Base.DoR:
                words = {t.lower() for t in tokens[cue.token_start : cue.token_end]}
                gated = not (words & {"response", "responses", "dor"})
                cue = Cue(cue.base, cue.token_start, cue.token_end, cue.start, cue.end, gated)
            out.append(cue)
        has_response_evidence = any(
            (c.base is Base.ORR) or (c.base is Base.DoR and not c.gated) for c in out
        )
        if not has_response_evidence:
            out = [c for c in out if not (c.base is Base.DoR and c.gated)]
        return out

    # -- analysis -----------------------------------------------------------

    def analyze(self, record: SentenceRecord) -> SentenceAnalysis:
        lex = lexical.analyze(record.text)
        numeric_kinds = {m.token_index: m.kind for m in lex.mentions}
        cues = self._cues(lex.tokens, numeric_kinds)
        clauses = []
        start = 0
        for i, tok in enumerate(lex.tokens):
            if tok.kind is TokenKind.PUNCTUATION and tok.text == ";":
                clauses.append((start, i))
                start = i + 1
        clauses.append((start, len(lex.tokens)))
        return SentenceAnalysis(
            record=record,
            tokens=lex.tokens,
            mentions=lex.mentions,
            groups=lex.groups,
            cues=cues,
            clauses=clauses,
            diagnostics=list(lex.diagnostics),
        )

    # -- value candidacy ----------------------------------------------------

    @staticmethod
    def _p_value(tokens, idx: int) -> bool:
        if idx >= 2:
            rel = tokens[idx - 1]
            head = tokens[idx - 2]
            if (
                rel.kind is TokenKind.PUNCTUATION
                and rel.text in "=<>≤≥"
                and head.kind is TokenKind.WORD
                and head.lower() == "p"
            ):
                return True
        return False

    def _value_candidates(self, a: SentenceAnalysis) -> list[NumericMention]:
        out = []
        for m in a.mentions:
            if m.kind not in (MentionKind.PERCENT, MentionKind.DURATION):
                continue
            # Everything inside an interval group (bounds, the CI level, the
            # range unit) is interval material, never a point value.
            if any(g.start <= m.start < g.end for g in a.groups):
                continue
            if self._p_value(a.tokens, m.token_index):
                continue
            out.append(m)
        return out

    def _intercepted(self, a: SentenceAnalysis, mention: NumericMention, cue: Cue) -> bool:
        """A negative head between the cue and the value claims the value."""
        for tok in a.tokens[cue.token_end : mention.token_index]:
            if tok.text in _NEGATIVE_HEAD_EXACT:
                return True
            if tok.kind is TokenKind.WORD and tok.lower() in _NEGATIVE_HEAD_WORDS:
                return True
        return False

    # -- assignment ---------------------------------------------------------

    @staticmethod
    def _cue_groups(tokens, cues: list[Cue]) -> list[list[Cue]]:
        groups: list[list[Cue]] = []
        for cue in cues:
            if groups:
                prev = groups[-1][-1]
                between = tokens[prev.token_end : cue.token_start]
                coordinated = all(
                    t.kind
                    in (TokenKind.OPEN_BRACKET, TokenKind.CLOSE_BRACKET, TokenKind.HYPHEN)
                    or (t.kind is TokenKind.PUNCTUATION and t.text == ",")
                    or (t.kind is TokenKind.WORD and t.lower() in _SEPARATOR_WORDS)
                    for t in between
                )
                if coordinated:
                    groups[-1].append(cue)
                    continue
            groups.append([cue])
        return groups

    def _class_of(self, base: Base, mention: NumericMention) -> Optional[EndpointClass]:
        if mention.kind is MentionKind.PERCENT:
            if base is Base.DoR:
                return None
            try:
                return class_for(base, Measure.PERCENT, Bound.POINT)
            except UnknownClass:
                return None
        if base is Base.ORR:
            return None
        try:
            return class_for(base, Measure.DURATION, Bound.POINT)
        except UnknownClass:
            return None

    def _orr_adjacent(self, a: SentenceAnalysis, cue: Cue, mention: NumericMention) -> bool:
        gap = [
            t
            for t in a.tokens[cue.token_end : mention.token_index]
            if t.kind not in (TokenKind.OPEN_BRACKET, TokenKind.CLOSE_BRACKET)
        ]
        return len(gap) <= _ORR_MAX_GAP

    @staticmethod
    def _coordinated_with(a: SentenceAnalysis, lo_token: int, hi_token: int) -> bool:
        """Only list/comparison glue between two value tokens."""
        for t in a.tokens[lo_token + 1 : hi_token]:
            if t.kind in (
                TokenKind.OPEN_BRACKET,
                TokenKind.CLOSE_BRACKET,
                TokenKind.PERCENT_SIGN,
                TokenKind.HYPHEN,
            ):
                continue
            if t.kind is TokenKind.PUNCTUATION and t.text in ",.":
                continue
            if t.kind is TokenKind.WORD and (
                t.lower() in _SEPARATOR_WORDS or t.lower() in _COMPARE_WORDS
            ):
                continue
            return False
        return True

    def _assign_values(self, a: SentenceAnalysis) -> dict[int, EndpointClass]:
        """Map value-mention token index -> point class."""
        assigned: dict[int, EndpointClass] = {}
        candidates = self._value_candidates(a)
        carried_list: Optional[list[Cue]] = None

        for lo, hi in a.clauses:
            clause_cues = [c for c in a.cues if lo <= c.token_start < hi]
            clause_values = [m for m in candidates if lo <= m.token_index < hi]
            if not clause_values:
                if clause_cues:
                    groups = self._cue_groups(a.tokens, clause_cues)
                    carried_list = groups[-1] if len(groups[-1]) >= 2 else None
                continue
            if not clause_cues:
                # A clause of bare values continues the previous clause's
                # endpoint list ("; emphysema group, 80.0 and 74.9%").
                if carried_list is not None and len(clause_values) % len(carried_list) == 0:
                    self._assign_positional(a, carried_list, clause_values, assigned)
                continue

            groups = self._cue_groups(a.tokens, clause_cues)
            carried_list = groups[-1] if len(groups[-1]) >= 2 else None
            if len(groups) == 1 and len(groups[0]) >= 2:
                cue_list = groups[0]
                values = [m for m in clause_values if m.token_index >= cue_list[-1].token_end]
                before = [m for m in clause_values if m.token_index < cue_list[-1].token_end]
                if len(values) % len(cue_list) == 0 and values:
                    self._assign_positional(a, cue_list, values, assigned)
                else:
                    self._assign_by_scope(a, clause_cues, values, assigned)
                self._assign_by_scope(a, clause_cues, before, assigned)
            else:
                self._assign_by_scope(a, clause_cues, clause_values, assigned)

        self._apply_dor_pairing(a, assigned)
        return assigned

    def _assign_positional(self, a, cue_list: list[Cue], values, assigned) -> None:
        m = len(cue_list)
        for i, mention in enumerate(values):
            cue = cue_list[i % m]
            self._assign_one(a, cue, mention, assigned)

    def _assign_by_scope(self, a, cues: list[Cue], values, assigned) -> None:
        for mention in values:
            preceding = [c for c in cues if c.token_end <= mention.token_index]
            if not preceding:
                continue
            self._assign_one(a, preceding[-1], mention, assigned)

    def _assign_one(self, a, cue: Cue, mention, assigned) -> None:
        if self._intercepted(a, mention, cue):
            return
        cls = self._class_of(cue.base, mention)
        if cls is None:
            return
        if cue.base is Base.ORR and not self._orr_adjacent(a, cue, mention):
            # "ORR was 40% versus 20%": a percent coordinated with an
            # already-assigned ORR value continues the ORR list.
            chained = any(
                assigned.get(i) is EndpointClass.ORR
                and self._coordinated_with(a, i, mention.token_index)
                for i in assigned
                if i < mention.token_index
            )
            if not chained:
                return
        assigned[mention.token_index] = cls

    def _apply_dor_pairing(self, a: SentenceAnalysis, assigned: dict[int, EndpointClass]) -> None:
        """Pair a duration list against preceding outcome anchors.

        "responses (24.1%) and (41.3%) stabilizations ... duration of
        4 months and 5 months, respectively": only the duration aligned with
        the response anchor is a DoR.
        """
        dor_cues = [c for c in a.cues if c.base is Base.DoR and c.gated]
        if not dor_cues:
            return
        cue = dor_cues[0]
        durations = [
            i
            for i, cls in sorted(assigned.items())
            if cls is EndpointClass.DoR and i >= cue.token_end
        ]
        if len(durations) < 2:
            return
        anchors = [
            m.token_index
            for m in a.mentions
            if m.kind is MentionKind.PERCENT and m.token_index < cue.token_start
        ]
        if len(anchors) != len(durations):
            return
        orr_cues = [c for c in a.cues if c.base is Base.ORR]
        prev = 0
        for anchor, dur in zip(anchors, durations):
            window_has_response = any(
                prev <= c.token_start < anchor for c in orr_cues
            )
            if not window_has_response:
                del assigned[dur]
                a.diagnostics.append(
                    f"duration at token {dur} not paired with a response outcome"
                )
            prev = anchor

    # -- span emission ------------------------------------------------------

    def _mention_span(self, a: SentenceAnalysis, mention: NumericMention) -> tuple[int, int]:
        if mention.kind is MentionKind.DURATION and mention.shared_unit:
            tok = a.tokens[mention.token_index]
            return tok.start, tok.end
        return mention.start, mention.end

    def tag(self, record: SentenceRecord) -> list[EntitySpan]:
        spans, _ = self.tag_with_diagnostics(record)
        return spans

    def tag_with_diagnostics(
        self, record: SentenceRecord
    ) -> tuple[list[EntitySpan], list[str]]:
        a = self.analyze(record)
        assigned = self._assign_values(a)
        text = record.text
        spans: list[EntitySpan] = []
        mention_by_token = {m.token_index: m for m in a.mentions}

        for token_index, cls in sorted(assigned.items()):
            mention = mention_by_token[token_index]
            s, e = self._mention_span(a, mention)
            spans.append(make_span(text, s, e, cls))

        # CI bounds: numbers inside a confidence-interval group take the
        # family of the nearest preceding classed value.
        for g in a.groups:
            if g.kind != "confidence_interval":
                continue
            preceding = [
                (i, cls)
                for i, cls in sorted(assigned.items())
                if a.tokens[i].start < g.start
            ]
            if not preceding:
                continue
            _, value_cls = preceding[-1]
            base, measure, _ = value_cls.base, value_cls.measure, value_cls.bound
            low_tok, high_tok = a.tokens[g.low_token], a.tokens[g.high_token]
            spans.append(
                make_span(text, low_tok.start, low_tok.end, class_for(base, measure, Bound.CIL))
            )
            spans.append(
                make_span(text, high_tok.start, high_tok.end, class_for(base, measure, Bound.CIH))
            )

        if any(not s.label.is_time_point for s in spans):
            for series in lexical.expand_distributed_series(a.tokens):
                spans.append(
                    make_span(text, series.start, series.end, EndpointClass.time_point)
                )

        spans.sort()
        return spans, a.diagnostics

    def tag_corpus(self, sentences: Iterable[SentenceRecord]) -> AnnotationSet:
        out = AnnotationSet(source="rule")
        for record in sentences:
            spans = self.tag(record)
            if spans:
                out.add(record.sentence_id, spans)
            else:
                out.entries[record.sentence_id] = ()
        return out


def rule_tag(record: SentenceRecord, tagger: Optional[RuleTagger] = None) -> list[EntitySpan]:
    return (tagger or RuleTagger()).tag(record)


# ---------------------------------------------------------------------------
# External prediction import


class UnknownSentence(KeyError):
    pass


@dataclass
class ImportIssue:
    record_index: int
    sentence_id: str
    kind: str
    detail: str


@dataclass
class ImportSummary:
    accepted: int = 0
    rejected: int = 0
    issues: list[ImportIssue] = field(default_factory=list)


def import_predictions(
    records: Iterable[dict],
    sentences: dict[str, SentenceRecord],
    source: str = "import",
) -> tuple[AnnotationSet, ImportSummary]:
    """Validate and ingest newline-delimited prediction records.

    Each record: {"sentence_id": ..., "spans": [{"start", "end", "class"}]}.
    A bad record is rejected on its own; everything else is kept. Optional
    per-span "score" fields are preserved but unused.
    """
    out = AnnotationSet(source=source)
    summary = ImportSummary()
    for index, record in enumerate(records):
        sid = record.get("sentence_id", "")
        try:
            if sid not in sentences:
                raise UnknownSentence(sid)
            text = sentences[sid].text
            spans = []
            for raw in record.get("spans", []):
                if isinstance(raw, dict):
                    start, end, name = raw["start"], raw["end"], raw["class"]
                else:
                    start, end, name = raw[0], raw[1], raw[2]
                cls = parse_class(name)
                if not (0 <= start < end <= len(text)):
                    raise OffsetOutOfBounds(
                        f"span ({start}, {end}) out of bounds for sentence of length {len(text)}"
                    )
                spans.append(make_span(text, start, end, cls))
            out.add(sid, spans)
            summary.accepted += 1
        except UnknownSentence:
            summary.rejected += 1
            summary.issues.append(ImportIssue(index, sid, "UnknownSentence", f"unknown sentence_id {sid!r}"))
        except UnknownClass as exc:
            summary.rejected += 1
            summary.issues.append(ImportIssue(index, sid, "UnknownClass", str(exc)))
        except OffsetOutOfBounds as exc:
            summary.rejected += 1
            summary.issues.append(ImportIssue(index, sid, "OffsetOutOfBounds", str(exc)))
        except OverlappingSpans as exc:
            summary.rejected += 1
            summary.issues.append(ImportIssue(index, sid, "OverlappingSpans", str(exc)))
    return out, summary


def load_prediction_file(path, sentences, source="import"):
    """Read the newline-delimited JSON prediction format from disk."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return import_predictions(records, sentences, source=source)


def dump_annotations(annotations: AnnotationSet, path) -> None:
    """Write an AnnotationSet in the prediction-record format."""
    with open(path, "w", encoding="utf-8") as fh:
        for sid, spans in annotations:
            fh.write(
                json.dumps(
                    {
                        "sentence_id": sid,
                        "spans": [
                            {"start": s.start, "end": s.end, "class": s.label.value}
                            for s in spans
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
