"""Resolution of entity spans into structured endpoint observations.

Re-derives the sentence's construction from the span layout plus the raw
text (so it works identically on rule-tagger output, imported model
predictions, and gold annotations): comparison pairs, positionally paired
"respectively" lists, confidence-interval attachment, and time-point
association. Anything that cannot be paired safely becomes a diagnostic
instead of a guessed observation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Iterable, Optional, Sequence

from .lexical import (
    Token,
    TokenKind,
    Unit,
    parse_interval_group,
    recognize_numerics,
    tokenize,
)
from .schema import (
    AnnotationSet,
    Base,
    Bound,
    EntitySpan,
    Measure,
    SentenceRecord,
)

_COMPARE_WORDS = {"vs", "versus", "than"}
_SEPARATOR_WORDS = {"and", "or"}


@dataclass(frozen=True)
class EndpointObservation:
    sentence_id: str
    pmid: str
    base: Base
    measure: Measure
    value: Decimal
    unit: Unit
    ci_low: Optional[Decimal] = None
    ci_high: Optional[Decimal] = None
    time_point: Optional[tuple[Decimal, Unit]] = None
    construction: str = "simple"  # simple | respectively | comparison | combined
    spans: tuple[EntitySpan, ...] = ()


@dataclass(frozen=True)
class Issue:
    kind: str  # length_mismatch | unpaired_ci | ambiguous_grouping | orphan_time_point
    detail: str
    spans: tuple[EntitySpan, ...] = ()


@dataclass
class ResolutionDiagnostics:
    sentence_id: str
    issues: list[Issue] = field(default_factory=list)

    def __bool__(self) -> bool:
        return bool(self.issues)


# ---------------------------------------------------------------------------
# Helpers


def _head_token(tokens: Sequence[Token], span: EntitySpan) -> Optional[int]:
    for i, t in enumerate(tokens):
        if t.start >= span.start and t.end <= span.end and t.kind is TokenKind.NUMBER:
            return i
        if t.start >= span.end:
            break
    return None


def _family(span: EntitySpan) -> tuple[Base, Measure]:
    return (span.label.base, span.label.measure)


def _decimal_from(span: EntitySpan, text: str) -> Decimal:
    surface = span.surface or text[span.start : span.end]
    digits = "".join(ch for ch in surface if ch.isdigit() or ch == ".")
    try:
        return Decimal(digits)
    except InvalidOperation:
        return Decimal(0)


def attach_intervals(
    spans: Sequence[EntitySpan],
) -> tuple[dict[EntitySpan, tuple[EntitySpan, EntitySpan]], list[Issue]]:
    """Attach (CIL, CIH) pairs to the nearest preceding same-family value.

    Returns the value-span -> (low, high) mapping plus unpaired_ci issues for
    bounds that could not be attached.
    """
    values = [s for s in spans if not s.label.is_time_point and s.label.bound is Bound.POINT]
    bounds = [s for s in spans if not s.label.is_time_point and s.label.bound is not Bound.POINT]
    attachments: dict[EntitySpan, tuple[EntitySpan, EntitySpan]] = {}
    issues: list[Issue] = []

    i = 0
    while i < len(bounds):
        span = bounds[i]
        partner = None
        if (
            span.label.bound is Bound.CIL
            and i + 1 < len(bounds)
            and bounds[i + 1].label.bound is Bound.CIH
            and _family(bounds[i + 1]) == _family(span)
        ):
            partner = bounds[i + 1]
        if partner is None:
            issues.append(
                Issue("unpaired_ci", f"lone {span.label.value} bound", (span,))
            )
            i += 1
            continue
        family = _family(span)
        candidates = [
            v
            for v in values
            if _family(v) == family and v.end <= span.start and v not in attachments
        ]
        if not candidates:
            issues.append(
                Issue(
                    "unpaired_ci",
                    f"no preceding {family[0].value} value for CI pair",
                    (span, partner),
                )
            )
        else:
            attachments[candidates[-1]] = (span, partner)
        i += 2
    return attachments, issues


def _gap_is_coordination(
    tokens: Sequence[Token], lo_char: int, hi_char: int, transparent: list[tuple[int, int]]
) -> bool:
    """True if the characters between two spans only hold list glue.

    Commas, and/or, comparison words, brackets, and anything inside an
    attached interval region (CI groups trailing a value) are transparent.
    """
    for t in tokens:
        if t.end <= lo_char or t.start >= hi_char:
            continue
        if any(a <= t.start and t.end <= b for a, b in transparent):
            continue
        if t.kind in (TokenKind.OPEN_BRACKET, TokenKind.CLOSE_BRACKET, TokenKind.HYPHEN):
            continue
        if t.kind is TokenKind.PUNCTUATION and t.text in ",.":
            continue
        if t.kind is TokenKind.WORD and (
            t.lower() in _SEPARATOR_WORDS or t.lower() in _COMPARE_WORDS
        ):
            continue
        return False
    return True


def _runs(
    spans: list[EntitySpan],
    tokens: Sequence[Token],
    transparent: list[tuple[int, int]],
) -> list[list[EntitySpan]]:
    runs: list[list[EntitySpan]] = []
    for span in spans:
        if runs and _gap_is_coordination(tokens, runs[-1][-1].end, span.start, transparent):
            runs[-1].append(span)
        else:
            runs.append([span])
    return runs


def _has_compare_between(tokens: Sequence[Token], lo_char: int, hi_char: int) -> bool:
    return any(
        t.kind is TokenKind.WORD and t.lower() in _COMPARE_WORDS
        for t in tokens
        if lo_char <= t.start and t.end <= hi_char
    )


def pair_positional(
    left: Sequence, right: Sequence
) -> tuple[list[tuple], Optional[str]]:
    """Zip two sentence-ordered lists positionally.

    Equal lengths zip 1:1. When the right side holds k values per left item,
    consecutive right items share the (slower-varying) left item. Anything
    else is a length mismatch: no pairing is attempted.
    """
    if not left or not right or len(right) % len(left) != 0:
        return [], "length_mismatch"
    k = len(right) // len(left)
    return [(left[j // k], r) for j, r in enumerate(right)], None


def resolve_comparison(
    spans: Sequence[EntitySpan], tokens: Sequence[Token]
) -> list[tuple[EntitySpan, EntitySpan]]:
    """Same-class value pairs separated by a versus/than cue."""
    values = [
        s
        for s in spans
        if not s.label.is_time_point and s.label.bound is Bound.POINT
    ]
    pairs = []
    for a, b in zip(values, values[1:]):
        if a.label is b.label and _has_compare_between(tokens, a.end, b.start):
            pairs.append((a, b))
    return pairs


# ---------------------------------------------------------------------------
# Sentence resolution


def resolve_sentence(
    record: SentenceRecord, spans: Sequence[EntitySpan]
) -> tuple[list[EndpointObservation], ResolutionDiagnostics]:
    text = record.text
    tokens = tokenize(text)
    mentions = {m.token_index: m for m in recognize_numerics(tokens)}
    diagnostics = ResolutionDiagnostics(record.sentence_id)

    ordered = sorted(spans)
    values = [s for s in ordered if not s.label.is_time_point and s.label.bound is Bound.POINT]
    tps = [s for s in ordered if s.label.is_time_point]

    attachments, ci_issues = attach_intervals(ordered)
    diagnostics.issues.extend(ci_issues)

    # Bracketed interval groups (CI, range) are transparent to list
    # coordination: "78.2% (95% CI 70.2-84.2) and 83.0%" is one value list.
    transparent = [(g.start, g.end) for g in parse_interval_group(tokens)]

    comparison_pairs = resolve_comparison(ordered, tokens)
    in_comparison = {s for pair in comparison_pairs for s in pair}

    value_runs = _runs(values, tokens, transparent)
    tp_runs = _runs(tps, tokens, transparent)
    run_of = {s: run for run in value_runs for s in run}

    # Time-point association. Lists of two or more time points pair
    # positionally with the next run of percent values; lone time points
    # scope forward until the next time point. Time points qualify rates,
    # so duration values never take one.
    tp_for: dict[EntitySpan, EntitySpan] = {}
    positional: set[EntitySpan] = set()
    mismatched: set[EntitySpan] = set()
    used_tp: set[EntitySpan] = set()

    for run in tp_runs:
        if len(run) < 2:
            continue
        percent_runs = [
            [v for v in vr if v.label.measure is Measure.PERCENT]
            for vr in value_runs
            if vr and vr[0].start >= run[-1].end
        ]
        target = next((vr for vr in percent_runs if vr), None)
        if target is None:
            diagnostics.issues.append(
                Issue("orphan_time_point", "time-point list with no value list", tuple(run))
            )
            used_tp.update(run)
            continue
        pairs, err = pair_positional(run, target)
        if err:
            diagnostics.issues.append(
                Issue(
                    "length_mismatch",
                    f"{len(run)} time points vs {len(target)} values",
                    tuple(run) + tuple(target),
                )
            )
            mismatched.update(target)
            used_tp.update(run)
            continue
        for tp, value in pairs:
            tp_for[value] = tp
            positional.add(value)
            used_tp.add(tp)
        if len(target) > len(run) and any(
            _has_compare_between(tokens, a.end, b.start)
            for a, b in zip(target, target[1:])
        ):
            diagnostics.issues.append(
                Issue(
                    "ambiguous_grouping",
                    "values form comparison pairs distributed over a "
                    "time-point list; adjacent grouping applied",
                    tuple(run) + tuple(target),
                )
            )

    single_tps = [run[0] for run in tp_runs if len(run) == 1]
    for value in values:
        if value in tp_for or value in mismatched:
            continue
        if value.label.measure is not Measure.PERCENT:
            continue
        preceding = [t for t in single_tps if t.end <= value.start]
        if not preceding:
            continue
        tp = preceding[-1]
        nxt = next((t for t in tps if t.start > tp.start), None)
        if nxt is not None and nxt.start < value.start:
            continue  # a later time point opens a new scope before this value
        tp_for[value] = tp
        used_tp.add(tp)

    has_respectively = any(
        t.kind is TokenKind.WORD and t.lower() == "respectively" for t in tokens
    )

    observations: list[EndpointObservation] = []
    for value in values:
        if value in mismatched:
            continue
        head = _head_token(tokens, value)
        mention = mentions.get(head) if head is not None else None
        if mention is not None and mention.unit is not Unit.NONE:
            amount, unit = mention.value, mention.unit
        else:
            amount = _decimal_from(value, text)
            unit = (
                Unit.PERCENT
                if value.label.measure is Measure.PERCENT
                else Unit.NONE
            )

        ci_low = ci_high = None
        provenance = [value]
        if value in attachments:
            low_span, high_span = attachments[value]
            low, high = _decimal_from(low_span, text), _decimal_from(high_span, text)
            ci_low, ci_high = (low, high) if low <= high else (high, low)
            provenance.extend([low_span, high_span])

        time_point = None
        tp_span = tp_for.get(value)
        if tp_span is not None:
            tp_head = _head_token(tokens, tp_span)
            tp_mention = mentions.get(tp_head) if tp_head is not None else None
            if tp_mention is not None:
                time_point = (tp_mention.value, tp_mention.unit)
            else:
                time_point = (_decimal_from(tp_span, text), Unit.YEARS)
            provenance.append(tp_span)

        run = run_of[value]
        compare_in_run = any(
            _has_compare_between(tokens, a.end, b.start) for a, b in zip(run, run[1:])
        )
        if value in positional and compare_in_run:
            construction = "combined"
        elif value in in_comparison:
            construction = "comparison"
        elif len(run) >= 2 and (has_respectively or value in positional):
            construction = "respectively"
        else:
            construction = "simple"

        observations.append(
            EndpointObservation(
                sentence_id=record.sentence_id,
                pmid=record.pmid,
                base=value.label.base,
                measure=value.label.measure,
                value=amount,
                unit=unit,
                ci_low=ci_low,
                ci_high=ci_high,
                time_point=time_point,
                construction=construction,
                spans=tuple(provenance),
            )
        )

    for tp in tps:
        if tp not in used_tp:
            diagnostics.issues.append(
                Issue("orphan_time_point", "time point with no associated value", (tp,))
            )

    return observations, diagnostics


def resolve_corpus(
    sentences: Iterable[SentenceRecord], annotations: AnnotationSet
) -> tuple[list[EndpointObservation], list[ResolutionDiagnostics]]:
    observations: list[EndpointObservation] = []
    diagnostics: list[ResolutionDiagnostics] = []
    for record in sentences:
        spans = annotations.spans_for(record.sentence_id)
        obs, diag = resolve_sentence(record, spans)
        observations.extend(obs)
        if diag:
            diagnostics.append(diag)
    return observations, diagnostics


# ---------------------------------------------------------------------------
# Export

OBSERVATION_COLUMNS = [
    "pmid",
    "sentence_id",
    "endpoint",
    "measure",
    "value",
    "unit",
    "ci_low",
    "ci_high",
    "time_point_value",
    "time_point_unit",
    "construction",
]


def observation_row(obs: EndpointObservation) -> list[str]:
    return [
        obs.pmid,
        obs.sentence_id,
        obs.base.value,
        obs.measure.value,
        str(obs.value),
        obs.unit.value,
        "" if obs.ci_low is None else str(obs.ci_low),
        "" if obs.ci_high is None else str(obs.ci_high),
        "" if obs.time_point is None else str(obs.time_point[0]),
        "" if obs.time_point is None else obs.time_point[1].value,
        obs.construction,
    ]


def write_observations(observations: Iterable[EndpointObservation], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(OBSERVATION_COLUMNS)
        for obs in observations:
            writer.writerow(observation_row(obs))
