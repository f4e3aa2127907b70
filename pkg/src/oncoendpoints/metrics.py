"""Exact-match span scoring, labeller averaging, and annotator agreement.

A predicted span is a true positive only when its (start, end, class)
triple equals a gold span: no partial-overlap credit. Overall rows weight
each per-class metric by that class's gold support. Agreement is token-level
over BIO tags, computed across every sentence of the corpus including
unannotated ones.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

from .lexical import tokenize
from .schema import AnnotationSet, EndpointClass, EntitySpan, SentenceRecord
from .tagging import encode


class CorpusMismatch(ValueError):
    pass


class EmptyReport(ValueError):
    pass


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: float  # gold entity count (averaging can make it fractional)
    predicted: float
    partial: bool = False  # present in only one of two averaged reports


@dataclass
class MetricsReport:
    rows: dict[EndpointClass, ClassMetrics] = field(default_factory=dict)

    def overall(self) -> tuple[float, float, float]:
        return weighted_overall(self.rows)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ratio(num: float, denom: float) -> float:
    return num / denom if denom else 0.0


def _check_known(annotations: AnnotationSet, sentences: dict[str, SentenceRecord]) -> None:
    unknown = [sid for sid in annotations.entries if sid not in sentences]
    if unknown:
        raise CorpusMismatch(
            f"annotation source {annotations.source!r} references sentences "
            f"not in the corpus, e.g. {unknown[0]!r}"
        )


def score(
    gold: AnnotationSet, pred: AnnotationSet, sentences: dict[str, SentenceRecord]
) -> MetricsReport:
    """Per-class precision/recall/F1 with exact span matching.

    Classes with neither gold nor predicted entities are omitted.
    """
    _check_known(gold, sentences)
    _check_known(pred, sentences)
    tp: dict[EndpointClass, int] = {}
    gold_n: dict[EndpointClass, int] = {}
    pred_n: dict[EndpointClass, int] = {}
    for sid in sentences:
        gold_spans = set(gold.spans_for(sid))
        pred_spans = set(pred.spans_for(sid))
        for s in gold_spans:
            gold_n[s.label] = gold_n.get(s.label, 0) + 1
        for s in pred_spans:
            pred_n[s.label] = pred_n.get(s.label, 0) + 1
        for s in gold_spans & pred_spans:
            tp[s.label] = tp.get(s.label, 0) + 1

    report = MetricsReport()
    for cls in EndpointClass:
        g, p = gold_n.get(cls, 0), pred_n.get(cls, 0)
        if g == 0 and p == 0:
            continue
        precision = _ratio(tp.get(cls, 0), p)
        recall = _ratio(tp.get(cls, 0), g)
        report.rows[cls] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=f1_score(precision, recall),
            support=g,
            predicted=p,
        )
    return report


def weighted_overall(rows: dict[EndpointClass, ClassMetrics]) -> tuple[float, float, float]:
    """Support-weighted mean of each metric column."""
    total = sum(m.support for m in rows.values())
    if total == 0:
        raise EmptyReport("no gold entities to weight by")
    p = sum(m.precision * m.support for m in rows.values()) / total
    r = sum(m.recall * m.support for m in rows.values()) / total
    f = sum(m.f1 * m.support for m in rows.values()) / total
    return p, r, f


def average_reports(r1: MetricsReport, r2: MetricsReport) -> MetricsReport:
    """Cell-wise mean over two labellers' reports.

    A class present in only one report is carried through flagged as
    partial rather than being averaged against zero.
    """
    out = MetricsReport()
    for cls in EndpointClass:
        a, b = r1.rows.get(cls), r2.rows.get(cls)
        if a is None and b is None:
            continue
        if a is None or b is None:
            present = a if a is not None else b
            out.rows[cls] = replace(present, partial=True)
            continue
        out.rows[cls] = ClassMetrics(
            precision=(a.precision + b.precision) / 2,
            recall=(a.recall + b.recall) / 2,
            f1=(a.f1 + b.f1) / 2,
            support=(a.support + b.support) / 2,
            predicted=(a.predicted + b.predicted) / 2,
        )
    return out


# ---------------------------------------------------------------------------
# Inter-annotator agreement


@dataclass
class SpanDiff:
    sentence_id: str
    only_a: list[EntitySpan] = field(default_factory=list)
    only_b: list[EntitySpan] = field(default_factory=list)
    conflicts: list[tuple[EntitySpan, EntitySpan]] = field(default_factory=list)


@dataclass
class AgreementReport:
    token_agreement: float
    total_tokens: int
    disagreeing_tokens: int
    disagreeing_sentences: list[SpanDiff] = field(default_factory=list)


def disagreements(
    a: AnnotationSet, b: AnnotationSet, sentences: dict[str, SentenceRecord]
) -> list[SpanDiff]:
    """One worklist entry per sentence whose span sets differ."""
    _check_known(a, sentences)
    _check_known(b, sentences)
    out: list[SpanDiff] = []
    for sid in sentences:
        sa, sb = set(a.spans_for(sid)), set(b.spans_for(sid))
        if sa == sb:
            continue
        diff = SpanDiff(sid)
        left = sorted(sa - sb)
        right = sorted(sb - sa)
        by_offsets = {(s.start, s.end): s for s in right}
        for span in left:
            other = by_offsets.pop((span.start, span.end), None)
            if other is not None:
                diff.conflicts.append((span, other))
            else:
                diff.only_a.append(span)
        diff.only_b = [s for s in right if (s.start, s.end) in by_offsets]
        out.append(diff)
    return out


def agreement(
    a: AnnotationSet, b: AnnotationSet, sentences: dict[str, SentenceRecord]
) -> AgreementReport:
    """Fraction of tokens with identical BIO tags under both annotators."""
    _check_known(a, sentences)
    _check_known(b, sentences)
    total = 0
    different = 0
    for sid, record in sentences.items():
        tokens = tokenize(record.text)
        tags_a = encode(a.spans_for(sid), tokens)
        tags_b = encode(b.spans_for(sid), tokens)
        total += len(tokens)
        different += sum(1 for x, y in zip(tags_a, tags_b) if x != y)
    value = 1.0 if total == 0 else (total - different) / total
    return AgreementReport(
        token_agreement=value,
        total_tokens=total,
        disagreeing_tokens=different,
        disagreeing_sentences=disagreements(a, b, sentences),
    )


# ---------------------------------------------------------------------------
# Report export

REPORT_COLUMNS = ["endpoint", "f1", "precision", "recall", "support"]


def _pct_str(value: float) -> str:
    return f"{100 * value:.1f}"


def write_report(report: MetricsReport, path) -> None:
    """Tabular per-class report plus a support-weighted overall row.

    Metrics are written as percentages with one decimal; full precision
    stays in memory.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for cls in EndpointClass:
            m = report.rows.get(cls)
            if m is None:
                continue
            support = f"{m.support:g}"
            writer.writerow(
                [cls.value, _pct_str(m.f1), _pct_str(m.precision), _pct_str(m.recall), support]
            )
        p, r, f = report.overall()
        total = sum(m.support for m in report.rows.values())
        writer.writerow(["overall", _pct_str(f), _pct_str(p), _pct_str(r), f"{total:g}"])
