import random

import pytest

from oncoendpoints.metrics import (
    ClassMetrics,
    CorpusMismatch,
    EmptyReport,
    MetricsReport,
    agreement,
    average_reports,
    disagreements,
    score,
    weighted_overall,
    write_report,
)
from oncoendpoints.schema import AnnotationSet, EndpointClass, SentenceRecord, make_span



# -- independent brute-force oracle --------------------------------------------
# Counts matches by exhaustive pairwise comparison, never via set operations.


def oracle_score(gold: AnnotationSet, pred: AnnotationSet, sentences):
    per_class = {}

    def cell(cls):
        return per_class.setdefault(cls, {"tp": 0, "gold": 0, "pred": 0})

    for sid in sentences:
        gold_spans = list(gold.spans_for(sid))
        pred_spans = list(pred.spans_for(sid))
        for gspan in gold_spans:
            cell(gspan.label)["gold"] += 1
        for pspan in pred_spans:
            cell(pspan.label)["pred"] += 1
        matched = [False] * len(gold_spans)
        for pspan in pred_spans:
            for i, gspan in enumerate(gold_spans):
                if (
                    not matched[i]
                    and pspan.start == gspan.start
                    and pspan.end == gspan.end
                    and pspan.label is gspan.label
                ):
                    matched[i] = True
                    cell(pspan.label)["tp"] += 1
                    break

    rows = {}
    for cls, c in per_class.items():
        if c["gold"] == 0 and c["pred"] == 0:
            continue
        p = c["tp"] / c["pred"] if c["pred"] else 0.0
        r = c["tp"] / c["gold"] if c["gold"] else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        rows[cls] = (p, r, f, c["gold"], c["pred"])
    return rows


def random_instance(rng, sentence_count=None, max_spans=8):
    sentence_count = sentence_count or rng.randint(1, 20)
    classes = list(EndpointClass)
    sentences = {}
    gold = AnnotationSet("gold")
    pred = AnnotationSet("pred")
    for i in range(sentence_count):
        text = " ".join(f"w{k}" for k in range(20))
        sid = f"s{i}"
        sentences[sid] = SentenceRecord(sid, f"p{i % 5}", text)
        for annotations in (gold, pred):
            spans = []
            cursor = 0
            while cursor < 19 and len(spans) < max_spans:
                if rng.random() < 0.45:
                    width = rng.randint(1, 3)
                    start = cursor * 3
                    end = min(19, cursor + width) * 3 - 1
                    spans.append(make_span(text, start, end, rng.choice(classes)))
                    cursor += width
                else:
                    cursor += 1
            annotations.add(sid, spans)
    return gold, pred, sentences


def reports_match(report, rows, tol=1e-9):
    assert set(report.rows) == set(rows)
    for cls, (p, r, f, support, predicted) in rows.items():
        m = report.rows[cls]
        assert m.support == support and m.predicted == predicted
        assert abs(m.precision - p) <= tol
        assert abs(m.recall - r) <= tol
        assert abs(m.f1 - f) <= tol


def test_score_matches_oracle_randomized():
    rng = random.Random(1234)
    for _ in range(300):
        gold, pred, sentences = random_instance(rng)
        reports_match(score(gold, pred, sentences), oracle_score(gold, pred, sentences))


def test_score_identity():
    rng = random.Random(7)
    gold, _, sentences = random_instance(rng, sentence_count=5)
    report = score(gold, gold, sentences)
    for m in report.rows.values():
        assert m.precision == m.recall == m.f1 == 1.0


def test_score_spurious_prediction():
    text = "w0 w1 w2 w3 w4 w5"
    sentences = {"s0": SentenceRecord("s0", "p", text)}
    gold = AnnotationSet("gold")
    gold.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    pred = AnnotationSet("pred")
    pred.add(
        "s0",
        [make_span(text, 0, 2, EndpointClass.OS), make_span(text, 3, 5, EndpointClass.OS)],
    )
    row = score(gold, pred, sentences).rows[EndpointClass.OS]
    assert row.precision == 0.5 and row.recall == 1.0
    assert abs(row.f1 - 2 / 3) < 1e-12


def test_score_asymmetry_swaps_precision_recall():
    rng = random.Random(99)
    gold, pred, sentences = random_instance(rng, sentence_count=8)
    forward = score(gold, pred, sentences)
    backward = score(pred, gold, sentences)
    for cls, row in forward.rows.items():
        assert abs(row.precision - backward.rows[cls].recall) < 1e-12
        assert abs(row.recall - backward.rows[cls].precision) < 1e-12


def test_adding_matching_prediction_increases_recall():
    text = "w0 w1 w2 w3 w4 w5"
    sentences = {"s0": SentenceRecord("s0", "p", text)}
    gold = AnnotationSet("gold")
    gold.add(
        "s0",
        [make_span(text, 0, 2, EndpointClass.OS), make_span(text, 3, 5, EndpointClass.OS)],
    )
    partial = AnnotationSet("pred")
    partial.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    full = AnnotationSet("pred")
    full.add(
        "s0",
        [make_span(text, 0, 2, EndpointClass.OS), make_span(text, 3, 5, EndpointClass.OS)],
    )
    before = score(gold, partial, sentences).rows[EndpointClass.OS].recall
    after = score(gold, full, sentences).rows[EndpointClass.OS].recall
    assert after > before


def test_score_rejects_unknown_sentences():
    text = "w0 w1"
    sentences = {"s0": SentenceRecord("s0", "p", text)}
    stray = AnnotationSet("pred")
    stray.add("other", [])
    with pytest.raises(CorpusMismatch):
        score(AnnotationSet("gold"), stray, sentences)


# -- weighted overall ------------------------------------------------------------


def row(f1, support, precision=0.0, recall=0.0, predicted=0):
    return ClassMetrics(precision, recall, f1, support, predicted)


def test_weighted_overall_hand_example():
    rows = {
        EndpointClass.OS: row(0.9, 3),
        EndpointClass.PFS: row(0.5, 1),
    }
    _, _, f1 = weighted_overall(rows)
    assert f1 == pytest.approx(0.8, abs=1e-15)


def test_weighted_overall_single_class_and_uniform():
    rows = {EndpointClass.OS: row(0.7, 5, precision=0.6, recall=0.8)}
    assert weighted_overall(rows) == (0.6, 0.8, 0.7)
    uniform = {
        EndpointClass.OS: row(0.7, 5, 0.7, 0.7),
        EndpointClass.PFS: row(0.7, 9, 0.7, 0.7),
        EndpointClass.DoR: row(0.7, 1, 0.7, 0.7),
    }
    p, r, f = weighted_overall(uniform)
    assert p == pytest.approx(0.7) and r == pytest.approx(0.7) and f == pytest.approx(0.7)


def test_weighted_overall_empty():
    with pytest.raises(EmptyReport):
        weighted_overall({})
    with pytest.raises(EmptyReport):
        weighted_overall({EndpointClass.OS: row(0.5, 0)})


def test_average_reports():
    r1 = MetricsReport({EndpointClass.OS: row(0.8, 4, 0.8, 0.8, 4)})
    r2 = MetricsReport({EndpointClass.OS: row(1.0, 6, 1.0, 1.0, 6)})
    merged = average_reports(r1, r2)
    m = merged.rows[EndpointClass.OS]
    assert m.f1 == pytest.approx(0.9)
    assert m.support == pytest.approx(5)
    assert not m.partial


def test_average_reports_identity():
    r = MetricsReport({EndpointClass.OS: row(0.8, 4, 0.7, 0.9, 5)})
    merged = average_reports(r, r)
    assert merged.rows[EndpointClass.OS] == r.rows[EndpointClass.OS]


def test_average_reports_carries_one_sided_class_flagged():
    r1 = MetricsReport({EndpointClass.OS: row(0.8, 4)})
    r2 = MetricsReport(
        {EndpointClass.OS: row(0.6, 2), EndpointClass.DoR_CIL: row(1.0, 1)}
    )
    merged = average_reports(r1, r2)
    assert merged.rows[EndpointClass.DoR_CIL].f1 == 1.0  # not averaged with zero
    assert merged.rows[EndpointClass.DoR_CIL].partial
    assert not merged.rows[EndpointClass.OS].partial


# -- agreement ---------------------------------------------------------------------


def ten_token_corpus(n):
    sentences = {}
    text = " ".join(f"w{c}" for c in "abcdefghij")  # ten letter-only tokens
    for i in range(n):
        sentences[f"s{i}"] = SentenceRecord(f"s{i}", f"p{i}", text)
    return sentences


def test_agreement_identity():
    sentences = ten_token_corpus(10)
    a = AnnotationSet("a")
    text = sentences["s0"].text
    a.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    b = AnnotationSet("b")
    b.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    report = agreement(a, b, sentences)
    assert report.token_agreement == 1.0
    assert report.disagreeing_sentences == []


def test_agreement_999_per_mille():
    sentences = ten_token_corpus(100)  # 1000 tokens
    a = AnnotationSet("a")
    b = AnnotationSet("b")
    text = sentences["s0"].text
    b.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])  # one token differs
    report = agreement(a, b, sentences)
    assert report.total_tokens == 1000
    assert report.token_agreement == pytest.approx(0.999)
    assert len(report.disagreeing_sentences) == 1


def test_agreement_symmetry():
    sentences = ten_token_corpus(5)
    text = sentences["s0"].text
    a = AnnotationSet("a")
    a.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    b = AnnotationSet("b")
    b.add("s1", [make_span(text, 3, 5, EndpointClass.PFS_percent)])
    assert (
        agreement(a, b, sentences).token_agreement
        == agreement(b, a, sentences).token_agreement
    )


def test_agreement_corpus_mismatch():
    sentences = ten_token_corpus(2)
    stray = AnnotationSet("a")
    stray.add("elsewhere", [])
    with pytest.raises(CorpusMismatch):
        agreement(stray, AnnotationSet("b"), sentences)


def test_disagreements_classify_diffs():
    sentences = ten_token_corpus(3)
    text = sentences["s0"].text
    a = AnnotationSet("a")
    a.add("s0", [make_span(text, 0, 2, EndpointClass.OS)])
    a.add("s1", [make_span(text, 3, 5, EndpointClass.OS)])
    b = AnnotationSet("b")
    b.add("s0", [make_span(text, 0, 2, EndpointClass.OS_percent)])
    worklist = disagreements(a, b, sentences)
    assert len(worklist) == 2
    by_sid = {d.sentence_id: d for d in worklist}
    assert by_sid["s0"].conflicts[0][0].label is EndpointClass.OS
    assert by_sid["s0"].conflicts[0][1].label is EndpointClass.OS_percent
    assert by_sid["s1"].only_a and not by_sid["s1"].only_b


def test_disagreements_empty_when_identical():
    sentences = ten_token_corpus(2)
    assert disagreements(AnnotationSet("a"), AnnotationSet("b"), sentences) == []


def test_report_export_layout(tmp_path):
    report = MetricsReport(
        {
            EndpointClass.OS: row(0.964, 3, 0.962, 0.966, 3),
            EndpointClass.PFS: row(0.5, 1, 0.5, 0.5, 2),
        }
    )
    path = tmp_path / "report.csv"
    write_report(report, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "endpoint,f1,precision,recall,support"
    assert lines[1] == "OS,96.4,96.2,96.6,3"
    assert lines[-1].startswith("overall,")
