import pytest

from oncoendpoints.lexical import tokenize
from oncoendpoints.patterns import (
    PatternSyntaxError,
    QueryEnsemble,
    compile_pattern,
    filter_corpus,
    find_matches,
    has_match,
    load_query_library,
    parse_ensemble,
)
from oncoendpoints.schema import SentenceRecord

from conftest import CONSTRUCTION_FIXTURES, NEGATIVE_FAMILIES

MOS_PATTERN = (
    '("mOS"! | "median" "OS"!) ("(" ("OS"! | "mOS"!) ")")? '
    '("rate" | "period" | "time")?'
)


@pytest.fixture(scope="module")
def library():
    return load_query_library()


@pytest.fixture(scope="module")
def filter_ensembles(library):
    return [e for name, e in library.items() if name != "negative_samples"]


def test_compile_fig_style_block():
    pattern = compile_pattern(MOS_PATTERN)
    assert pattern.ast is not None
    assert not pattern.uses_numeric_kinds


def test_compile_empty_alternative_is_syntax_error():
    with pytest.raises(PatternSyntaxError):
        compile_pattern('("a" | )')


def test_compile_reports_position():
    with pytest.raises(PatternSyntaxError) as err:
        compile_pattern('"a" ~')
    assert "line 1" in str(err.value)


def test_compile_capture():
    pattern = compile_pattern('cap:value(NUM "%")')
    matches = find_matches(pattern, tokenize("seen in 45% of cases"))
    assert len(matches) == 1
    assert "value" in matches[0].captures


def test_duplicate_capture_names_rejected():
    with pytest.raises(PatternSyntaxError):
        compile_pattern('cap:x("a") cap:x("b")')


def test_mos_pattern_greedy_optional():
    pattern = compile_pattern(MOS_PATTERN)
    text = "median OS time was 14.1 months"
    matches = find_matches(pattern, tokenize(text))
    assert len(matches) == 1
    assert text[matches[0].start : matches[0].end] == "median OS time"


def test_mos_pattern_does_not_match_los():
    pattern = compile_pattern(MOS_PATTERN)
    assert find_matches(pattern, tokenize("The median LOS was 5 days")) == []


def test_exact_case_literal():
    pattern = compile_pattern('"OS"!')
    assert has_match(pattern, tokenize("improved OS rates"))
    assert not has_match(pattern, tokenize("taken per os daily"))


def test_empty_token_list():
    pattern = compile_pattern(MOS_PATTERN)
    assert find_matches(pattern, []) == []


def test_matches_are_leftmost_nonoverlapping_in_order():
    pattern = compile_pattern('"OS"!')
    text = "OS improved; OS stable"
    matches = find_matches(pattern, tokenize(text))
    assert [m.start for m in matches] == sorted(m.start for m in matches)
    assert len(matches) == 2


def test_gap_matches_minimal_span():
    pattern = compile_pattern('"was" gap<=3 NUM')
    text = "was about 5 then 9"
    m = find_matches(pattern, tokenize(text))[0]
    assert text[m.start : m.end] == "was about 5"


def test_determinism(library):
    pattern = compile_pattern(MOS_PATTERN)
    tokens = tokenize("median OS time was 14.1 months vs median OS 10 months")
    assert find_matches(pattern, tokens) == find_matches(pattern, tokens)


def test_multiword_literal_matches_spacing_variants():
    pattern = compile_pattern('"progression-free survival"')
    assert has_match(pattern, tokenize("progression-free survival was"))
    assert has_match(pattern, tokenize("Progression - free survival was"))


# -- filtering ---------------------------------------------------------------


def run_filter(ensembles, texts):
    records = [SentenceRecord(f"s{i}", f"p{i}", t) for i, t in enumerate(texts)]
    return [s.text for s in filter_corpus(ensembles, records)]


def test_filter_keeps_endpoint_sentence_with_value(filter_ensembles):
    assert run_filter(filter_ensembles, ["Median OS was 14.1 months"]) == [
        "Median OS was 14.1 months"
    ]


def test_filter_drops_sentence_without_numeric(filter_ensembles):
    assert run_filter(filter_ensembles, ["OS was improved in the treatment arm"]) == []


def test_filter_drops_age_by_negative_pattern(library):
    # the high-recall ensemble's catch-all positive matches, so rejection
    # comes from its "age" suppression pattern
    ensemble = library["high_recall"]
    text = "Median age was 62 years"
    tokens = tokenize(text)
    assert ensemble.positive_match(tokens)
    assert ensemble.negative_match(tokens)
    assert run_filter([ensemble], [text]) == []


def test_filter_is_order_preserving_and_streaming(filter_ensembles):
    texts = [
        "Median OS was 14.1 months",
        "nothing relevant here",
        "The ORR was 45%.",
    ]
    assert run_filter(filter_ensembles, texts) == [texts[0], texts[2]]


def test_negative_monotonicity(library):
    base = library["high_recall"]
    texts = [
        "Median OS was 14.1 months",
        "Median age was 62 years",
        "The response rate was 33%.",
    ]
    with_neg = run_filter([base], texts)
    without_neg = run_filter([QueryEnsemble("loose", base.positive, [])], texts)
    assert set(with_neg) <= set(without_neg)


def test_filter_accepts_all_quoted_construction_sentences(filter_ensembles):
    texts = [f["text"] for f in CONSTRUCTION_FIXTURES.values()]
    assert run_filter(filter_ensembles, texts) == texts


def test_filter_rejects_all_negative_families(filter_ensembles):
    for family, texts in NEGATIVE_FAMILIES.items():
        kept = run_filter(filter_ensembles, texts)
        assert kept == [], f"family {family} leaked: {kept}"


def test_ensemble_file_parsing_rejects_stray_pattern():
    with pytest.raises(PatternSyntaxError):
        parse_ensemble('"os"\npositive:\n', "bad")


def test_ensemble_requires_positive_pattern():
    with pytest.raises(ValueError):
        parse_ensemble("positive:\n# none\n", "empty")


def test_library_has_expected_ensembles(library):
    assert {"os", "pfs", "dfs", "orr", "dor", "high_recall", "negative_samples"} <= set(
        library
    )
