"""Shared fixture sentences with hand-built gold spans.

Gold offsets are written against the literal sentence text (surface strings
located by occurrence), independently of any tagger output.
"""

from decimal import Decimal

import pytest

from oncoendpoints.schema import EndpointClass, EntitySpan, SentenceRecord


def g(text: str, surface: str, cls: str, n: int = 0) -> EntitySpan:
    """Gold span for the n-th occurrence of surface in text."""
    start = -1
    for _ in range(n + 1):
        start = text.index(surface, start + 1)
    return EntitySpan(start, start + len(surface), EndpointClass(cls), surface)


D1 = "3-, 5- and 10-year survival rates were 45%, 40% and 35%, respectively"
D2 = (
    "Estimated 1-year PFS rates were 78.2% (95% CI 70.2-84.2) and 83.0% "
    "(95% CI 75.0-88.6) for PF-05280586 and rituximab-EU, respectively."
)
D3 = (
    "The 5-year overall survival (OS) and disease-free survival rates were as "
    "follows: normal group, 82.5 and 76.8%; emphysema group, 80.0 and 74.9%; "
    "fibrosis group, 46.9 and 50%; and CPFE group, 36.9 and 27.9%, "
    "respectively ($p < 0.01$)."
)
D4 = (
    "The objective response rate was 97.8%; the median progression-free "
    "survival and OS were 11.0 and 27.0 months, respectively."
)
D6 = (
    "Both disease-free survival (DFS) and overall survival (OS) were "
    "significantly worse in the CD8-Low/FoxP3-High group than the other "
    "groups (5-year DFS: 66.3% vs. 90.5%; P = 0.0007, 5-year OS: 90.9% vs. "
    "97.0%; P = 0.0077)."
)
D7 = (
    "overall survival in all randomly assigned patients was significantly "
    "longer in the experimental group than in the control group (median "
    "14.1 months [95% CI 13.2-16.2] vs 10.7 months [9.5-12.4])"
)
D8 = "7-year PFS of FL patients on RB therapy was 70% (95% CI 75-99)"
L1 = (
    "A partial response to AG with a mean duration of 9 months (range: 4-26 "
    "months) was achieved in 24 patients (33%), 10 patients (14%) had stable "
    "disease, and 32 patients (44%) were progressing during AG therapy."
)
L2 = (
    "According to the intent-to-treat analysis, 14/58 objective responses "
    "(24.1%) and 24/58 (41.3%) stabilizations of disease were observed, with "
    "a median duration of 4 months (range, 2-22 + months) and 5 months "
    "(range, 1-13 months), respectively."
)
L3 = (
    "In the propensity score matched lobectomy and segmentectomy groups (87 "
    "patients per group), the 5-year and 10-year OS and PFS rates were 85% "
    "versus 84% and 66% versus 63%, respectively."
)


def _spans(text, triples):
    return [g(text, surface, cls, n) for surface, cls, n in triples]


# The eight sentences with documented construction resolutions. Each entry:
# (text, gold spans, expected observations, expected diagnostic kinds).
# Observations: (base, measure, value, unit, ci, time_point).
CONSTRUCTION_FIXTURES = {
    "tp_series": {
        "text": D1,
        "spans": _spans(
            D1,
            [
                ("3", "time_point", 0),
                ("5", "time_point", 0),
                ("10-year", "time_point", 0),
                ("45%", "OS_percent", 0),
                ("40%", "OS_percent", 0),
                ("35%", "OS_percent", 0),
            ],
        ),
        "observations": [
            ("OS", "percent", Decimal("45"), "percent", None, (Decimal(3), "years")),
            ("OS", "percent", Decimal("40"), "percent", None, (Decimal(5), "years")),
            ("OS", "percent", Decimal("35"), "percent", None, (Decimal(10), "years")),
        ],
        "issues": [],
    },
    "group_list_with_ci": {
        "text": D2,
        "spans": _spans(
            D2,
            [
                ("1-year", "time_point", 0),
                ("78.2%", "PFS_percent", 0),
                ("70.2", "PFS_percent_CIL", 0),
                ("84.2", "PFS_percent_CIH", 0),
                ("83.0%", "PFS_percent", 0),
                ("75.0", "PFS_percent_CIL", 0),
                ("88.6", "PFS_percent_CIH", 0),
            ],
        ),
        "observations": [
            ("PFS", "percent", Decimal("78.2"), "percent",
             (Decimal("70.2"), Decimal("84.2")), (Decimal(1), "years")),
            ("PFS", "percent", Decimal("83.0"), "percent",
             (Decimal("75.0"), Decimal("88.6")), (Decimal(1), "years")),
        ],
        "issues": [],
    },
    "combined_orr_plus_list": {
        "text": D4,
        "spans": _spans(
            D4,
            [
                ("97.8%", "ORR", 0),
                ("11.0", "PFS", 0),
                ("27.0", "OS", 0),
            ],
        ),
        "observations": [
            ("ORR", "percent", Decimal("97.8"), "percent", None, None),
            ("PFS", "duration", Decimal("11.0"), "months", None, None),
            ("OS", "duration", Decimal("27.0"), "months", None, None),
        ],
        "issues": [],
    },
    "two_comparisons": {
        "text": D6,
        "spans": _spans(
            D6,
            [
                ("5-year", "time_point", 0),
                ("66.3%", "DFS_percent", 0),
                ("90.5%", "DFS_percent", 0),
                ("5-year", "time_point", 1),
                ("90.9%", "OS_percent", 0),
                ("97.0%", "OS_percent", 0),
            ],
        ),
        "observations": [
            ("DFS", "percent", Decimal("66.3"), "percent", None, (Decimal(5), "years")),
            ("DFS", "percent", Decimal("90.5"), "percent", None, (Decimal(5), "years")),
            ("OS", "percent", Decimal("90.9"), "percent", None, (Decimal(5), "years")),
            ("OS", "percent", Decimal("97.0"), "percent", None, (Decimal(5), "years")),
        ],
        "issues": [],
    },
    "duration_comparison_elided_ci": {
        "text": D7,
        "spans": _spans(
            D7,
            [
                ("14.1 months", "OS", 0),
                ("13.2", "OS_CIL", 0),
                ("16.2", "OS_CIH", 0),
                ("10.7 months", "OS", 0),
                ("9.5", "OS_CIL", 0),
                ("12.4", "OS_CIH", 0),
            ],
        ),
        "observations": [
            ("OS", "duration", Decimal("14.1"), "months",
             (Decimal("13.2"), Decimal("16.2")), None),
            ("OS", "duration", Decimal("10.7"), "months",
             (Decimal("9.5"), Decimal("12.4")), None),
        ],
        "issues": [],
    },
    "simple_with_ci": {
        "text": D8,
        "spans": _spans(
            D8,
            [
                ("7-year", "time_point", 0),
                ("70%", "PFS_percent", 0),
                ("75", "PFS_percent_CIL", 0),
                ("99", "PFS_percent_CIH", 0),
            ],
        ),
        "observations": [
            ("PFS", "percent", Decimal("70"), "percent",
             (Decimal("75"), Decimal("99")), (Decimal(7), "years")),
        ],
        "issues": [],
    },
    "dor_outcome_pairing": {
        "text": L2,
        "spans": _spans(
            L2,
            [
                ("24.1%", "ORR", 0),
                ("4 months", "DoR", 0),
            ],
        ),
        "observations": [
            ("ORR", "percent", Decimal("24.1"), "percent", None, None),
            ("DoR", "duration", Decimal("4"), "months", None, None),
        ],
        "issues": [],
    },
    "ambiguous_grid": {
        "text": L3,
        "spans": _spans(
            L3,
            [
                ("5-year", "time_point", 0),
                ("10-year", "time_point", 0),
                ("85%", "OS_percent", 0),
                ("84%", "PFS_percent", 0),
                ("66%", "OS_percent", 0),
                ("63%", "PFS_percent", 0),
            ],
        ),
        "observations": [
            ("OS", "percent", Decimal("85"), "percent", None, (Decimal(5), "years")),
            ("PFS", "percent", Decimal("84"), "percent", None, (Decimal(5), "years")),
            ("OS", "percent", Decimal("66"), "percent", None, (Decimal(10), "years")),
            ("PFS", "percent", Decimal("63"), "percent", None, (Decimal(10), "years")),
        ],
        "issues": ["ambiguous_grouping"],
    },
}

# The five confusion families: every sentence must yield zero spans.
NEGATIVE_FAMILIES = {
    "age": [
        "Median age was 62 years",
        "The median age of enrolled patients was 58 years (range 32-75).",
        "Patients had a mean age of 61.4 years at diagnosis.",
        "Median age at enrollment was 64 years.",
        "The mean age was 59 years in both arms.",
    ],
    "length_of_stay": [
        "The median LOS was 5 days.",
        "Median length of stay was 7 days (range 3-14).",
        "Hospital LOS averaged 6.2 days.",
        "The mean length of stay was 9 days after surgery.",
    ],
    "bare_median_duration": [
        L1,
        "The median duration of treatment was 6 months.",
        "Median duration of follow-up was 38.2 months.",
        "Therapy continued for a mean duration of 6 months (range 1-10 months).",
    ],
    "sd_and_ranges": [
        "The mean lesion diameter was 14.2 mm (SD 1.3).",
        "Mean time to recovery was 11 days (SD 3).",
        "The mean score was 23.4 with a standard deviation of 2.1.",
        "Tumor sizes were between 1.2 and 4.5 cm (range 1.2-4.5).",
    ],
    "bare_percentages": [
        "In total, 45% of patients were male.",
        "Grade 3 adverse events occurred in 23% of patients.",
        "Toxicity led to discontinuation in 11.5% of cases.",
        "Of 58 patients, 33 (57%) completed all cycles.",
    ],
}


def record(text: str, sid: str = "s0", pmid: str = "P0") -> SentenceRecord:
    return SentenceRecord(sid, pmid, text)


@pytest.fixture(scope="session")
def rule_tagger():
    from oncoendpoints.tagging import RuleTagger

    return RuleTagger()
