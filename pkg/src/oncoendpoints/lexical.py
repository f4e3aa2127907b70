"""Offset-preserving tokenization and recognition of numeric mentions.

Word-level rules tuned for MEDLINE-style prose: decimal numbers are single
tokens, hyphenated year forms ("5-year") split into number / hyphen / word,
and every non-whitespace character belongs to exactly one token so spans can
always be mapped back onto the sentence.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import NamedTuple, Optional, Sequence


class TokenKind(str, enum.Enum):
    WORD = "word"
    NUMBER = "number"
    PERCENT_SIGN = "percent_sign"
    PUNCTUATION = "punctuation"
    HYPHEN = "hyphen"
    OPEN_BRACKET = "open_bracket"
    CLOSE_BRACKET = "close_bracket"


class Token(NamedTuple):
    text: str
    start: int
    end: int
    kind: TokenKind
    low: str  # lowercased surface, precomputed for the matcher

    def lower(self) -> str:
        return self.low


_HYPHENS = "-‐‑‒–—"
_OPEN = "([{"
_CLOSE = ")]}"

# Order matters: decimals before bare integers so "70.2" is one token.
_TOKEN_RE = re.compile(
    r"(?P<number>\d+\.\d+|\d+)"
    r"|(?P<word>[^\W\d_]+)"
    r"|(?P<other>\S)",
    re.UNICODE,
)


_CHAR_KIND = {"%": TokenKind.PERCENT_SIGN}
for _c in _HYPHENS:
    _CHAR_KIND[_c] = TokenKind.HYPHEN
for _c in _OPEN:
    _CHAR_KIND[_c] = TokenKind.OPEN_BRACKET
for _c in _CLOSE:
    _CHAR_KIND[_c] = TokenKind.CLOSE_BRACKET


def tokenize(text: str) -> list[Token]:
    """Split a sentence into offset-carrying tokens.

    Tokens tile the sentence: disjoint, ordered, and jointly covering every
    non-whitespace character.
    """
    tokens: list[Token] = []
    append = tokens.append
    punct = TokenKind.PUNCTUATION
    kinds = (TokenKind.NUMBER, TokenKind.WORD)
    for m in _TOKEN_RE.finditer(text):
        surface = m.group(0)
        index = m.lastindex
        kind = kinds[index - 1] if index < 3 else _CHAR_KIND.get(surface, punct)
        append(Token(surface, m.start(), m.end(), kind, surface.lower()))
    return tokens


class Unit(str, enum.Enum):
    PERCENT = "percent"
    MONTHS = "months"
    YEARS = "years"
    DAYS = "days"
    WEEKS = "weeks"
    NONE = "none"


# Fixed normalization table for duration unit words.
_UNIT_WORDS = {
    "month": Unit.MONTHS,
    "months": Unit.MONTHS,
    "mo": Unit.MONTHS,
    "mos": Unit.MONTHS,
    "year": Unit.YEARS,
    "years": Unit.YEARS,
    "yr": Unit.YEARS,
    "yrs": Unit.YEARS,
    "day": Unit.DAYS,
    "days": Unit.DAYS,
    "week": Unit.WEEKS,
    "weeks": Unit.WEEKS,
    "wk": Unit.WEEKS,
    "wks": Unit.WEEKS,
}


def duration_unit(word: str) -> Optional[Unit]:
    return _UNIT_WORDS.get(word.lower())


class MentionKind(str, enum.Enum):
    PERCENT = "percent"
    DURATION = "duration"
    BARE_NUMBER = "bare_number"
    TIME_POINT = "time_point_series_element"


@dataclass(frozen=True)
class NumericMention:
    """One recognized numeric value with its surface extent and unit."""

    start: int
    end: int
    value: Decimal
    unit: Unit
    kind: MentionKind
    token_index: int  # index of the number token that heads the mention
    shared_unit: bool = False  # unit/percent distributed from a list sibling


@dataclass(frozen=True)
class IntervalGroup:
    """A bracketed low-high pair, classified as CI, range, or other."""

    low: Decimal
    high: Decimal
    kind: str  # "confidence_interval" | "range" | "other"
    start: int  # offsets of the full bracketed group, brackets included
    end: int
    low_token: int
    high_token: int
    confidence_level: Optional[Decimal] = None
    unit: Unit = Unit.NONE
    note: Optional[str] = None


@dataclass(frozen=True)
class TimePointSeries:
    """A coordinated "3-, 5- and 10-year" series (possibly a singleton)."""

    elements: tuple[NumericMention, ...]
    unit: Unit
    start: int
    end: int


@dataclass
class LexicalAnalysis:
    tokens: list[Token]
    mentions: list[NumericMention] = field(default_factory=list)
    series: list[TimePointSeries] = field(default_factory=list)
    groups: list[IntervalGroup] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def mention_at(self, token_index: int) -> Optional[NumericMention]:
        for m in self.mentions:
            if m.token_index == token_index:
                return m
        return None


_LIST_SEPARATOR_WORDS = {"and", "or"}
_SERIES_UNIT_WORDS = {"year", "years", "month", "months", "week", "weeks", "day", "days"}
_RANGE_CUES = {"range", "ranges"}
_CI_CUES = {"ci", "cis"}
_NEVER_CI_CUES = {"sd", "iqr", "deviation", "interquartile", "sem", "se"}


def _is_series_separator(tok: Token) -> bool:
    return (tok.kind is TokenKind.PUNCTUATION and tok.text == ",") or (
        tok.kind is TokenKind.WORD and tok.lower() in _LIST_SEPARATOR_WORDS
    )


def _detect_series(tokens: Sequence[Token]) -> list[TimePointSeries]:
    """Find distributed time-point series: number hyphen (sep number hyphen)* unit."""
    series: list[TimePointSeries] = []
    i = 0
    n = len(tokens)
    while i < n - 1:
        if tokens[i].kind is not TokenKind.NUMBER or tokens[i + 1].kind is not TokenKind.HYPHEN:
            i += 1
            continue
        # Candidate chain start.
        element_idx = [i]
        j = i + 2
        closed = False
        unit = Unit.NONE
        while j < n:
            if tokens[j].kind is TokenKind.WORD and tokens[j].lower() in _SERIES_UNIT_WORDS:
                unit = _UNIT_WORDS[tokens[j].lower()]
                closed = True
                break
            # Allow one or two separators between elements ("," / "and" / ", and").
            k = j
            seps = 0
            while k < n and seps < 2 and _is_series_separator(tokens[k]):
                k += 1
                seps += 1
            if (
                seps > 0
                and k + 1 < n
                and tokens[k].kind is TokenKind.NUMBER
                and tokens[k + 1].kind is TokenKind.HYPHEN
            ):
                element_idx.append(k)
                j = k + 2
                continue
            break
        if closed:
            elements = []
            for rank, idx in enumerate(element_idx):
                last = rank == len(element_idx) - 1
                # Final element's surface includes hyphen and unit word
                # ("10-year"); earlier elements keep the bare number ("3").
                end = tokens[j].end if last else tokens[idx].end
                elements.append(
                    NumericMention(
                        start=tokens[idx].start,
                        end=end,
                        value=Decimal(tokens[idx].text),
                        unit=unit,
                        kind=MentionKind.TIME_POINT,
                        token_index=idx,
                        shared_unit=not last,
                    )
                )
            series.append(
                TimePointSeries(tuple(elements), unit, tokens[i].start, tokens[j].end)
            )
            i = j + 1
        else:
            i += 1
    return series


def expand_distributed_series(tokens: Sequence[Token]) -> list[NumericMention]:
    """Flatten every detected time-point series into per-element mentions."""
    out: list[NumericMention] = []
    for s in _detect_series(tokens):
        out.extend(s.elements)
    return out


def _follows_value(tokens: Sequence[Token], open_i: int) -> bool:
    """True when a bracket group directly trails a numeric value mention."""
    if open_i == 0:
        return False
    prev = tokens[open_i - 1]
    if prev.kind in (TokenKind.NUMBER, TokenKind.PERCENT_SIGN):
        return True
    return prev.kind is TokenKind.WORD and duration_unit(prev.text) is not None


def _find_bracket_groups(tokens: Sequence[Token]) -> list[tuple[int, int]]:
    """Innermost (open, close) token-index pairs."""
    stack: list[int] = []
    pairs: list[tuple[int, int]] = []
    for i, tok in enumerate(tokens):
        if tok.kind is TokenKind.OPEN_BRACKET:
            stack.append(i)
        elif tok.kind is TokenKind.CLOSE_BRACKET and stack:
            pairs.append((stack.pop(), i))
    return sorted(pairs)


def parse_interval_group(
    tokens: Sequence[Token],
    window: Optional[tuple[int, int]] = None,
    diagnostics: Optional[list[str]] = None,
) -> list[IntervalGroup]:
    """Classify bracketed low-high pairs as CI, range, or other.

    A "range" cue word always wins over a CI reading (so standard-deviation
    and range groups are never confidence intervals). Bare bracketed pairs
    are upgraded to confidence intervals by the elided-cue rule when a
    sibling group in the same sentence carries an explicit CI cue.
    """
    diags = diagnostics if diagnostics is not None else []
    groups: list[IntervalGroup] = []
    saw_explicit_ci = False
    bare: list[int] = []  # indexes into groups pending elided-cue upgrade

    for open_i, close_i in _find_bracket_groups(tokens):
        if window is not None:
            if tokens[open_i].start < window[0] or tokens[close_i].end > window[1]:
                continue
        inner = tokens[open_i + 1 : close_i]
        # Only innermost groups count; an outer paren wrapping a bracketed CI
        # is sentence structure, not an interval.
        if any(
            t.kind in (TokenKind.OPEN_BRACKET, TokenKind.CLOSE_BRACKET) for t in inner
        ):
            continue
        words = {t.lower() for t in inner if t.kind is TokenKind.WORD}
        # Locate the low-high backbone: NUMBER HYPHEN NUMBER.
        pair = None
        for k in range(len(inner) - 2):
            if (
                inner[k].kind is TokenKind.NUMBER
                and inner[k + 1].kind is TokenKind.HYPHEN
                and inner[k + 2].kind is TokenKind.NUMBER
            ):
                pair = (open_i + 1 + k, open_i + 1 + k + 2)
                break
        if pair is None:
            continue
        low_tok, high_tok = pair
        low = Decimal(tokens[low_tok].text)
        high = Decimal(tokens[high_tok].text)

        kind = "other"
        level: Optional[Decimal] = None
        if words & _RANGE_CUES:
            kind = "range"
        elif words & _NEVER_CI_CUES or "standard" in words:
            kind = "other"
        elif words & _CI_CUES or {"confidence", "interval"} <= words:
            kind = "confidence_interval"
            saw_explicit_ci = True
            # "95% CI": a percent immediately left of the cue.
            for k in range(open_i + 1, low_tok):
                if (
                    tokens[k].kind is TokenKind.NUMBER
                    and k + 1 <= close_i
                    and tokens[k + 1].kind is TokenKind.PERCENT_SIGN
                ):
                    level = Decimal(tokens[k].text)
                    break

        # Absorb a trailing unit word ("4-26 months"); a stray "+" between the
        # high bound and the unit is an open-range marker we drop.
        unit = Unit.NONE
        k = high_tok + 1
        while k < close_i and tokens[k].kind is TokenKind.PUNCTUATION and tokens[k].text == "+":
            diags.append(
                f"open-range marker '+' ignored in interval at {tokens[open_i].start}"
            )
            k += 1
        if k < close_i and tokens[k].kind is TokenKind.WORD:
            u = duration_unit(tokens[k].text)
            if u is not None:
                unit = u
        if tokens[high_tok + 1 : close_i] and tokens[high_tok + 1].kind is TokenKind.PERCENT_SIGN:
            unit = Unit.PERCENT

        note = None
        if low > high:
            note = "malformed interval: low > high"
            diags.append(f"{note} ({low} > {high}) at {tokens[open_i].start}")
            kind = "other"
        elif kind == "other" and not words and _follows_value(tokens, open_i):
            bare.append(len(groups))

        groups.append(
            IntervalGroup(
                low=low,
                high=high,
                kind=kind,
                start=tokens[open_i].start,
                end=tokens[close_i].end,
                low_token=low_tok,
                high_token=high_tok,
                confidence_level=level,
                unit=unit,
                note=note,
            )
        )

    if saw_explicit_ci:
        for gi in bare:
            g = groups[gi]
            groups[gi] = IntervalGroup(
                low=g.low,
                high=g.high,
                kind="confidence_interval",
                start=g.start,
                end=g.end,
                low_token=g.low_token,
                high_token=g.high_token,
                confidence_level=g.confidence_level,
                unit=g.unit,
                note="elided CI cue",
            )
    return groups


def recognize_numerics(tokens: Sequence[Token]) -> list[NumericMention]:
    """Cover every number token with exactly one mention.

    Duration units are absorbed ("14.1 months" is one mention), adjacent
    percent signs make percent mentions, time-point series elements keep
    their own kind, and a trailing unit or percent sign distributes backwards
    over a coordinated bare-number list ("11.0 and 27.0 months").
    """
    series_by_token: dict[int, NumericMention] = {}
    for s in _detect_series(tokens):
        for el in s.elements:
            series_by_token[el.token_index] = el

    mentions: dict[int, NumericMention] = {}
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.NUMBER:
            continue
        if i in series_by_token:
            mentions[i] = series_by_token[i]
            continue
        value = Decimal(tok.text)
        if i + 1 < n and tokens[i + 1].kind is TokenKind.PERCENT_SIGN:
            mentions[i] = NumericMention(
                tok.start, tokens[i + 1].end, value, Unit.PERCENT, MentionKind.PERCENT, i
            )
            continue
        if i + 1 < n and tokens[i + 1].kind is TokenKind.WORD:
            unit = duration_unit(tokens[i + 1].text)
            if unit is not None:
                mentions[i] = NumericMention(
                    tok.start, tokens[i + 1].end, value, unit, MentionKind.DURATION, i
                )
                continue
        mentions[i] = NumericMention(
            tok.start, tok.end, value, Unit.NONE, MentionKind.BARE_NUMBER, i
        )

    _distribute_shared_units(tokens, mentions)
    return [mentions[i] for i in sorted(mentions)]


def _distribute_shared_units(
    tokens: Sequence[Token], mentions: dict[int, NumericMention]
) -> None:
    """Spread a trailing unit over '11.0 and 27.0 months'-style lists.

    Walk backwards from each percent/duration mention through separator
    tokens; preceding bare numbers in the same coordination inherit the
    unit. The unit's characters stay attached to the final element only, and
    every member of such a list is flagged shared_unit so taggers emit bare
    number spans for all of them.
    """
    for i in sorted(mentions, reverse=True):
        m = mentions[i]
        if m.kind not in (MentionKind.PERCENT, MentionKind.DURATION):
            continue
        chain = []
        j = i - 1
        while j >= 0:
            if _is_series_separator(tokens[j]):
                j -= 1
                continue
            if (
                tokens[j].kind is TokenKind.NUMBER
                and j in mentions
                and mentions[j].kind is MentionKind.BARE_NUMBER
                # A bare number only joins the list if a separator sits
                # between it and the next element.
                and j < i - 1
                and any(_is_series_separator(t) for t in tokens[j + 1 : i])
            ):
                chain.append(j)
                j -= 1
                continue
            break
        if not chain:
            continue
        for j in chain:
            old = mentions[j]
            mentions[j] = NumericMention(
                old.start, old.end, old.value, m.unit, m.kind, j, shared_unit=True
            )
        mentions[i] = NumericMention(
            m.start, m.end, m.value, m.unit, m.kind, i, shared_unit=True
        )


def analyze(text: str) -> LexicalAnalysis:
    """Run the full lexical pass over one sentence."""
    tokens = tokenize(text)
    out = LexicalAnalysis(tokens=tokens)
    out.series = _detect_series(tokens)
    out.mentions = recognize_numerics(tokens)
    out.groups = parse_interval_group(tokens, diagnostics=out.diagnostics)
    # Spelled-out values ("twelve months") are out of scope; a unit word
    # trailing a plain word is flagged so nothing disappears silently.
    for prev, tok in zip(tokens, tokens[1:]):
        if (
            tok.kind is TokenKind.WORD
            and duration_unit(tok.text) is not None
            and prev.kind is TokenKind.WORD
            and duration_unit(prev.text) is None
        ):
            out.diagnostics.append(
                f"unit word {tok.text!r} at {tok.start} follows non-numeric "
                f"{prev.text!r}; spelled-out values are not parsed"
            )
    return out
