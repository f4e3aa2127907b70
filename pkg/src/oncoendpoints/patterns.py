"""Token-level pattern language for corpus filtering and rule tagging.

The DSL mirrors the structure of curated literature queries: quoted
literals (case-insensitive unless suffixed with `!`), `|` alternation, `?`
optionals, `NUM`/`PCT`/`DUR` token classes, `cap:name(...)` captures and
`gap<=k` bounded skips. Matching is leftmost and non-overlapping over the
tokens produced by `lexical.tokenize`; alternatives are tried in written
order, optionals prefer to consume, and gaps skip as few tokens as needed.

Example::

    ("mOS"! | "median" "OS"!) ("(" ("OS"! | "mOS"!) ")")? ("rate" | "period" | "time")?
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .lexical import (
    MentionKind,
    Token,
    TokenKind,
    recognize_numerics,
    tokenize,
)
from .schema import SentenceRecord


class PatternSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Literal:
    text: str
    exact_case: bool = False
    low: str = ""

    def __post_init__(self):
        object.__setattr__(self, "low", self.text.lower())


@dataclass(frozen=True)
class Alt:
    options: tuple


@dataclass(frozen=True)
class Seq:
    items: tuple


@dataclass(frozen=True)
class Opt:
    item: object


@dataclass(frozen=True)
class Class:
    kind: str  # NUM, PCT, DUR, WORD, HYPHEN, PUNCT, OPEN, CLOSE


@dataclass(frozen=True)
class Capture:
    name: str
    item: object


@dataclass(frozen=True)
class Gap:
    max_tokens: int


_CLASS_NAMES = {"NUM", "PCT", "DUR", "WORD", "HYPHEN", "PUNCT", "OPEN", "CLOSE"}


# ---------------------------------------------------------------------------
# Compiler

_DSL_TOKEN_RE = re.compile(
    r'(?P<string>"[^"\n]*")'
    r"|(?P<gap>gap<=\d+)"
    r"|(?P<cap>cap:[A-Za-z_][A-Za-z0-9_]*\()"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[()|?!])"
    r"|(?P<ws>\s+)"
    r"|(?P<bad>.)"
)


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.items: list[tuple[str, str, int, int]] = []  # (kind, text, line, col)
        line, col = 1, 1
        for m in _DSL_TOKEN_RE.finditer(source):
            kind = m.lastgroup
            text = m.group(0)
            if kind == "bad":
                raise PatternSyntaxError(f"unexpected character {text!r}", line, col)
            if kind != "ws":
                self.items.append((kind, text, line, col))
            for ch in text:
                if ch == "\n":
                    line += 1
                    col = 1
                else:
                    col += 1
        self.pos = 0

    def _peek(self) -> Optional[tuple[str, str, int, int]]:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def _next(self) -> tuple[str, str, int, int]:
        item = self._peek()
        if item is None:
            last = self.items[-1] if self.items else ("", "", 1, 1)
            raise PatternSyntaxError("unexpected end of pattern", last[2], last[3])
        self.pos += 1
        return item

    def _expect_op(self, op: str) -> None:
        item = self._peek()
        if item is None or item[0] != "op" or item[1] != op:
            where = item if item is not None else (self.items[-1] if self.items else ("", "", 1, 1))
            raise PatternSyntaxError(f"expected {op!r}", where[2], where[3])
        self.pos += 1

    def parse(self):
        node = self._alt()
        item = self._peek()
        if item is not None:
            raise PatternSyntaxError(f"unexpected {item[1]!r}", item[2], item[3])
        return node

    def _alt(self):
        options = [self._seq()]
        while True:
            item = self._peek()
            if item is not None and item[0] == "op" and item[1] == "|":
                self.pos += 1
                options.append(self._seq())
            else:
                break
        return options[0] if len(options) == 1 else Alt(tuple(options))

    def _seq(self):
        items = []
        while True:
            item = self._peek()
            if item is None or (item[0] == "op" and item[1] in ")|"):
                break
            items.append(self._item())
        if not items:
            where = self._peek() or (self.items[-1] if self.items else ("", "", 1, 1))
            raise PatternSyntaxError("empty alternative", where[2], where[3])
        return items[0] if len(items) == 1 else Seq(tuple(items))

    def _item(self):
        node = self._atom()
        item = self._peek()
        if item is not None and item[0] == "op" and item[1] == "?":
            self.pos += 1
            node = Opt(node)
        return node

    def _atom(self):
        kind, text, line, col = self._next()
        if kind == "string":
            exact = False
            nxt = self._peek()
            if nxt is not None and nxt[0] == "op" and nxt[1] == "!":
                exact = True
                self.pos += 1
            return self._literal(text[1:-1], exact, line, col)
        if kind == "gap":
            return Gap(int(text[len("gap<="):]))
        if kind == "cap":
            name = text[len("cap:"):-1]
            inner = self._alt()
            self._expect_op(")")
            return Capture(name, inner)
        if kind == "name":
            if text in _CLASS_NAMES:
                return Class(text)
            raise PatternSyntaxError(f"unknown token class {text!r}", line, col)
        if kind == "op" and text == "(":
            inner = self._alt()
            self._expect_op(")")
            return inner
        raise PatternSyntaxError(f"unexpected {text!r}", line, col)

    @staticmethod
    def _literal(text: str, exact: bool, line: int, col: int):
        # Multi-token literals ("disease-free survival") expand into a
        # sequence so query files stay readable.
        parts = tokenize(text)
        if not parts:
            raise PatternSyntaxError("empty literal", line, col)
        if len(parts) == 1:
            return Literal(parts[0].text, exact)
        return Seq(tuple(Literal(p.text, exact) for p in parts))


def _collect_capture_names(node, names: list[str]) -> None:
    if isinstance(node, Capture):
        names.append(node.name)
        _collect_capture_names(node.item, names)
    elif isinstance(node, (Alt, Seq)):
        for child in node.options if isinstance(node, Alt) else node.items:
            _collect_capture_names(child, names)
    elif isinstance(node, Opt):
        _collect_capture_names(node.item, names)


def _uses_numeric_kinds(node) -> bool:
    if isinstance(node, Class):
        return node.kind in ("PCT", "DUR")
    if isinstance(node, (Alt, Seq)):
        children = node.options if isinstance(node, Alt) else node.items
        return any(_uses_numeric_kinds(c) for c in children)
    if isinstance(node, (Opt, Capture)):
        return _uses_numeric_kinds(node.item)
    return False


_OPAQUE = object()


def _first_literals(node):
    """Literals that can start a match, or _OPAQUE when unknowable."""
    if isinstance(node, Literal):
        return {node.text.lower()}, False
    if isinstance(node, (Class, Gap)):
        return _OPAQUE, False
    if isinstance(node, Capture):
        return _first_literals(node.item)
    if isinstance(node, Opt):
        lits, _ = _first_literals(node.item)
        return lits, True
    if isinstance(node, Alt):
        out: set[str] = set()
        skippable = False
        for child in node.options:
            lits, skip = _first_literals(child)
            if lits is _OPAQUE:
                return _OPAQUE, False
            out |= lits
            skippable = skippable or skip
        return out, skippable
    if isinstance(node, Seq):
        out = set()
        for item in node.items:
            lits, skip = _first_literals(item)
            if lits is _OPAQUE:
                return _OPAQUE, False
            out |= lits
            if not skip:
                return out, False
        return out, True
    raise TypeError(f"unknown node {node!r}")


_MAX_ANCHOR_PHRASES = 24


def _leading_phrases(node):
    """Word phrases every match must start with, or None when unknowable.

    Returns (set of word tuples, fully_consumed). Punctuation literals
    contribute no word (the prescreen regex glues words with \\W+), and the
    walk stops at the first optional/class/gap item: the prefix collected so
    far is still a necessary condition.
    """
    if isinstance(node, Literal):
        word = node.text.lower()
        if re.match(r"\w", word):
            return {(word,)}, True
        return {()}, True
    if isinstance(node, (Class, Gap)):
        return None
    if isinstance(node, Capture):
        return _leading_phrases(node.item)
    if isinstance(node, Opt):
        return {()}, False
    if isinstance(node, Alt):
        out: set = set()
        consumed = True
        for branch in node.options:
            r = _leading_phrases(branch)
            if r is None:
                return None
            phrases, c = r
            out |= phrases
            consumed = consumed and c
        return out, consumed
    if isinstance(node, Seq):
        acc = {()}
        consumed = True
        for item in node.items:
            r = _leading_phrases(item)
            if r is None:
                consumed = False
                break
            phrases, c = r
            if phrases == {()} and not c:  # optional item: stop with the prefix
                consumed = False
                break
            new = {a + p for a in acc for p in phrases}
            if len(new) > _MAX_ANCHOR_PHRASES:
                consumed = False
                break
            acc = new
            if not c:
                consumed = False
                break
        return acc, consumed
    raise TypeError(f"unknown node {node!r}")


@dataclass
class CompiledPattern:
    ast: object
    source: str
    name: str = ""
    uses_numeric_kinds: bool = field(init=False)
    anchor_phrases: Optional[frozenset[tuple[str, ...]]] = field(init=False)
    first_texts: Optional[frozenset[str]] = field(init=False)

    def __post_init__(self):
        self.uses_numeric_kinds = _uses_numeric_kinds(self.ast)
        lits, _ = _first_literals(self.ast)
        # Every match must start with one of these token texts (lowercased);
        # used to skip start positions during matching.
        self.first_texts = None if lits is _OPAQUE else frozenset(lits)
        r = _leading_phrases(self.ast)
        if r is None or () in r[0]:
            self.anchor_phrases = None
        else:
            self.anchor_phrases = frozenset(r[0])


def compile_pattern(source: str, name: str = "") -> CompiledPattern:
    """Compile DSL text into an immutable pattern.

    Raises PatternSyntaxError carrying line/column on malformed input.
    """
    ast = _Parser(source).parse()
    names: list[str] = []
    _collect_capture_names(ast, names)
    dupes = {n for n in names if names.count(n) > 1}
    if dupes:
        raise PatternSyntaxError(f"duplicate capture name {sorted(dupes)[0]!r}", 1, 1)
    return CompiledPattern(ast, source.strip(), name)


# ---------------------------------------------------------------------------
# Matching


@dataclass(frozen=True)
class PatternMatch:
    pattern: str
    start: int  # character offsets of the whole match
    end: int
    token_start: int  # token index range [token_start, token_end)
    token_end: int
    captures: dict  # name -> (char_start, char_end, token_start, token_end)


class _Matcher:
    def __init__(self, tokens: Sequence[Token], numeric_kinds: Optional[dict[int, MentionKind]]):
        self.tokens = tokens
        self.n = len(tokens)
        self.numeric_kinds = numeric_kinds or {}
        self.caps: list[tuple[str, int, int]] = []

    def token_matches(self, node, i: int) -> bool:
        if i >= self.n:
            return False
        tok = self.tokens[i]
        if isinstance(node, Literal):
            if node.exact_case:
                return tok.text == node.text
            return tok.low == node.low
        kind = node.kind
        if kind == "NUM":
            return tok.kind is TokenKind.NUMBER
        if kind == "PCT":
            return (
                tok.kind is TokenKind.NUMBER
                and self.numeric_kinds.get(i) is MentionKind.PERCENT
            )
        if kind == "DUR":
            return (
                tok.kind is TokenKind.NUMBER
                and self.numeric_kinds.get(i) is MentionKind.DURATION
            )
        return tok.kind is {
            "WORD": TokenKind.WORD,
            "HYPHEN": TokenKind.HYPHEN,
            "PUNCT": TokenKind.PUNCTUATION,
            "OPEN": TokenKind.OPEN_BRACKET,
            "CLOSE": TokenKind.CLOSE_BRACKET,
        }[kind]

    def match(self, node, pos: int) -> Iterator[int]:
        """Yield candidate end positions in preference order."""
        if isinstance(node, (Literal, Class)):
            if self.token_matches(node, pos):
                yield pos + 1
        elif isinstance(node, Seq):
            yield from self._match_seq(node.items, 0, pos)
        elif isinstance(node, Alt):
            for option in node.options:
                yield from self.match(option, pos)
        elif isinstance(node, Opt):
            yield from self.match(node.item, pos)
            yield pos
        elif isinstance(node, Gap):
            for k in range(min(node.max_tokens, self.n - pos) + 1):
                yield pos + k
        elif isinstance(node, Capture):
            for end in self.match(node.item, pos):
                self.caps.append((node.name, pos, end))
                yield end
                self.caps.pop()
        else:
            raise TypeError(f"unknown node {node!r}")

    def _match_seq(self, items: tuple, idx: int, pos: int) -> Iterator[int]:
        if idx == len(items):
            yield pos
            return
        for end in self.match(items[idx], pos):
            yield from self._match_seq(items, idx + 1, end)


def _numeric_kind_map(tokens: Sequence[Token]) -> dict[int, MentionKind]:
    return {m.token_index: m.kind for m in recognize_numerics(tokens)}


def find_matches(
    pattern: CompiledPattern,
    tokens: Sequence[Token],
    numeric_kinds: Optional[dict[int, MentionKind]] = None,
) -> list[PatternMatch]:
    """All leftmost, non-overlapping matches in token order.

    Zero-length matches (a fully optional pattern) are discarded.
    """
    if pattern.uses_numeric_kinds and numeric_kinds is None:
        numeric_kinds = _numeric_kind_map(tokens)
    matcher = _Matcher(tokens, numeric_kinds)
    first = pattern.first_texts
    out: list[PatternMatch] = []
    i = 0
    n = len(tokens)
    while i < n:
        if first is not None and tokens[i].low not in first:
            i += 1
            continue
        matched = None
        for end in matcher.match(pattern.ast, i):
            if end > i:
                matched = end
                break
        if matched is None:
            matcher.caps.clear()
            i += 1
            continue
        captures = {
            name: (tokens[s].start, tokens[e - 1].end, s, e)
            for name, s, e in matcher.caps
            if e > s
        }
        matcher.caps.clear()
        out.append(
            PatternMatch(
                pattern=pattern.name,
                start=tokens[i].start,
                end=tokens[matched - 1].end,
                token_start=i,
                token_end=matched,
                captures=captures,
            )
        )
        i = matched
    return out


def has_match(
    pattern: CompiledPattern,
    tokens: Sequence[Token],
    numeric_kinds: Optional[dict[int, MentionKind]] = None,
) -> bool:
    if pattern.uses_numeric_kinds and numeric_kinds is None:
        numeric_kinds = _numeric_kind_map(tokens)
    return _exists(pattern, _Matcher(tokens, numeric_kinds))


def _exists(pattern: CompiledPattern, matcher: "_Matcher") -> bool:
    first = pattern.first_texts
    ast = pattern.ast
    for i, tok in enumerate(matcher.tokens):
        if first is not None and tok.low not in first:
            continue
        for end in matcher.match(ast, i):
            if end > i:
                return True
        matcher.caps.clear()
    return False


# ---------------------------------------------------------------------------
# Ensembles and corpus filtering


def _anchor_regex(phrases: set[tuple[str, ...]]) -> re.Pattern:
    parts = [
        r"\b" + r"\W+".join(re.escape(w) for w in phrase) + r"\b"
        for phrase in sorted(phrases)
    ]
    return re.compile("|".join(parts), re.IGNORECASE)


@dataclass
class QueryEnsemble:
    """Positive cue patterns plus suppression patterns for one target."""

    name: str
    positive: list[CompiledPattern]
    negative: list[CompiledPattern] = field(default_factory=list)
    anchor_phrases: Optional[frozenset[tuple[str, ...]]] = field(init=False, default=None, repr=False)
    _anchor_re: Optional[re.Pattern] = field(init=False, default=None, repr=False)

    def __post_init__(self):
        if not self.positive:
            raise ValueError(f"ensemble {self.name!r} needs at least one positive pattern")
        anchors: set[tuple[str, ...]] = set()
        for p in self.positive:
            if p.anchor_phrases is None:
                return  # one unanchorable pattern disables the prescreen
            anchors |= p.anchor_phrases
        self.anchor_phrases = frozenset(anchors)
        self._anchor_re = _anchor_regex(anchors)

    def might_match(self, text: str) -> bool:
        """Cheap regex prescreen; False means no positive pattern can match."""
        return self._anchor_re is None or self._anchor_re.search(text) is not None

    def positive_match(self, tokens, numeric_kinds=None) -> bool:
        return self._any_match(self.positive, tokens, numeric_kinds)

    def negative_match(self, tokens, numeric_kinds=None) -> bool:
        return self._any_match(self.negative, tokens, numeric_kinds)

    @staticmethod
    def _any_match(patterns, tokens, numeric_kinds) -> bool:
        if numeric_kinds is None and any(p.uses_numeric_kinds for p in patterns):
            numeric_kinds = _numeric_kind_map(tokens)
        matcher = _Matcher(tokens, numeric_kinds)
        return any(_exists(p, matcher) for p in patterns)


# A duration or percent mention needs a digit plus '%' or a unit word.
_NUMERIC_HINT_RE = re.compile(
    r"%|\b(?:months?|mos?|years?|yrs?|weeks?|wks?|days?)\b", re.IGNORECASE
)
_DIGIT_RE = re.compile(r"\d")


def sentence_has_value_mention(tokens) -> bool:
    return any(
        m.kind in (MentionKind.PERCENT, MentionKind.DURATION)
        for m in recognize_numerics(tokens)
    )


def _light_numeric_scan(tokens) -> tuple[dict[int, MentionKind], bool]:
    """Adjacency-only percent/duration detection for the filter fast path.

    Agrees with recognize_numerics on whether any percent or duration value
    exists (distributed-unit lists always end with an adjacent unit).
    """
    from .lexical import duration_unit

    kinds: dict[int, MentionKind] = {}
    has_value = False
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok.kind is not TokenKind.NUMBER or i + 1 >= n:
            continue
        nxt = tokens[i + 1]
        if nxt.kind is TokenKind.PERCENT_SIGN:
            kinds[i] = MentionKind.PERCENT
            has_value = True
        elif nxt.kind is TokenKind.WORD and duration_unit(nxt.text) is not None:
            kinds[i] = MentionKind.DURATION
            has_value = True
    return kinds, has_value


def filter_corpus(
    ensembles: Sequence[QueryEnsemble], sentences: Iterable[SentenceRecord]
) -> Iterator[SentenceRecord]:
    """Streaming, order-preserving corpus filter.

    A sentence passes iff some ensemble's positive pattern matches, the
    sentence carries a duration or percent mention, and none of that
    ensemble's negative patterns match.
    """
    # Two-stage prescreen: a short regex of one distinctive word per anchor
    # phrase rejects the typical non-endpoint sentence with a single cheap
    # scan; survivors face the full phrase regex, then per-ensemble anchors.
    stage1: Optional[re.Pattern] = None
    combined: Optional[re.Pattern] = None
    if all(e.anchor_phrases is not None for e in ensembles):
        phrases = {p for e in ensembles for p in e.anchor_phrases}
        words = {max(p, key=lambda w: (len(w), w)) for p in phrases}
        stage1 = re.compile(
            r"\b(?:" + "|".join(sorted(words)) + r")\b", re.IGNORECASE
        )
        combined = _anchor_regex(phrases)

    for sentence in sentences:
        text = sentence.text
        if stage1 is not None and stage1.search(text) is None:
            continue
        if combined is not None and combined.search(text) is None:
            continue
        candidates = [e for e in ensembles if e.might_match(text)]
        if not candidates:
            continue
        if not (_DIGIT_RE.search(text) and _NUMERIC_HINT_RE.search(text)):
            continue
        tokens = tokenize(text)
        numeric_kinds, has_value = _light_numeric_scan(tokens)
        if not has_value:
            continue
        for ensemble in candidates:
            if ensemble.positive_match(tokens, numeric_kinds) and not ensemble.negative_match(
                tokens, numeric_kinds
            ):
                yield sentence
                break


# ---------------------------------------------------------------------------
# Query library loading


def parse_ensemble(text: str, name: str) -> QueryEnsemble:
    """Parse a query file: `positive:` / `negative:` headers, one pattern per line."""
    positive: list[CompiledPattern] = []
    negative: list[CompiledPattern] = []
    current: Optional[list[CompiledPattern]] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "positive:":
            current = positive
            continue
        if line == "negative:":
            current = negative
            continue
        if current is None:
            raise PatternSyntaxError("pattern before positive:/negative: header", lineno, 1)
        try:
            current.append(compile_pattern(line, name=f"{name}:{lineno}"))
        except PatternSyntaxError as exc:
            raise PatternSyntaxError(
                f"in {name} line {lineno}: {exc.args[0]}", lineno, exc.column
            ) from None
    return QueryEnsemble(name, positive, negative)


def load_query_library(directory=None) -> dict[str, QueryEnsemble]:
    """Load every *.query file from a directory (default: the bundled set)."""
    import importlib.resources as resources
    from pathlib import Path

    ensembles: dict[str, QueryEnsemble] = {}
    if directory is None:
        root = resources.files(__package__) / "queries"
        entries = sorted(root.iterdir(), key=lambda p: p.name)
    else:
        entries = sorted(Path(directory).iterdir())
    for entry in entries:
        if not entry.name.endswith(".query"):
            continue
        name = entry.name[: -len(".query")]
        ensembles[name] = parse_ensemble(entry.read_text(encoding="utf-8"), name)
    return ensembles
