"""Label inventory and span/sentence/annotation data model.

The inventory is closed: five endpoint families (OS, PFS, DFS, ORR, DoR),
each expressed as a duration and/or a percentage, optionally carrying a
lower/upper confidence-interval bound, plus a time-point label. 25 classes
total. Class names are canonical strings used verbatim in every file format.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional


class SchemaError(ValueError):
    """Base class for data-model violations."""


class UnknownClass(SchemaError):
    pass


class OffsetOutOfBounds(SchemaError):
    pass


class OverlappingSpans(SchemaError):
    pass


class Base(str, enum.Enum):
    OS = "OS"
    PFS = "PFS"
    DFS = "DFS"
    ORR = "ORR"
    DoR = "DoR"


class Measure(str, enum.Enum):
    DURATION = "duration"
    PERCENT = "percent"


class Bound(str, enum.Enum):
    POINT = "point"
    CIL = "CIL"
    CIH = "CIH"


class EndpointClass(str, enum.Enum):
    """The 25 label classes, in canonical (alphabetical family) order."""

    DFS = "DFS"
    DFS_CIH = "DFS_CIH"
    DFS_CIL = "DFS_CIL"
    DFS_percent = "DFS_percent"
    DFS_percent_CIH = "DFS_percent_CIH"
    DFS_percent_CIL = "DFS_percent_CIL"
    DoR = "DoR"
    DoR_CIH = "DoR_CIH"
    DoR_CIL = "DoR_CIL"
    ORR = "ORR"
    ORR_CIH = "ORR_CIH"
    ORR_CIL = "ORR_CIL"
    OS = "OS"
    OS_CIH = "OS_CIH"
    OS_CIL = "OS_CIL"
    OS_percent = "OS_percent"
    OS_percent_CIH = "OS_percent_CIH"
    OS_percent_CIL = "OS_percent_CIL"
    PFS = "PFS"
    PFS_CIH = "PFS_CIH"
    PFS_CIL = "PFS_CIL"
    PFS_percent = "PFS_percent"
    PFS_percent_CIH = "PFS_percent_CIH"
    PFS_percent_CIL = "PFS_percent_CIL"
    time_point = "time_point"

    @property
    def is_time_point(self) -> bool:
        return self is EndpointClass.time_point

    @property
    def base(self) -> Base:
        if self.is_time_point:
            raise ValueError("time_point has no base endpoint")
        return Base(self.value.split("_")[0])

    @property
    def measure(self) -> Measure:
        if self.is_time_point:
            raise ValueError("time_point has no measure")
        if self.base is Base.ORR or "_percent" in self.value:
            return Measure.PERCENT
        return Measure.DURATION

    @property
    def bound(self) -> Bound:
        if self.is_time_point:
            raise ValueError("time_point has no bound")
        if self.value.endswith("_CIL"):
            return Bound.CIL
        if self.value.endswith("_CIH"):
            return Bound.CIH
        return Bound.POINT

    @property
    def point_class(self) -> "EndpointClass":
        """The point-value class of this class's family (self if already one)."""
        if self.is_time_point:
            raise ValueError("time_point has no value family")
        return class_for(self.base, self.measure, Bound.POINT)


def parse_class(name: str) -> EndpointClass:
    """Exact, case-sensitive lookup of a class name.

    Raises UnknownClass for anything outside the 25-member inventory.
    """
    try:
        return EndpointClass(name)
    except ValueError:
        raise UnknownClass(f"not an endpoint class: {name!r}") from None


def class_components(c: EndpointClass) -> Optional[tuple[Base, Measure, Bound]]:
    """Decompose a class into (base, measure, bound); None for time_point."""
    if c.is_time_point:
        return None
    return (c.base, c.measure, c.bound)


def class_for(base: Base, measure: Measure, bound: Bound) -> EndpointClass:
    """Inverse of class_components; rejects combinations outside the inventory."""
    if base is Base.ORR and measure is not Measure.PERCENT:
        raise UnknownClass("ORR is always a percentage")
    if base is Base.DoR and measure is not Measure.DURATION:
        raise UnknownClass("DoR is always a duration")
    name = base.value
    # ORR and DoR have a single measure, so their names never carry a suffix.
    if measure is Measure.PERCENT and base not in (Base.ORR, Base.DoR):
        name += "_percent"
    if bound is not Bound.POINT:
        name += "_" + bound.value
    return EndpointClass(name)


def enumerate_classes() -> list[EndpointClass]:
    """All 25 classes in canonical order (DFS first, time_point last)."""
    return list(EndpointClass)


@dataclass(frozen=True, order=True)
class EntitySpan:
    """A character-offset span in one sentence carrying one class.

    Offsets are 0-based, end-exclusive. `surface` is a redundant copy of the
    covered characters, kept so files remain human-checkable.
    """

    start: int
    end: int
    label: EndpointClass
    surface: str = ""

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise OffsetOutOfBounds(f"bad span offsets ({self.start}, {self.end})")

    def validate_against(self, text: str) -> None:
        if self.end > len(text):
            raise OffsetOutOfBounds(
                f"span ({self.start}, {self.end}) exceeds sentence of length {len(text)}"
            )
        if self.surface and text[self.start : self.end] != self.surface:
            raise OffsetOutOfBounds(
                f"surface {self.surface!r} does not match text "
                f"{text[self.start:self.end]!r} at ({self.start}, {self.end})"
            )

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end


def make_span(text: str, start: int, end: int, label: EndpointClass) -> EntitySpan:
    span = EntitySpan(start, end, label, text[start:end])
    span.validate_against(text)
    return span


@dataclass(frozen=True)
class SentenceRecord:
    sentence_id: str
    pmid: str
    text: str
    section: Optional[str] = None  # "abstract" | "full_text"

    def __post_init__(self):
        if not self.pmid:
            raise SchemaError("pmid must be non-empty")
        if not self.sentence_id:
            raise SchemaError("sentence_id must be non-empty")


def _normalize_spans(sentence_id: str, spans: Iterable[EntitySpan]) -> tuple[EntitySpan, ...]:
    # Duplicate identical spans collapse; overlap is a hard error.
    ordered = sorted(set(spans))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise OverlappingSpans(f"overlapping spans in sentence {sentence_id}: {a} / {b}")
    return tuple(ordered)


@dataclass
class AnnotationSet:
    """All spans for a corpus from one source (labeller, rule tagger, model)."""

    source: str
    entries: dict[str, tuple[EntitySpan, ...]] = field(default_factory=dict)

    def add(self, sentence_id: str, spans: Iterable[EntitySpan]) -> None:
        self.entries[sentence_id] = _normalize_spans(sentence_id, spans)

    def spans_for(self, sentence_id: str) -> tuple[EntitySpan, ...]:
        return self.entries.get(sentence_id, ())

    def __iter__(self) -> Iterator[tuple[str, tuple[EntitySpan, ...]]]:
        return iter(sorted(self.entries.items()))

    def total_spans(self) -> int:
        return sum(len(v) for v in self.entries.values())

    @classmethod
    def from_mapping(
        cls, source: str, entries: Mapping[str, Iterable[EntitySpan]]
    ) -> "AnnotationSet":
        out = cls(source)
        for sid, spans in entries.items():
            out.add(sid, spans)
        return out
