"""Extraction, resolution, evaluation and review of oncology efficacy endpoints."""

from .schema import (
    AnnotationSet,
    Base,
    Bound,
    EndpointClass,
    EntitySpan,
    Measure,
    SentenceRecord,
    class_components,
    class_for,
    enumerate_classes,
    parse_class,
)

__all__ = [
    "AnnotationSet",
    "Base",
    "Bound",
    "EndpointClass",
    "EntitySpan",
    "Measure",
    "SentenceRecord",
    "class_components",
    "class_for",
    "enumerate_classes",
    "parse_class",
]

__version__ = "0.1.0"
