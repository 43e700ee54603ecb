"""Document-level multilingual corpus pipeline for WET crawl data."""

from .core import (
    SHORT_LINE_CHARS,
    Annotation,
    Document,
    LanguageAggregate,
    Line,
    LineIdentification,
    Monolingual,
    Multilingual,
    RawRecord,
    Rejected,
    document_size,
    split_lines,
)

__version__ = "0.1.0"

__all__ = [
    "SHORT_LINE_CHARS",
    "Annotation",
    "Document",
    "LanguageAggregate",
    "Line",
    "LineIdentification",
    "Monolingual",
    "Multilingual",
    "RawRecord",
    "Rejected",
    "document_size",
    "split_lines",
]
