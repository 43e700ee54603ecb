"""Document data model shared by every pipeline stage."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Tuple, Union

# Lines shorter than this many Unicode characters are "short".
SHORT_LINE_CHARS = 100

# Sentinel label for lines the classifier could not identify.
UNIDENTIFIED = None


class DegenerateDocumentError(ValueError):
    """Raised when a computation needs a document of nonzero byte size."""


@dataclass(frozen=True)
class RawRecord:
    target_uri: str
    body: str
    record_id: str = ""
    date: str = ""
    content_type: str = ""

    def __post_init__(self) -> None:
        if not self.target_uri:
            raise ValueError("target_uri must be non-empty")

    def warc_headers(self) -> dict:
        return {
            "warc-target-uri": self.target_uri,
            "warc-record-id": self.record_id,
            "warc-date": self.date,
            "content-type": self.content_type,
        }


@dataclass(frozen=True)
class Line:
    index: int
    text: str
    byte_len: int = field(init=False)
    char_len: int = field(init=False)

    def __post_init__(self) -> None:
        if "\n" in self.text:
            raise ValueError("line text cannot contain a newline")
        object.__setattr__(self, "byte_len", len(self.text.encode("utf-8")))
        object.__setattr__(self, "char_len", len(self.text))

    def is_short(self, threshold: int = SHORT_LINE_CHARS) -> bool:
        return self.char_len < threshold


@dataclass(frozen=True)
class LineIdentification:
    """Top classifier label for one line; ``label is None`` means unidentified."""

    label: Optional[str]
    confidence: float

    def __post_init__(self) -> None:
        if self.label is UNIDENTIFIED:
            if self.confidence != 1.0:
                raise ValueError("unidentified lines carry confidence 1.0")
        elif not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"confidence out of (0, 1]: {self.confidence}")

    @classmethod
    def unidentified(cls) -> "LineIdentification":
        return cls(UNIDENTIFIED, 1.0)

    @property
    def identified(self) -> bool:
        return self.label is not UNIDENTIFIED


@dataclass(frozen=True)
class LanguageAggregate:
    label: Optional[str]
    size_bytes: int
    weighted_confidence: float
    proportion: float


class Annotation(str, enum.Enum):
    TINY = "tiny"
    SHORT_SENTENCES = "short_sentences"
    HEADER = "header"
    FOOTER = "footer"
    NOISY = "noisy"
    ADULT = "adult"

    def __str__(self) -> str:
        return self.value


ANNOTATION_ORDER = tuple(Annotation)


def sorted_annotations(annotations) -> list:
    """Annotations in their canonical order, as lowercase names."""
    return [a.value for a in ANNOTATION_ORDER if a in annotations]


@dataclass(frozen=True)
class Monolingual:
    language: str
    confidence: float


@dataclass(frozen=True)
class Multilingual:
    languages: Tuple[str, ...]
    confidences: Tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.languages) < 2:
            raise ValueError("a multilingual document holds at least 2 languages")
        if len(self.languages) != len(self.confidences):
            raise ValueError("languages and confidences must be parallel")


@dataclass(frozen=True)
class Rejected:
    reason: str
    stage: str = ""


DocumentIdentification = Union[Monolingual, Multilingual, Rejected]


@dataclass(frozen=True)
class Document:
    lines: Tuple[Line, ...]
    headers: Mapping[str, str] = field(default_factory=dict)
    line_ids: Optional[Tuple[LineIdentification, ...]] = None
    identification: Optional[DocumentIdentification] = None
    annotations: frozenset = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "lines", tuple(self.lines))
        if self.line_ids is not None:
            object.__setattr__(self, "line_ids", tuple(self.line_ids))
            if len(self.line_ids) != len(self.lines):
                raise ValueError("line_ids must have one entry per line")
        annotations = frozenset(self.annotations)
        for a in annotations:
            if not isinstance(a, Annotation):
                raise ValueError(f"unknown annotation: {a!r}")
        object.__setattr__(self, "annotations", annotations)

    @classmethod
    def from_text(cls, body: str, headers: Optional[Mapping[str, str]] = None) -> "Document":
        return cls(lines=tuple(split_lines(body)), headers=dict(headers or {}))

    @property
    def content(self) -> str:
        return "\n".join(line.text for line in self.lines)

    @property
    def size(self) -> int:
        return document_size(self)


def split_lines(body: str) -> list:
    """Split a record body on ``\\n``, dropping one trailing empty segment.

    A ``\\r`` directly before a ``\\n`` is removed.

    >>> [l.text for l in split_lines("a\\r\\nb\\n")]
    ['a', 'b']
    """
    if not body:
        return []
    segments = body.split("\n")
    if segments[-1] == "":
        segments.pop()
    separators = body.count("\n")
    lines = []
    for i, seg in enumerate(segments):
        if i < separators and seg.endswith("\r"):
            seg = seg[:-1]
        lines.append(Line(i, seg))
    return lines


def document_size(doc: Union[Document, Sequence[Line]]) -> int:
    """Sum of line byte lengths, newline separators excluded."""
    lines = doc.lines if isinstance(doc, Document) else doc
    return sum(line.byte_len for line in lines)
