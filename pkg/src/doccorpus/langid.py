"""Line classification and document-level language identification."""

from __future__ import annotations

import logging
import os
import re
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Protocol, Tuple, Union

from .core import (
    UNIDENTIFIED,
    DegenerateDocumentError,
    Document,
    LanguageAggregate,
    Line,
    LineIdentification,
    Monolingual,
    Multilingual,
    Rejected,
)

logger = logging.getLogger(__name__)

LABEL_PREFIX = "__label__"

LOW_CONFIDENCE = "low_confidence"
NO_LANGUAGE = "no_language"
DEGENERATE = "degenerate_document"


def strip_label(label: str) -> str:
    return label[len(LABEL_PREFIX):] if label.startswith(LABEL_PREFIX) else label


@dataclass(frozen=True)
class IdParams:
    line_conf_threshold: float = 0.8
    doc_conf_threshold: float = 0.6
    multiling_min_lines: int = 5
    multiling_max_langs: int = 5

    def __post_init__(self) -> None:
        for name in ("line_conf_threshold", "doc_conf_threshold"):
            value = getattr(self, name)
            if not 0.0 < value <= 1.0:
                raise ValueError(f"{name} must be in (0, 1], got {value}")
        if self.multiling_min_lines < 1:
            raise ValueError("multiling_min_lines must be >= 1")
        if self.multiling_max_langs < 2:
            raise ValueError("multiling_max_langs must be >= 2")


class LineClassifier(Protocol):
    labels: frozenset

    def predict(self, text: str, k: int = 1) -> List[Tuple[str, float]]:
        """Top-``k`` ``(label, probability)`` pairs, best first."""
        ...


class RuleClassifier:
    """Deterministic stand-in for a trained model, driven by regex rules.

    Rules file: one ``pattern<TAB>label<TAB>probability`` per line, ``#``
    comments allowed. The first rule whose pattern matches (``re.search``)
    decides the line; a line no rule matches gets no prediction.
    """

    def __init__(self, rules: Iterable[Tuple[str, str, float]]):
        self.rules = [(re.compile(p), strip_label(label), float(prob)) for p, label, prob in rules]
        self.labels = frozenset(label for _, label, _ in self.rules)

    @classmethod
    def from_tsv(cls, path: Union[str, os.PathLike]) -> "RuleClassifier":
        rules = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                raw = raw.rstrip("\n")
                if not raw.strip() or raw.lstrip().startswith("#"):
                    continue
                parts = raw.split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields")
                rules.append((parts[0], parts[1], float(parts[2])))
        return cls(rules)

    def predict(self, text: str, k: int = 1) -> List[Tuple[str, float]]:
        for pattern, label, prob in self.rules:
            if pattern.search(text):
                return [(label, prob)]
        return []


class FastTextClassifier:
    """Wrapper over a fastText supervised model such as ``lid.176.bin``."""

    def __init__(self, path: Union[str, os.PathLike]):
        try:
            import fasttext
        except ImportError as exc:  # pragma: no cover - optional dependency
            raise ImportError(
                "fastText models need the 'fasttext' package "
                "(pip install 'artifact[fasttext]')"
            ) from exc
        self.path = str(path)
        self.model = fasttext.load_model(self.path)
        self.labels = frozenset(strip_label(label) for label in self.model.get_labels())

    def predict(self, text: str, k: int = 1) -> List[Tuple[str, float]]:
        # The low-level binding sidesteps FastText.predict, which breaks on NumPy 2.
        pairs = self.model.f.predict(text.replace("\n", " "), k, 0.0, "strict")
        # fastText can report probabilities marginally above 1.
        return [(strip_label(label), min(float(p), 1.0)) for p, label in pairs]


def load_classifier(path: Union[str, os.PathLike]) -> LineClassifier:
    """``.tsv`` / ``.rules`` files load as rule classifiers, anything else as fastText."""
    if Path(path).suffix.lower() in {".tsv", ".rules"}:
        return RuleClassifier.from_tsv(path)
    return FastTextClassifier(path)


def classify_line(
    classifier: LineClassifier,
    line: Line,
    params: IdParams = IdParams(),
    errors: Optional[Counter] = None,
) -> LineIdentification:
    try:
        predictions = classifier.predict(line.text, k=1)
    except Exception:
        logger.debug("classifier failed on line %d", line.index, exc_info=True)
        if errors is not None:
            errors["classifier_failure"] += 1
        return LineIdentification.unidentified()
    if not predictions:
        return LineIdentification.unidentified()
    label, prob = predictions[0]
    if prob > params.line_conf_threshold:
        return LineIdentification(label, prob)
    return LineIdentification.unidentified()


def classify_document(
    classifier: LineClassifier,
    doc: Document,
    params: IdParams = IdParams(),
    errors: Optional[Counter] = None,
) -> Document:
    ids = tuple(classify_line(classifier, line, params, errors) for line in doc.lines)
    return replace(doc, line_ids=ids)


def aggregate(doc: Document) -> Dict[Optional[str], LanguageAggregate]:
    """Per-label byte size, size-weighted confidence and byte proportion.

    Weighted confidence sums ``size * confidence`` over a label's lines and
    divides by the whole document size, so unidentified bytes pull every
    language's score down. Keys are in first-appearance order; ``None`` is
    the unidentified bucket.
    """
    if doc.line_ids is None:
        raise ValueError("document has no line identifications")
    total = doc.size
    if total == 0:
        raise DegenerateDocumentError("document size is zero")
    sizes: Dict[Optional[str], int] = {}
    weighted: Dict[Optional[str], float] = {}
    for line, ident in zip(doc.lines, doc.line_ids):
        sizes[ident.label] = sizes.get(ident.label, 0) + line.byte_len
        weighted[ident.label] = weighted.get(ident.label, 0.0) + line.byte_len * ident.confidence
    return {
        label: LanguageAggregate(
            label=label,
            size_bytes=size,
            weighted_confidence=weighted[label] / total,
            proportion=size / total,
        )
        for label, size in sizes.items()
    }


def _rank_key(agg: LanguageAggregate):
    # Largest first, then higher confidence, then lexicographic label.
    return (-agg.size_bytes, -agg.weighted_confidence, agg.label)


def multilingual_test(
    doc: Document,
    aggregates: Dict[Optional[str], LanguageAggregate],
    params: IdParams = IdParams(),
) -> Optional[Multilingual]:
    """``Multilingual`` if the document's languages are balanced, else ``None``.

    With ``m`` identified languages, each must hold at least ``1/(m+1)`` of
    the bytes and unidentified content at most ``1/(m+1)``. Only documents
    with enough lines and not too many languages are considered.
    """
    if len(doc.lines) < params.multiling_min_lines:
        return None
    languages = [agg for label, agg in aggregates.items() if label is not UNIDENTIFIED]
    m = len(languages)
    if not 2 <= m <= params.multiling_max_langs:
        return None
    total = sum(agg.size_bytes for agg in aggregates.values())
    # Integer cross-multiplication keeps the boundary exact.
    if any(agg.size_bytes * (m + 1) < total for agg in languages):
        return None
    unknown = aggregates.get(UNIDENTIFIED)
    if unknown is not None and unknown.size_bytes * (m + 1) > total:
        return None
    ranked = sorted(languages, key=_rank_key)
    return Multilingual(
        languages=tuple(agg.label for agg in ranked),
        confidences=tuple(agg.weighted_confidence for agg in ranked),
    )


def identify_document(doc: Document, params: IdParams = IdParams()):
    """Multilingual check first, then the largest language's confidence."""
    aggregates = aggregate(doc)
    multi = multilingual_test(doc, aggregates, params)
    if multi is not None:
        return multi
    languages = [agg for label, agg in aggregates.items() if label is not UNIDENTIFIED]
    if not languages:
        return Rejected(NO_LANGUAGE, stage="identification")
    best = min(languages, key=_rank_key)
    if best.weighted_confidence >= params.doc_conf_threshold:
        return Monolingual(best.label, best.weighted_confidence)
    return Rejected(LOW_CONFIDENCE, stage="identification")
