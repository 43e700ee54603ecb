"""Destructive document filters: head/tail short-line stripping and the
short-line majority check."""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence, Tuple, Union

from .core import SHORT_LINE_CHARS, Document, Line, Rejected

EMPTY_AFTER_STRIP = "empty_after_strip"
SHORT_LINE_MAJORITY = "short_line_majority"


def strip_head_tail(
    lines: Sequence[Line], short_threshold: int = SHORT_LINE_CHARS
) -> Tuple[list, int, int]:
    """Drop the leading and trailing runs of short lines.

    Returns ``(kept, head_removed, tail_removed)``; ``kept`` is a contiguous
    slice of ``lines``. Short lines between two long ones are left alone.
    """
    n = len(lines)
    start = 0
    while start < n and lines[start].char_len < short_threshold:
        start += 1
    end = n
    while end > start and lines[end - 1].char_len < short_threshold:
        end -= 1
    return list(lines[start:end]), start, n - end


def short_line_bin_keep(lines: Sequence[Line], short_threshold: int = SHORT_LINE_CHARS) -> bool:
    # Ties keep the document; an empty document is discarded.
    if not lines:
        return False
    short = sum(1 for line in lines if line.char_len < short_threshold)
    return short <= len(lines) - short


def filter_document(
    doc: Document, short_threshold: int = SHORT_LINE_CHARS
) -> Union[Document, Rejected]:
    kept, _, _ = strip_head_tail(doc.lines, short_threshold)
    if not kept:
        return Rejected(EMPTY_AFTER_STRIP, stage="filter")
    if not short_line_bin_keep(kept, short_threshold):
        return Rejected(SHORT_LINE_MAJORITY, stage="filter")
    return replace(doc, lines=tuple(kept), line_ids=None)
