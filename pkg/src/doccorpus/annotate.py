"""Non-destructive quality annotations."""

from __future__ import annotations

import logging
import os
import unicodedata
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import FrozenSet, Iterable, Optional, Union
from urllib.parse import urlsplit

from .core import SHORT_LINE_CHARS, Annotation, Document

logger = logging.getLogger(__name__)

LETTER_CATEGORIES = frozenset({"Lu", "Ll", "Lt", "Lm", "Lo", "Mn", "Mc", "Me"})

NOISE_THRESHOLD = 0.5
TINY_MAX_LINES = 5
SHORT_SENTENCES_RATIO = 0.5
EDGE_WINDOW = 5
EDGE_MIN_SHORT = 3


class EmptyBlocklistError(ValueError):
    pass


@dataclass(frozen=True)
class AnnotateParams:
    short_threshold: int = SHORT_LINE_CHARS
    tiny_max_lines: int = TINY_MAX_LINES
    short_sentences_ratio: float = SHORT_SENTENCES_RATIO
    edge_window: int = EDGE_WINDOW
    edge_min_short: int = EDGE_MIN_SHORT
    noise_threshold: float = NOISE_THRESHOLD


def _edge_flag(flags: list, params: AnnotateParams) -> bool:
    k = len(flags)
    if k == 0:
        return False
    # Windows shorter than edge_window keep the same majority fraction.
    needed = -(-params.edge_min_short * k // params.edge_window)
    return sum(flags) >= needed


def annotate_length(doc: Document, params: AnnotateParams = AnnotateParams()) -> FrozenSet[Annotation]:
    n = len(doc.lines)
    short = [line.char_len < params.short_threshold for line in doc.lines]
    out = set()
    if n <= params.tiny_max_lines:
        out.add(Annotation.TINY)
    if n and sum(short) >= params.short_sentences_ratio * n:
        out.add(Annotation.SHORT_SENTENCES)
    window = min(params.edge_window, n)
    if _edge_flag(short[:window], params):
        out.add(Annotation.HEADER)
    if window and _edge_flag(short[n - window:], params):
        out.add(Annotation.FOOTER)
    return frozenset(out)


def letter_ratio(text: str) -> float:
    """Share of non-whitespace characters that are letters or combining marks.

    >>> letter_ratio("abc!?.")
    0.5
    """
    letters = 0
    counted = 0
    for ch in text:
        if ch.isspace():
            continue
        counted += 1
        if unicodedata.category(ch) in LETTER_CATEGORIES:
            letters += 1
    return letters / counted if counted else 0.0


def annotate_noise(doc: Document, threshold: float = NOISE_THRESHOLD) -> FrozenSet[Annotation]:
    if letter_ratio(doc.content) < threshold:
        return frozenset({Annotation.NOISY})
    return frozenset()


def normalize_host(host: str) -> str:
    return host.strip().lower().rstrip(".")


def _strip_scheme(url: str) -> str:
    head, sep, rest = url.partition("://")
    return rest if sep and "/" not in head else url


def normalize_url_entry(entry: str) -> str:
    """Scheme-less, ``www.``-less form with a lowercase host and no trailing slash."""
    rest = _strip_scheme(entry.strip())
    host, slash, path = rest.partition("/")
    host = normalize_host(host)
    if host.startswith("www."):
        host = host[4:]
    return (host + slash + path).rstrip("/")


@dataclass(frozen=True)
class Blocklist:
    domains: FrozenSet[str] = frozenset()
    url_prefixes: FrozenSet[str] = frozenset()
    category: str = "adult"

    @classmethod
    def empty(cls, category: str = "adult") -> "Blocklist":
        return cls(category=category)

    def __len__(self) -> int:
        return len(self.domains) + len(self.url_prefixes)


def _read_entries(path: Path) -> Iterable[str]:
    with open(path, encoding="utf-8", errors="replace") as fh:
        for raw in fh:
            entry = raw.strip()
            if entry and not entry.startswith("#"):
                yield entry


def load_ut1(directory: Union[str, os.PathLike], category: Optional[str] = None) -> Blocklist:
    """Load one UT1 category directory holding ``domains`` and/or ``urls``."""
    directory = Path(directory)
    domains_file = directory / "domains"
    urls_file = directory / "urls"
    if not domains_file.is_file() and not urls_file.is_file():
        raise EmptyBlocklistError(f"{directory}: neither 'domains' nor 'urls' found")
    domains = set()
    urls = set()
    if domains_file.is_file():
        domains = {normalize_host(e) for e in _read_entries(domains_file)}
    if urls_file.is_file():
        urls = {normalize_url_entry(e) for e in _read_entries(urls_file)}
    domains.discard("")
    urls.discard("")
    blocklist = Blocklist(frozenset(domains), frozenset(urls), category or directory.name)
    logger.info(
        "loaded %s blocklist: %d domains, %d urls",
        blocklist.category, len(blocklist.domains), len(blocklist.url_prefixes),
    )
    return blocklist


def load_blocklist(root: Union[str, os.PathLike], category: str = "adult") -> Blocklist:
    """Accept either a UT1 root (``<root>/<category>/``) or a category directory."""
    root = Path(root)
    if (root / category).is_dir():
        return load_ut1(root / category, category)
    return load_ut1(root, category)


def _host_suffixes(host: str):
    labels = host.split(".")
    for i in range(len(labels)):
        yield ".".join(labels[i:])


def _url_candidates(rest: str):
    # Prefixes of the scheme-less URL that end at a path boundary.
    for i, ch in enumerate(rest):
        if ch in "/?#":
            yield rest[:i]
    yield rest.rstrip("/")


def annotate_adult(
    target_uri: str, blocklist: Blocklist, errors: Optional[Counter] = None
) -> FrozenSet[Annotation]:
    try:
        parts = urlsplit(target_uri.strip())
        host = parts.hostname or ""
    except ValueError:
        if errors is not None:
            errors["unparseable_uri"] += 1
        return frozenset()
    host = normalize_host(host)
    if not host or not len(blocklist):
        return frozenset()
    flagged = frozenset({Annotation.ADULT})
    if any(suffix in blocklist.domains for suffix in _host_suffixes(host)):
        return flagged
    if blocklist.url_prefixes:
        bare = host[4:] if host.startswith("www.") else host
        rest = bare + parts.path
        if parts.query:
            rest += "?" + parts.query
        if any(c in blocklist.url_prefixes for c in _url_candidates(rest)):
            return flagged
    return frozenset()


def annotate_document(
    doc: Document,
    blocklist: Optional[Blocklist] = None,
    params: AnnotateParams = AnnotateParams(),
    errors: Optional[Counter] = None,
) -> Document:
    annotations = set(annotate_length(doc, params))
    annotations |= annotate_noise(doc, params.noise_threshold)
    uri = doc.headers.get("warc-target-uri", "")
    if blocklist is not None and uri:
        annotations |= annotate_adult(uri, blocklist, errors)
    return replace(doc, annotations=frozenset(annotations))
