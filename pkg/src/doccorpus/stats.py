"""Corpus audit reports and the energy / CO2 estimate of a pipeline run."""

from __future__ import annotations

import json
import logging
import math
import os
import statistics
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .core import ANNOTATION_ORDER

logger = logging.getLogger(__name__)

DEFAULT_PUE = 1.58
DEFAULT_INTENSITY = 0.03864  # kg CO2e per kWh
COOCCURRENCE_DISPLAY_THRESHOLD = 20_000
TRIM_FRACTION = 0.05


class CorpusIntegrityError(ValueError):
    pass


# Corpus access


@dataclass
class ReadCounts:
    records: int = 0
    unreadable: int = 0


def iter_corpus(
    corpus: Union[str, os.PathLike], counts: Optional[ReadCounts] = None
) -> Iterator[dict]:
    """Records of every ``*_meta.jsonl`` file under ``corpus``, in filename order.

    ``corpus`` may also be a single JSONL file. Lines that do not parse as a
    JSON object with a ``content`` string are skipped and counted.
    """
    counts = counts if counts is not None else ReadCounts()
    path = Path(corpus)
    files = [path] if path.is_file() else sorted(path.glob("*_meta.jsonl"))
    for file in files:
        with open(file, encoding="utf-8", errors="replace") as fh:
            for raw in fh:
                if not raw.strip():
                    continue
                try:
                    record = json.loads(raw)
                    if not isinstance(record, dict) or not isinstance(record.get("content"), str):
                        raise ValueError("not a corpus record")
                except ValueError:
                    counts.unreadable += 1
                    continue
                counts.records += 1
                yield record


def record_language(record: dict) -> Optional[str]:
    ident = (record.get("metadata") or {}).get("identification") or {}
    return ident.get("label")


def record_annotations(record: dict) -> List[str]:
    return list((record.get("metadata") or {}).get("annotation") or [])


def record_languages(record: dict) -> List[str]:
    """Languages of a multilingual record, largest first."""
    ident = (record.get("metadata") or {}).get("identification") or {}
    return [entry["label"] for entry in ident.get("languages") or []]


# Size report


@dataclass
class LanguageStats:
    size_bytes: int = 0
    document_count: int = 0
    word_count: int = 0

    def add(self, other: "LanguageStats") -> None:
        self.size_bytes += other.size_bytes
        self.document_count += other.document_count
        self.word_count += other.word_count


@dataclass
class CorpusStats:
    languages: Dict[str, LanguageStats] = field(default_factory=dict)

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        merged = CorpusStats({k: LanguageStats(**asdict(v)) for k, v in self.languages.items()})
        for lang, stats in other.languages.items():
            merged.languages.setdefault(lang, LanguageStats()).add(stats)
        return merged

    def to_dict(self) -> dict:
        return {lang: asdict(self.languages[lang]) for lang in sorted(self.languages)}


def corpus_size_report(records: Iterable[dict]) -> CorpusStats:
    """Bytes, documents and whitespace-separated words per language.

    Only ``content`` is measured; metadata is excluded.
    """
    stats = CorpusStats()
    for record in records:
        lang = record_language(record) or "unknown"
        content = record["content"]
        entry = stats.languages.setdefault(lang, LanguageStats())
        entry.size_bytes += len(content.encode("utf-8"))
        entry.document_count += 1
        entry.word_count += len(content.split())
    return stats


# Annotations


def annotation_distribution(records: Iterable[dict]) -> Dict[str, int]:
    counts = {a.value: 0 for a in ANNOTATION_ORDER}
    counts["clean"] = 0
    counts["total"] = 0
    for record in records:
        labels = set(record_annotations(record))
        counts["total"] += 1
        if not labels:
            counts["clean"] += 1
        for label in labels:
            counts[label] = counts.get(label, 0) + 1
    return counts


# Multilingual co-occurrence


def language_cooccurrence(records: Iterable[dict]) -> Dict[Tuple[str, str], int]:
    """Documents per unordered language pair, most frequent first.

    Records that are not multilingual are ignored; a multilingual record
    listing fewer than two languages is an integrity error.
    """
    counts: Counter = Counter()
    for record in records:
        if record_language(record) != "multi":
            continue
        languages = sorted(set(record_languages(record)))
        if len(languages) < 2:
            raise CorpusIntegrityError(
                f"multilingual record {record.get('warc_headers', {}).get('warc-record-id', '?')} "
                f"lists {len(languages)} language(s)"
            )
        for pair in combinations(languages, 2):
            counts[pair] += 1
    return dict(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))


def cooccurrence_report(
    counts: Dict[Tuple[str, str], int], threshold: int = COOCCURRENCE_DISPLAY_THRESHOLD
) -> Dict[Tuple[str, str], int]:
    """Pairs with at least ``threshold`` documents."""
    return {pair: n for pair, n in counts.items() if n >= threshold}


# Term search


def term_count(records: Iterable[dict], term: str) -> int:
    """Case-folded, non-overlapping substring occurrences of ``term``.

    This is a substring search, not a word search: "Omicron" also matches
    inside "Omicrons".
    """
    if not term:
        raise ValueError("term must be non-empty")
    needle = term.casefold()
    return sum(record["content"].casefold().count(needle) for record in records)


# Document lengths


@dataclass(frozen=True)
class LengthStats:
    count: int
    mean: float
    stdev: float
    trimmed_mean: float
    trimmed_stdev: float


def _length_stats(lengths: List[int], trim: float) -> Optional[LengthStats]:
    if not lengths:
        return None
    ordered = sorted(lengths)
    k = math.floor(len(ordered) * trim)
    trimmed = ordered[k:len(ordered) - k]
    return LengthStats(
        count=len(ordered),
        mean=statistics.fmean(ordered),
        stdev=statistics.pstdev(ordered),
        trimmed_mean=statistics.fmean(trimmed),
        trimmed_stdev=statistics.pstdev(trimmed),
    )


def clean_length_stats(records: Iterable[dict], trim: float = TRIM_FRACTION) -> Dict[str, Optional[LengthStats]]:
    """Content byte length statistics of clean vs annotated documents.

    Trimmed statistics drop ``floor(n * trim)`` documents from each end of
    the length-sorted group. Standard deviations are population values.
    """
    groups: Dict[str, List[int]] = {"clean": [], "annotated": []}
    for record in records:
        length = len(record["content"].encode("utf-8"))
        groups["annotated" if record_annotations(record) else "clean"].append(length)
    return {name: _length_stats(values, trim) for name, values in groups.items()}


# Carbon footprint


@dataclass(frozen=True)
class CarbonParams:
    runtime_hours: float
    cpu_count: int
    cpu_power_watts: float
    dram_power_watts: float
    pue: float = DEFAULT_PUE
    intensity_kg_per_kwh: float = DEFAULT_INTENSITY

    def __post_init__(self) -> None:
        for name in ("runtime_hours", "cpu_count", "cpu_power_watts", "dram_power_watts",
                     "intensity_kg_per_kwh"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pue < 1:
            raise ValueError("pue must be >= 1")


def power_consumption(params: CarbonParams) -> float:
    """Energy in kWh: PUE times runtime times (CPU + DRAM draw), over 1000."""
    draw = params.cpu_count * params.cpu_power_watts + params.dram_power_watts
    return params.pue * params.runtime_hours * draw / 1000


def co2e(kwh: float, intensity: float = DEFAULT_INTENSITY) -> float:
    """Emissions in kg for ``kwh`` at ``intensity`` kg/kWh."""
    if kwh < 0 or intensity < 0:
        raise ValueError("energy and intensity must be non-negative")
    return kwh * intensity


# Serialization


def report_rows(name: str, report) -> Tuple[List[str], List[list]]:
    """Header and rows of a report, for TSV output."""
    if name == "sizes":
        data = report.to_dict()
        return ["language", "size_bytes", "document_count", "word_count"], [
            [lang, v["size_bytes"], v["document_count"], v["word_count"]] for lang, v in data.items()
        ]
    if name == "annotations":
        return ["annotation", "documents"], [[k, v] for k, v in report.items()]
    if name == "cooccurrence":
        return ["language_1", "language_2", "documents"], [[a, b, n] for (a, b), n in report.items()]
    if name == "term":
        return ["term", "occurrences"], [[report["term"], report["count"]]]
    if name == "lengths":
        header = ["group", "count", "mean", "stdev", "trimmed_mean", "trimmed_stdev"]
        rows = []
        for group, stats in report.items():
            if stats is None:
                rows.append([group, 0, "", "", "", ""])
            else:
                rows.append([group, stats.count, stats.mean, stats.stdev,
                             stats.trimmed_mean, stats.trimmed_stdev])
        return header, rows
    if name == "carbon":
        return list(report), [list(report.values())]
    raise ValueError(f"unknown report: {name}")


def report_to_json(name: str, report) -> dict:
    if name == "sizes":
        return report.to_dict()
    if name == "cooccurrence":
        return {"pairs": [{"languages": list(pair), "documents": n} for pair, n in report.items()]}
    if name == "lengths":
        return {group: (asdict(s) if s is not None else None) for group, s in report.items()}
    return dict(report)


def format_tsv(header: List[str], rows: List[list]) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(str(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"
