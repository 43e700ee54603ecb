"""End-to-end processing: ingest, filter, identify, annotate, write."""

from __future__ import annotations

import json
import logging
import os
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import islice
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .annotate import AnnotateParams, Blocklist, annotate_document, load_blocklist
from .core import (
    SHORT_LINE_CHARS,
    DegenerateDocumentError,
    Document,
    Monolingual,
    Multilingual,
    RawRecord,
    Rejected,
    sorted_annotations,
)
from .filters import filter_document
from .ingest import open_source
from .langid import DEGENERATE, IdParams, LineClassifier, classify_document, identify_document, load_classifier

logger = logging.getLogger(__name__)

MULTI_BUCKET = "multi"
BATCH_SIZE = 64


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    inputs: Tuple[Path, ...]
    model: Path
    output: Path
    blocklist: Optional[Path] = None
    id_params: IdParams = IdParams()
    short_line_chars: int = SHORT_LINE_CHARS
    workers: int = 1
    keep_rejected: bool = False
    max_error_rate: float = 0.01
    # Keep input order in the output files whatever the worker count.
    ordered: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(Path(p) for p in self.inputs))
        object.__setattr__(self, "model", Path(self.model))
        object.__setattr__(self, "output", Path(self.output))
        if self.blocklist is not None:
            object.__setattr__(self, "blocklist", Path(self.blocklist))

    @property
    def annotate_params(self) -> AnnotateParams:
        return AnnotateParams(short_threshold=self.short_line_chars)

    def validate(self) -> None:
        if self.workers < 1:
            raise ConfigError("worker count must be >= 1")
        if self.short_line_chars < 1:
            raise ConfigError("short line threshold must be >= 1")
        for path in self.inputs:
            if not path.exists():
                raise ConfigError(f"input not found: {path}")
        if not self.model.is_file():
            raise ConfigError(f"model not found: {self.model}")
        if self.blocklist is not None and not self.blocklist.is_dir():
            raise ConfigError(f"blocklist directory not found: {self.blocklist}")


@dataclass
class PipelineReport:
    records_in: int = 0
    malformed: int = 0
    skipped_non_conversion: int = 0
    rejected_by_filter: Dict[str, int] = field(default_factory=dict)
    rejected_by_identification: Dict[str, int] = field(default_factory=dict)
    record_errors: int = 0
    documents_out: Dict[str, int] = field(default_factory=dict)
    multilingual_documents_out: int = 0
    annotation_counts: Dict[str, int] = field(default_factory=dict)
    classifier_failures: int = 0
    unparseable_uris: int = 0

    @property
    def accounted(self) -> int:
        return (
            sum(self.documents_out.values())
            + self.multilingual_documents_out
            + sum(self.rejected_by_filter.values())
            + sum(self.rejected_by_identification.values())
            + self.record_errors
            + self.malformed
        )

    @property
    def error_rate(self) -> float:
        if not self.records_in:
            return 0.0
        return (self.malformed + self.record_errors) / self.records_in

    def to_dict(self) -> dict:
        data = asdict(self)
        for key in ("rejected_by_filter", "rejected_by_identification", "documents_out", "annotation_counts"):
            data[key] = dict(sorted(data[key].items()))
        return data


def process_record(
    record: RawRecord,
    classifier: LineClassifier,
    blocklist: Optional[Blocklist],
    config: PipelineConfig,
    errors: Optional[Counter] = None,
) -> Union[Tuple[str, Document], Rejected]:
    """Run one record through every stage; rejection carries the failing stage."""
    doc = Document.from_text(record.body, record.warc_headers())
    filtered = filter_document(doc, config.short_line_chars)
    if isinstance(filtered, Rejected):
        return filtered
    classified = classify_document(classifier, filtered, config.id_params, errors)
    try:
        ident = identify_document(classified, config.id_params)
    except DegenerateDocumentError:
        return Rejected(DEGENERATE, stage="identification")
    if isinstance(ident, Rejected):
        return ident
    annotated = annotate_document(
        replace(classified, identification=ident), blocklist, config.annotate_params, errors
    )
    bucket = MULTI_BUCKET if isinstance(ident, Multilingual) else ident.language
    return bucket, annotated


def serialize_document(doc: Document) -> dict:
    ident = doc.identification
    if isinstance(ident, Monolingual):
        identification = {"label": ident.language, "prob": ident.confidence}
    elif isinstance(ident, Multilingual):
        identification = {
            "label": MULTI_BUCKET,
            "prob": sum(ident.confidences),
            "languages": [
                {"label": lang, "prob": prob} for lang, prob in zip(ident.languages, ident.confidences)
            ],
        }
    else:
        raise ValueError("only identified documents can be serialized")
    annotations = sorted_annotations(doc.annotations) or None
    sentence_ids = [
        {"label": lid.label, "prob": lid.confidence} if lid.identified else None
        for lid in (doc.line_ids or ())
    ]
    return {
        "content": doc.content,
        "warc_headers": dict(doc.headers),
        "metadata": {
            "identification": identification,
            "annotation": annotations,
            "sentence_identifications": sentence_ids,
        },
    }


def dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


# Worker side. Each process loads its own classifier and blocklist.

_worker_state: dict = {}


def _load_resources(config: PipelineConfig):
    classifier = load_classifier(config.model)
    blocklist = load_blocklist(config.blocklist) if config.blocklist is not None else None
    return classifier, blocklist


def _init_worker(config: PipelineConfig) -> None:
    classifier, blocklist = _load_resources(config)
    _worker_state.update(config=config, classifier=classifier, blocklist=blocklist)


def _process_batch(batch: List[RawRecord], classifier, blocklist, config) -> list:
    results = []
    for record in batch:
        errors: Counter = Counter()
        try:
            outcome = process_record(record, classifier, blocklist, config, errors)
        except Exception:
            logger.exception("failed to process %s", record.target_uri)
            outcome = None
        results.append((record, outcome, dict(errors)))
    return results


def _work(batch: List[RawRecord]) -> list:
    state = _worker_state
    return _process_batch(batch, state["classifier"], state["blocklist"], state["config"])


def _batches(records: Iterable[RawRecord], size: int) -> Iterator[List[RawRecord]]:
    it = iter(records)
    while True:
        batch = list(islice(it, size))
        if not batch:
            return
        yield batch


class _Writers:
    """One lazily opened output file per language bucket."""

    def __init__(self, root: Path):
        self.root = root
        self.files: dict = {}

    def write(self, bucket: str, line: str) -> None:
        fh = self.files.get(bucket)
        if fh is None:
            path = self.root / f"{bucket}_meta.jsonl"
            path.parent.mkdir(parents=True, exist_ok=True)
            fh = self.files[bucket] = open(path, "w", encoding="utf-8", newline="\n")
        fh.write(line)
        fh.write("\n")

    def close(self) -> None:
        for fh in self.files.values():
            fh.close()


class Pipeline:
    def __init__(self, config: PipelineConfig):
        config.validate()
        self.config = config
        self.report = PipelineReport()
        self._sources: list = []

    def _records(self) -> Iterator[RawRecord]:
        for path in self.config.inputs:
            reader = open_source(path)
            self._sources.append(reader)
            yield from reader

    def _results(self) -> Iterator[tuple]:
        config = self.config
        batches = _batches(self._records(), BATCH_SIZE)
        if config.workers == 1:
            classifier, blocklist = _load_resources(config)
            for batch in batches:
                yield from _process_batch(batch, classifier, blocklist, config)
            return
        with ProcessPoolExecutor(
            max_workers=config.workers, initializer=_init_worker, initargs=(config,)
        ) as pool:
            pending: deque = deque()
            limit = config.workers * 4
            for batch in batches:
                pending.append(pool.submit(_work, batch))
                if len(pending) >= limit:
                    yield from self._drain(pending, ordered=config.ordered)
            while pending:
                yield from pending.popleft().result()

    @staticmethod
    def _drain(pending: deque, ordered: bool) -> Iterator[tuple]:
        if ordered:
            yield from pending.popleft().result()
            return
        for i, future in enumerate(pending):
            if future.done():
                del pending[i]
                yield from future.result()
                return
        yield from pending.popleft().result()

    def run(self) -> PipelineReport:
        config = self.config
        report = self.report
        try:
            config.output.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {config.output}: {exc}") from exc
        writers = _Writers(config.output)
        rejected_fh = None
        if config.keep_rejected:
            (config.output / "rejected").mkdir(exist_ok=True)
            rejected_fh = open(config.output / "rejected" / "rejected.jsonl", "w", encoding="utf-8", newline="\n")
        annotation_counts: Counter = Counter()
        try:
            for record, outcome, errors in self._results():
                report.classifier_failures += errors.get("classifier_failure", 0)
                report.unparseable_uris += errors.get("unparseable_uri", 0)
                if outcome is None:
                    report.record_errors += 1
                elif isinstance(outcome, Rejected):
                    target = (
                        report.rejected_by_filter if outcome.stage == "filter"
                        else report.rejected_by_identification
                    )
                    target[outcome.reason] = target.get(outcome.reason, 0) + 1
                    if rejected_fh is not None:
                        rejected_fh.write(dumps({
                            "stage": outcome.stage,
                            "reason": outcome.reason,
                            "warc_headers": record.warc_headers(),
                            "content": record.body,
                        }) + "\n")
                else:
                    bucket, doc = outcome
                    writers.write(bucket, dumps(serialize_document(doc)))
                    if bucket == MULTI_BUCKET:
                        report.multilingual_documents_out += 1
                    else:
                        report.documents_out[bucket] = report.documents_out.get(bucket, 0) + 1
                    annotation_counts.update(a.value for a in doc.annotations)
        finally:
            writers.close()
            if rejected_fh is not None:
                rejected_fh.close()
        for reader in self._sources:
            report.malformed += reader.counts.malformed
            report.skipped_non_conversion += reader.counts.skipped_type
            report.records_in += reader.counts.yielded + reader.counts.malformed
        report.annotation_counts = dict(annotation_counts)
        with open(config.output / "report.json", "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return report


def run(config: PipelineConfig) -> PipelineReport:
    return Pipeline(config).run()


# Flat key=value configuration files.

_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}

CONFIG_ALIASES = {"filter.short-line-chars": "short-chars"}
CONFIG_KEYS = {
    "input", "model", "blocklist", "output", "workers", "line-threshold",
    "doc-threshold", "short-chars", "keep-rejected", "max-error-rate", "ordered",
}


def _parse_bool(key: str, value: str) -> bool:
    v = value.strip().lower()
    if v in _BOOL_TRUE:
        return True
    if v in _BOOL_FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def read_config_file(path: Union[str, os.PathLike]) -> dict:
    """Parse ``key = value`` lines; keys use the long flag names."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key = key.strip().lower().replace("_", "-")
            key = CONFIG_ALIASES.get(key, key)
            if key not in CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def build_config(values: dict) -> PipelineConfig:
    """Build a config from flag-named values (strings or already typed)."""
    missing = [k for k in ("input", "model", "output") if not values.get(k)]
    if missing:
        raise ConfigError("missing required setting(s): " + ", ".join(missing))
    inputs = values["input"]
    if isinstance(inputs, str):
        inputs = [p.strip() for p in inputs.split(",") if p.strip()]
    try:
        id_params = IdParams(
            line_conf_threshold=float(values.get("line-threshold", 0.8)),
            doc_conf_threshold=float(values.get("doc-threshold", 0.6)),
        )
        keep = values.get("keep-rejected", False)
        ordered = values.get("ordered", True)
        return PipelineConfig(
            inputs=tuple(inputs),
            model=values["model"],
            output=values["output"],
            blocklist=values.get("blocklist") or None,
            id_params=id_params,
            short_line_chars=int(values.get("short-chars", SHORT_LINE_CHARS)),
            workers=int(values.get("workers", 1)),
            keep_rejected=_parse_bool("keep-rejected", keep) if isinstance(keep, str) else bool(keep),
            max_error_rate=float(values.get("max-error-rate", 0.01)),
            ordered=_parse_bool("ordered", ordered) if isinstance(ordered, str) else bool(ordered),
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
