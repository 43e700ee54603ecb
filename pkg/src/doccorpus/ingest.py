"""Streaming readers for WET files and plain-text fixture directories."""

from __future__ import annotations

import gzip
import logging
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Iterator, Optional, Union

from .core import RawRecord

logger = logging.getLogger(__name__)

GZIP_MAGIC = b"\x1f\x8b"

_KEPT_HEADERS = {
    "warc-target-uri": "target_uri",
    "warc-record-id": "record_id",
    "warc-date": "date",
    "content-type": "content_type",
}


class MalformedRecord(Exception):
    pass


@dataclass
class IngestCounts:
    yielded: int = 0
    malformed: int = 0
    skipped_type: int = 0

    @property
    def framed(self) -> int:
        return self.yielded + self.malformed + self.skipped_type


@dataclass(frozen=True)
class WetSource:
    path: Path
    compression: Optional[str] = None  # None: sniff, "none" or "gzip"

    def __post_init__(self) -> None:
        object.__setattr__(self, "path", Path(self.path))


def is_gzip(path: Union[str, os.PathLike]) -> bool:
    with open(path, "rb") as fh:
        return fh.read(2) == GZIP_MAGIC


class WetReader:
    """Iterate the ``conversion`` records of a WARC/1.0-framed WET file.

    Records that are not ``conversion``, have bodies that are not UTF-8, or
    whose framing is broken are skipped; ``counts`` tracks each outcome.
    """

    def __init__(self, source: Union[WetSource, str, os.PathLike]):
        if not isinstance(source, WetSource):
            source = WetSource(Path(source))
        self.source = source
        self.counts = IngestCounts()
        # Opening eagerly makes an unreadable path fail at open time.
        self._fh = self._open()

    def _open(self) -> BinaryIO:
        path = self.source.path
        compression = self.source.compression
        if compression is None:
            compression = "gzip" if is_gzip(path) else "none"
        if compression == "gzip":
            return gzip.open(path, "rb")
        if compression == "none":
            return open(path, "rb")
        raise ValueError(f"unknown compression: {compression!r}")

    def __iter__(self) -> Iterator[RawRecord]:
        try:
            yield from self._records()
        finally:
            self._fh.close()

    def close(self) -> None:
        self._fh.close()

    def _records(self) -> Iterator[RawRecord]:
        fh = self._fh
        pending: Optional[bytes] = None
        while True:
            line = pending if pending is not None else fh.readline()
            pending = None
            if not line:
                return
            if not line.strip():
                continue
            if not line.startswith(b"WARC/"):
                # Garbage between records: skip to the next version line.
                self.counts.malformed += 1
                logger.warning("%s: unexpected data outside a record", self.source.path)
                pending = self._resync()
                continue
            try:
                headers = self._read_headers()
                length = int(headers.get("content-length", ""))
                if length < 0:
                    raise ValueError(length)
            except (MalformedRecord, ValueError):
                self.counts.malformed += 1
                pending = self._resync()
                continue
            payload = fh.read(length)
            if len(payload) < length:
                self.counts.malformed += 1
                logger.warning("%s: truncated record payload", self.source.path)
                return
            if headers.get("warc-type", "").lower() != "conversion":
                self.counts.skipped_type += 1
                continue
            record = self._build(headers, payload)
            if record is None:
                self.counts.malformed += 1
                continue
            self.counts.yielded += 1
            yield record

    def _read_headers(self) -> dict:
        headers = {}
        while True:
            line = self._fh.readline()
            if not line:
                raise MalformedRecord("end of file inside headers")
            if line in (b"\r\n", b"\n"):
                return headers
            name, sep, value = line.decode("utf-8", "replace").partition(":")
            if not sep:
                raise MalformedRecord(f"bad header line {line!r}")
            headers[name.strip().lower()] = value.strip()

    def _resync(self) -> bytes:
        while True:
            line = self._fh.readline()
            if not line or line.startswith(b"WARC/"):
                return line

    def _build(self, headers: dict, payload: bytes) -> Optional[RawRecord]:
        try:
            body = payload.decode("utf-8")
        except UnicodeDecodeError:
            return None
        fields = {attr: headers.get(name, "") for name, attr in _KEPT_HEADERS.items()}
        if not fields["target_uri"]:
            return None
        return RawRecord(body=body, **fields)


def open_wet(source: Union[WetSource, str, os.PathLike]) -> WetReader:
    return WetReader(source)


class FixtureDirReader:
    """One record per ``*.txt`` file of a directory, in filename order."""

    def __init__(self, path: Union[str, os.PathLike]):
        self.path = Path(path)
        if not self.path.is_dir():
            raise NotADirectoryError(str(self.path))
        self.counts = IngestCounts()

    def __iter__(self) -> Iterator[RawRecord]:
        for file in sorted(self.path.glob("*.txt"), key=lambda p: p.name):
            data = file.read_bytes()
            try:
                body = data.decode("utf-8")
            except UnicodeDecodeError:
                self.counts.malformed += 1
                continue
            mtime = datetime.fromtimestamp(file.stat().st_mtime, tz=timezone.utc)
            self.counts.yielded += 1
            yield RawRecord(
                target_uri=f"file:///{file.name}",
                body=body,
                record_id=f"<file:{file.name}>",
                date=mtime.strftime("%Y-%m-%dT%H:%M:%SZ"),
                content_type="text/plain",
            )


def open_fixture_dir(path: Union[str, os.PathLike]) -> FixtureDirReader:
    return FixtureDirReader(path)


def open_source(path: Union[str, os.PathLike]):
    """Reader for a WET file or a fixture directory, chosen by path type."""
    if Path(path).is_dir():
        return open_fixture_dir(path)
    return open_wet(path)


def write_wet_record(fh: BinaryIO, headers: dict, body: bytes) -> None:
    """Append one WARC/1.0 record; ``Content-Length`` is computed here."""
    fh.write(b"WARC/1.0\r\n")
    for name, value in headers.items():
        fh.write(f"{name}: {value}\r\n".encode("utf-8"))
    fh.write(f"Content-Length: {len(body)}\r\n\r\n".encode("ascii"))
    fh.write(body)
    fh.write(b"\r\n\r\n")
