"""Exact line deduplication for line-oriented corpus exports."""

from __future__ import annotations

import hashlib
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Union

DIGEST_SIZE = 16


def _digest(line: bytes) -> bytes:
    return hashlib.blake2b(line, digest_size=DIGEST_SIZE).digest()


def _as_bytes(line: Union[str, bytes]) -> bytes:
    return line.encode("utf-8") if isinstance(line, str) else line


def dedup_lines(lines: Iterable[Union[str, bytes]], verify_bytes: bool = False) -> Iterator:
    """Yield each distinct line once, at its first occurrence.

    Lines are compared by a 128-bit digest of their bytes. With
    ``verify_bytes`` the full lines are kept as well, so two different lines
    that share a digest are still both emitted.
    """
    if not verify_bytes:
        seen = set()
        for line in lines:
            key = _digest(_as_bytes(line))
            if key not in seen:
                seen.add(key)
                yield line
        return
    buckets: Dict[bytes, List[bytes]] = {}
    for line in lines:
        raw = _as_bytes(line)
        bucket = buckets.setdefault(_digest(raw), [])
        if raw not in bucket:
            bucket.append(raw)
            yield line


@dataclass
class DedupReport:
    input_lines: int = 0
    kept_lines: int = 0
    removed_lines: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


def dedup_corpus_file(
    in_path: Union[str, os.PathLike],
    out_path: Union[str, os.PathLike],
    verify_bytes: bool = False,
) -> DedupReport:
    """Deduplicate ``in_path`` into ``out_path``; nothing is left behind on failure.

    The line terminator is not part of the comparison, so a final line
    without ``\\n`` equals the same text elsewhere in the file.
    """
    out_path = Path(out_path)
    report = DedupReport()

    def stripped(fh) -> Iterator[bytes]:
        for raw in fh:
            report.input_lines += 1
            yield raw[:-1] if raw.endswith(b"\n") else raw

    fd, tmp = tempfile.mkstemp(dir=out_path.parent or ".", prefix=f".{out_path.name}.", suffix=".tmp")
    try:
        with open(in_path, "rb") as src, os.fdopen(fd, "wb") as dst:
            for line in dedup_lines(stripped(src), verify_bytes=verify_bytes):
                dst.write(line)
                dst.write(b"\n")
                report.kept_lines += 1
        os.replace(tmp, out_path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise
    report.removed_lines = report.input_lines - report.kept_lines
    return report
