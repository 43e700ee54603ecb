"""Fixture builders shared by the tests."""

from __future__ import annotations

import gzip
from pathlib import Path

from doccorpus.ingest import write_wet_record

DATA = Path(__file__).parent / "data"
RULES = DATA / "stub_rules.tsv"
UT1_ROOT = DATA / "ut1"


def long_line(word: str, chars: int = 120) -> str:
    """A line of at least ``chars`` characters built from ``word``."""
    text = ""
    while len(text) < chars:
        text += word + " "
    return text.rstrip()


LOREM = long_line("Lorem Ipsum Dolor Sit Amet consectetur adipiscing elit", 110)

# The header/footer example: 4 short head lines, 4 long body lines, 3 short tail lines.
MENU_DOCUMENT = "\n".join(
    ["Home", "Login", "Sign Up", "Welcome to my Website"]
    + [LOREM] * 4
    + ["Copyright Myself", "Legal", "Contact"]
)


def wet_headers(uri: str, n: int, warc_type: str = "conversion") -> dict:
    return {
        "WARC-Type": warc_type,
        "WARC-Target-URI": uri,
        "WARC-Date": "2021-11-27T00:00:00Z",
        "WARC-Record-ID": f"<urn:uuid:00000000-0000-0000-0000-{n:012d}>",
        "Content-Type": "text/plain",
    }


def write_wet(path: Path, records, compress: bool = False, warcinfo: bool = True) -> Path:
    """Write ``(uri, body)`` pairs as WET conversion records."""
    opener = gzip.open if compress else open
    with opener(path, "wb") as fh:
        if warcinfo:
            info = {"WARC-Type": "warcinfo", "WARC-Date": "2021-11-27T00:00:00Z",
                    "WARC-Record-ID": "<urn:uuid:info>", "Content-Type": "application/warc-fields"}
            write_wet_record(fh, info, b"software: test\r\n")
        for n, (uri, body) in enumerate(records):
            payload = body if isinstance(body, bytes) else body.encode("utf-8")
            write_wet_record(fh, wet_headers(uri, n), payload)
    return path


def mini_shard_records():
    """Six records: two ``aa``, one ``bb``, one multilingual, two rejected."""
    alpha = long_line("alpha")
    bravo = long_line("bravo")
    charlie = long_line("charlie")
    unknown = long_line("zulu")
    return [
        ("http://alpha.example/one", "\n".join([alpha, "short alpha", alpha, alpha])),
        ("http://alpha.example/two", "\n".join(["Menu", "Login", alpha, alpha, alpha, "Legal"])),
        ("http://m.example-adult.com/page", "\n".join([bravo] * 6)),
        ("http://translate.example/", "\n".join([alpha, bravo, charlie, alpha, bravo, charlie])),
        ("http://menu.example/", "\n".join(["short"] * 10)),
        ("http://weak.example/", "\n".join([alpha, unknown, unknown, unknown])),
    ]


def doc_from_triples(triples, headers=None):
    """Document whose lines are ``(label, confidence, byte_size)`` triples."""
    from doccorpus.core import Document, Line, LineIdentification

    lines = [Line(i, "x" * size) for i, (_, _, size) in enumerate(triples)]
    ids = [
        LineIdentification.unidentified() if label is None else LineIdentification(label, conf)
        for label, conf, _ in triples
    ]
    return Document(lines, headers=headers or {}, line_ids=ids)


def brute_aggregate(triples):
    """Exact rational evaluation of sizes, weighted confidences and proportions."""
    from fractions import Fraction

    total = sum(size for _, _, size in triples)
    out = {}
    for label in {t[0] for t in triples}:
        members = [t for t in triples if t[0] == label]
        size = sum(s for _, _, s in members)
        weighted = sum(Fraction(s) * Fraction(1.0 if label is None else c) for _, c, s in members)
        out[label] = (size, weighted / total, Fraction(size, total))
    return out
