from __future__ import annotations

from pathlib import Path

import pytest

from helpers import RULES, UT1_ROOT, mini_shard_records, write_wet


@pytest.fixture
def rules_path() -> Path:
    return RULES


@pytest.fixture
def ut1_root() -> Path:
    return UT1_ROOT


@pytest.fixture
def mini_wet(tmp_path) -> Path:
    return write_wet(tmp_path / "mini.warc.wet", mini_shard_records())


@pytest.fixture(scope="session")
def tiny_fasttext_model(tmp_path_factory):
    fasttext = pytest.importorskip("fasttext")
    import random

    rng = random.Random(0)
    root = tmp_path_factory.mktemp("ft")
    train = root / "train.txt"
    with open(train, "w") as fh:
        for _ in range(300):
            for label, words in (("aa", ["alpha", "apple", "avocado"]), ("bb", ["bravo", "banana", "berry"])):
                fh.write(f"__label__{label} " + " ".join(rng.choice(words) for _ in range(8)) + "\n")
    model = fasttext.train_supervised(str(train), epoch=20, dim=10, minCount=1, thread=1, verbose=0)
    model.save_model(str(root / "tiny.bin"))
    return root / "tiny.bin"


_criteria: dict = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call" and not (call.when == "setup" and call.excinfo):
        return
    number, title = marker.args
    passed = call.excinfo is None
    previous = _criteria.get(number, (title, True))
    _criteria[number] = (title, previous[1] and passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, passed = _criteria[number]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  AC{number:<2} {title}")
