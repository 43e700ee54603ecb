import json
from collections import Counter

import pytest

from doccorpus.annotate import load_blocklist
from doccorpus.core import Annotation, RawRecord, Rejected
from doccorpus.langid import RuleClassifier, aggregate, multilingual_test
from doccorpus.pipeline import (
    ConfigError,
    PipelineConfig,
    build_config,
    process_record,
    read_config_file,
    run,
    serialize_document,
)

from helpers import LOREM, MENU_DOCUMENT, RULES, UT1_ROOT, long_line, mini_shard_records, write_wet


@pytest.fixture
def classifier():
    return RuleClassifier.from_tsv(RULES)


@pytest.fixture
def blocklist():
    return load_blocklist(UT1_ROOT)


def config_for(tmp_path, inputs, **kw):
    return PipelineConfig(inputs=inputs, model=RULES, output=tmp_path / "out", blocklist=UT1_ROOT, **kw)


def read_out(out):
    return {p.name: p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


def test_menu_record_routes_to_its_language(tmp_path, classifier, blocklist):
    record = RawRecord("http://site.example/", MENU_DOCUMENT)
    bucket, doc = process_record(record, classifier, blocklist, config_for(tmp_path, []))
    assert bucket == "la"
    assert [l.text for l in doc.lines] == [LOREM] * 4
    assert doc.identification.confidence == pytest.approx(0.97)
    assert doc.annotations == {Annotation.TINY}


def test_short_record_rejected(tmp_path, classifier, blocklist):
    record = RawRecord("http://x/", "\n".join(["menu"] * 10))
    assert process_record(record, classifier, blocklist, config_for(tmp_path, [])) == Rejected(
        "empty_after_strip", "filter"
    )


def test_balanced_record_is_multilingual(tmp_path, classifier, blocklist):
    # Five lines, three languages with equal byte shares.
    lines = [long_line("alpha", 120), long_line("bravo", 120), long_line("charlie", 240),
             long_line("alpha", 120), long_line("bravo", 120)]
    sizes = Counter()
    for word, line in zip(["a", "b", "c", "a", "b"], lines):
        sizes[word] += len(line)
    assert max(sizes.values()) * 3 <= min(sizes.values()) * 4
    body = "\n".join(lines)
    bucket, doc = process_record(RawRecord("http://t/", body), classifier, blocklist, config_for(tmp_path, []))
    assert bucket == "multi"
    # Cross-check with the multilingual test run directly.
    assert multilingual_test(doc, aggregate(doc)).languages == doc.identification.languages
    assert set(doc.identification.languages) == {"aa", "bb", "cc"}


def test_serialized_schema(tmp_path, classifier, blocklist):
    body = "\n".join([long_line("alpha")] * 3 + ["short line", long_line("alpha")])
    _, doc = process_record(RawRecord("http://m.example-adult.com/", body, "<id>", "2021", "text/plain"),
                            classifier, blocklist, config_for(tmp_path, []))
    data = serialize_document(doc)
    assert data["content"] == body
    assert data["warc_headers"] == {
        "warc-target-uri": "http://m.example-adult.com/", "warc-record-id": "<id>",
        "warc-date": "2021", "content-type": "text/plain",
    }
    meta = data["metadata"]
    assert meta["identification"]["label"] == "aa"
    assert meta["annotation"] == ["tiny", "adult"]
    ids = meta["sentence_identifications"]
    assert len(ids) == 5 and ids[3] is None
    assert ids[0] == {"label": "aa", "prob": 0.95}


def test_clean_document_has_null_annotation(tmp_path, classifier):
    body = "\n".join([long_line("alpha")] * 8)
    _, doc = process_record(RawRecord("http://a/", body), classifier, None, config_for(tmp_path, []))
    assert serialize_document(doc)["metadata"]["annotation"] is None


def test_mini_shard_report(tmp_path, mini_wet):
    report = run(config_for(tmp_path, [mini_wet]))
    assert report.documents_out == {"aa": 2, "bb": 1}
    assert report.multilingual_documents_out == 1
    assert report.rejected_by_filter == {"empty_after_strip": 1}
    assert report.rejected_by_identification == {"low_confidence": 1}
    assert report.records_in == 6 and report.skipped_non_conversion == 1
    assert report.accounted == report.records_in
    out = tmp_path / "out"
    assert sorted(p.name for p in out.iterdir()) == ["aa_meta.jsonl", "bb_meta.jsonl", "multi_meta.jsonl", "report.json"]
    bb = json.loads((out / "bb_meta.jsonl").read_text())
    assert "adult" in bb["metadata"]["annotation"]
    multi = json.loads((out / "multi_meta.jsonl").read_text())
    languages = multi["metadata"]["identification"]["languages"]
    assert {e["label"] for e in languages} == {"aa", "bb", "cc"}
    # Equal byte shares, so the order falls back to confidence: aa 0.95, cc 0.92, bb 0.9.
    assert [e["label"] for e in languages] == ["aa", "cc", "bb"]
    assert multi["metadata"]["identification"]["prob"] == pytest.approx(sum(e["prob"] for e in languages))


def test_output_is_contiguous_slice_of_input(tmp_path, mini_wet):
    run(config_for(tmp_path, [mini_wet]))
    bodies = dict(mini_shard_records())
    for path in (tmp_path / "out").glob("*_meta.jsonl"):
        for raw in path.read_text().splitlines():
            rec = json.loads(raw)
            assert rec["content"] in bodies[rec["warc_headers"]["warc-target-uri"]]


def test_empty_input(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    report = run(config_for(tmp_path, [empty]))
    assert report.records_in == 0 and report.accounted == 0
    assert report.documents_out == {} and report.multilingual_documents_out == 0


def test_keep_rejected_sidecar(tmp_path, mini_wet):
    run(config_for(tmp_path, [mini_wet], keep_rejected=True))
    rows = [json.loads(l) for l in (tmp_path / "out" / "rejected" / "rejected.jsonl").read_text().splitlines()]
    assert sorted(r["reason"] for r in rows) == ["empty_after_strip", "low_confidence"]


def test_malformed_records_are_accounted(tmp_path):
    wet = write_wet(tmp_path / "m.wet", [("http://a/", "\n".join([long_line("alpha")] * 6)),
                                         ("http://b/", b"\xff\xfe")])
    report = run(config_for(tmp_path, [wet]))
    assert report.malformed == 1 and report.records_in == 2
    assert report.accounted == report.records_in
    assert report.error_rate == 0.5


def test_fixture_dir_input(tmp_path):
    src = tmp_path / "docs"
    src.mkdir()
    (src / "a.txt").write_text(MENU_DOCUMENT)
    report = run(config_for(tmp_path, [src]))
    assert report.documents_out == {"la": 1}


def test_multiple_workers_same_documents(tmp_path, mini_wet):
    one = run(PipelineConfig([mini_wet] * 5, RULES, tmp_path / "one", UT1_ROOT, workers=1))
    many = run(PipelineConfig([mini_wet] * 5, RULES, tmp_path / "many", UT1_ROOT, workers=3, ordered=False))
    assert one.to_dict() == many.to_dict()
    for name in ("aa_meta.jsonl", "bb_meta.jsonl", "multi_meta.jsonl"):
        a = Counter((tmp_path / "one" / name).read_text().splitlines())
        b = Counter((tmp_path / "many" / name).read_text().splitlines())
        assert a == b


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        config_for(tmp_path, [tmp_path / "nope.wet"]).validate()
    with pytest.raises(ConfigError):
        PipelineConfig([], RULES, tmp_path, workers=0).validate()
    with pytest.raises(ConfigError):
        PipelineConfig([], tmp_path / "missing.bin", tmp_path).validate()


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.conf"
    cfg.write_text(
        "# comment\ninput = a.wet, b.wet\nmodel = m.tsv\noutput = out\n"
        "workers = 4\nfilter.short_line_chars = 80\nkeep_rejected = yes\n"
    )
    values = read_config_file(cfg)
    config = build_config(values)
    assert config.inputs == (type(config.model)("a.wet"), type(config.model)("b.wet"))
    assert (config.workers, config.short_line_chars, config.keep_rejected) == (4, 80, True)
    values["workers"] = 2
    values["doc-threshold"] = 0.7
    config = build_config(values)
    assert config.workers == 2 and config.id_params.doc_conf_threshold == 0.7


def test_config_file_errors(tmp_path):
    bad = tmp_path / "bad.conf"
    bad.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        read_config_file(bad)
    with pytest.raises(ConfigError):
        build_config({"model": "m"})
    with pytest.raises(ConfigError):
        build_config({"input": "a", "model": "m", "output": "o", "doc-threshold": "2"})


def test_unwritable_output_is_fatal(tmp_path, mini_wet):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ConfigError):
        run(PipelineConfig([mini_wet], RULES, blocker / "sub"))


def test_pipeline_with_fasttext_model(tmp_path, tiny_fasttext_model):
    body = "\n".join([long_line("alpha apple avocado")] * 6)
    wet = write_wet(tmp_path / "ft.wet", [("http://a/", body)])
    report = run(PipelineConfig([wet], tiny_fasttext_model, tmp_path / "out", workers=2))
    assert report.documents_out == {"aa": 1}
