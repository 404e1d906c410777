from __future__ import annotations

import base64
import random

import numpy as np
import pytest

from transcreate.countries import country
from transcreate.errors import EmptyIndex, SnapshotUnreadable
from transcreate.records import ImageRecord
from transcreate.retrieval import (
    CountryIndex,
    MetadataRecord,
    assign_country,
    build_index,
    load_index,
    query,
    query_vector,
    read_snapshot,
    save_index,
)


# --- country assignment -----------------------------------------------------

def test_cctld_host_assignment():
    assert assign_country("https://shop.example.jp/a.png") == country("jp")
    assert assign_country("https://www.amazon.com.br/img/x.jpg") == country("br")
    assert assign_country("http://example.co.in/a?b=c") == country("in")
    assert assign_country("https://media.example.ng:8080/x.png") == country("ng")


def test_non_country_hosts_assign_none():
    # host TLD is .com: the ".in" inside the name must not match
    assert assign_country("https://linkedin.com/x.jpg") is None
    assert assign_country("https://example.org/file.jp.png") is None
    assert assign_country("https://青空.example.com/x") is None


def test_unparseable_and_hostless_urls_assign_none():
    assert assign_country("not a url") is None
    assert assign_country("") is None
    assert assign_country("file:///tmp/x.png") is None
    assert assign_country("https://localhost/x.png") is None
    assert assign_country("https://127.0.0.1/x.jp.png") is None


def test_trailing_dot_and_case_are_normalized():
    assert assign_country("https://Example.JP./x.png") == country("jp")


def test_assignment_ignores_path_and_query():
    rng = random.Random(42)
    hosts = [
        "https://a.example.jp", "https://b.example.com", "https://linkedin.com",
        "https://x.co.in", "https://y.example.tr", "https://z.example.net",
    ]
    suffixes = ["/a.png", "/deep/.br/x.jpg", "?country=.us", "/in.jp.ng.png", "#frag.pt"]
    for _ in range(500):
        host = rng.choice(hosts)
        base = assign_country(host)
        assert assign_country(host + rng.choice(suffixes)) == base


def test_strict_substring_mode_reproduces_blunt_rule():
    # ".jp" occurs inside ".jpg": the historical rule misassigns this to Japan
    assert assign_country("https://linkedin.com/x.jpg", strict_substring=True) == country("jp")
    assert assign_country("https://example.com/brochure.pt.html", strict_substring=True) == country("pt")
    assert assign_country("https://plain.example.com/a.html", strict_substring=True) is None


def test_assignment_is_deterministic():
    url = "https://shop.example.jp/a.png"
    assert assign_country(url) == assign_country(url)


# --- index build ------------------------------------------------------------

def _hash_embed(record: MetadataRecord) -> np.ndarray:
    rng = np.random.default_rng(int.from_bytes(record.image_id.encode()[:8], "big"))
    return rng.standard_normal(8)


def test_build_index_keeps_only_target_country(tmp_path):
    urls = [
        "https://a.example.in/1.png",
        "https://b.example.in/2.png",
        "https://c.shop.in/3.png",
        "https://linkedin.com/4.png",
        "https://d.example.jp/5.png",
        "https://e.example.com/6.png",
        "https://f.example.org/7.png",
        "https://g.example.br/8.png",
        "https://h.example.net/9.png",
        "https://i.example.us/10.png",
    ]
    records = [MetadataRecord(url=u) for u in urls]
    index, stats = build_index(records, country("in"), _hash_embed)
    assert len(index) == 3
    assert stats.scanned == 10 and stats.matched == 3
    assert all(rec.country == "in" for rec in index.records)


def test_build_index_deduplicates_by_image_id():
    records = [
        MetadataRecord(url="https://a.example.jp/1.png", image_id="same"),
        MetadataRecord(url="https://b.example.jp/2.png", image_id="same"),
    ]
    index, stats = build_index(records, country("jp"), _hash_embed)
    assert len(index) == 1
    assert stats.deduplicated == 1


def test_build_index_empty_is_valid_but_unqueryable():
    index, _stats = build_index([], country("jp"), _hash_embed)
    assert len(index) == 0
    with pytest.raises(EmptyIndex):
        query_vector(index, np.zeros(0), k=1)


def test_build_index_counts_embedding_failures():
    def failing_embed(record: MetadataRecord) -> np.ndarray:
        if record.url.endswith("bad.png"):
            raise RuntimeError("no embedding for you")
        return _hash_embed(record)

    records = [
        MetadataRecord(url="https://a.example.jp/ok.png"),
        MetadataRecord(url="https://b.example.jp/bad.png"),
    ]
    index, stats = build_index(records, country("jp"), failing_embed)
    assert len(index) == 1
    assert stats.embed_failures == 1 and len(stats.failed_ids) == 1


def test_build_index_vectors_are_unit_norm():
    records = [MetadataRecord(url=f"https://x{i}.example.tr/a.png") for i in range(5)]
    index, _ = build_index(records, country("tr"), _hash_embed)
    norms = np.linalg.norm(index.vectors.astype(np.float64), axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-6)


def test_partition_buckets_are_disjoint_and_cover_cc_urls():
    rng = random.Random(7)
    tlds = ["jp", "br", "in", "ng", "pt", "tr", "us", "com", "org", "net"]
    urls = [f"https://host{i}.example.{rng.choice(tlds)}/img.png" for i in range(300)]
    buckets: dict[str, list[str]] = {}
    for url in urls:
        c = assign_country(url)
        if c is not None:
            buckets.setdefault(c.iso_code, []).append(url)
    assigned = [u for us_ in buckets.values() for u in us_]
    assert len(assigned) == len(set(assigned))  # disjoint
    expected = {u for u in urls if u.rsplit(".", 2)[-2].split("/")[0] in
                {"jp", "br", "in", "ng", "pt", "tr", "us"}}
    assert set(assigned) == expected


# --- query ------------------------------------------------------------------

def _toy_index() -> CountryIndex:
    records = [
        ImageRecord(image_id="a", country="jp"),
        ImageRecord(image_id="b", country="jp"),
        ImageRecord(image_id="c", country="jp"),
    ]
    vectors = np.array([[1.0, 0.0], [0.0, 1.0], [0.6, 0.8]], dtype=np.float32)
    return CountryIndex(country=country("jp"), dim=2, vectors=vectors, records=records)


def test_query_hand_computed_ranking():
    ranked = query_vector(_toy_index(), np.array([1.0, 0.0]), k=2)
    assert [(r.image_id, round(s, 6)) for r, s in ranked] == [("a", 1.0), ("c", 0.6)]


def test_query_k_larger_than_index_returns_all_ranked():
    ranked = query_vector(_toy_index(), np.array([1.0, 0.0]), k=10)
    assert [r.image_id for r, _ in ranked] == ["a", "c", "b"]


def test_query_breaks_ties_by_ascending_image_id():
    records = [ImageRecord(image_id="zzz", country="jp"), ImageRecord(image_id="aaa", country="jp")]
    vectors = np.array([[1.0, 0.0], [1.0, 0.0]], dtype=np.float32)
    index = CountryIndex(country=country("jp"), dim=2, vectors=vectors, records=records)
    ranked = query_vector(index, np.array([1.0, 0.0]), k=2)
    assert [r.image_id for r, _ in ranked] == ["aaa", "zzz"]


def test_query_scores_stay_in_unit_interval():
    index = _toy_index()
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = rng.standard_normal(2)
        v /= np.linalg.norm(v)
        for _, score in query_vector(index, v, k=3):
            assert -1.0 - 1e-9 <= score <= 1.0 + 1e-9


def test_query_via_text_embedder():
    index = _toy_index()
    ranked = query(index, "anything", 1, lambda text: np.array([0.0, 1.0]))
    assert ranked[0][0].image_id == "b"


def test_query_invalid_k():
    with pytest.raises(ValueError):
        query_vector(_toy_index(), np.array([1.0, 0.0]), k=0)


# --- persistence and snapshots ----------------------------------------------

def test_index_round_trip(tmp_path):
    records = [MetadataRecord(url=f"https://x{i}.example.pt/a.png", caption=f"cap {i}") for i in range(4)]
    index, _ = build_index(records, country("pt"), _hash_embed, source_snapshot="digest123")
    save_index(index, tmp_path / "pt")
    loaded = load_index(tmp_path / "pt")
    assert loaded.country == index.country
    assert loaded.dim == index.dim
    assert np.array_equal(loaded.vectors, index.vectors)
    assert [r.image_id for r in loaded.records] == [r.image_id for r in index.records]
    assert loaded.source_snapshot == "digest123"


def test_read_snapshot_jsonl(tmp_path):
    vec = np.array([0.5, 0.5, 0.5], dtype=np.float32)
    lines = [
        '{"url": "https://a.example.jp/x.png", "caption": "hello"}',
        '{"url": "https://b.example.jp/y.png", "embedding": [0.1, 0.2, 0.3]}',
        '{"url": "https://c.example.jp/z.png", "embedding": "%s"}' % base64.b64encode(vec.tobytes()).decode(),
    ]
    path = tmp_path / "snap.jsonl"
    path.write_text("\n".join(lines))
    records = list(read_snapshot(path))
    assert records[0].caption == "hello" and records[0].embedding is None
    assert np.allclose(records[1].embedding, [0.1, 0.2, 0.3])
    assert np.allclose(records[2].embedding, [0.5, 0.5, 0.5])


def test_read_snapshot_tsv(tmp_path):
    path = tmp_path / "snap.tsv"
    path.write_text("https://a.example.br/x.png\ta caption\nhttps://b.example.br/y.png\t\n")
    records = list(read_snapshot(path))
    assert records[0].caption == "a caption"
    assert records[1].caption is None


def test_read_snapshot_missing_file():
    with pytest.raises(SnapshotUnreadable):
        list(read_snapshot("/nonexistent/snapshot.tsv"))


def test_read_snapshot_bad_jsonl(tmp_path):
    path = tmp_path / "snap.jsonl"
    path.write_text('{"caption": "has no url"}\n')
    with pytest.raises(SnapshotUnreadable):
        list(read_snapshot(path))
