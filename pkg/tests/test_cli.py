from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import pytest

from transcreate.cli import main
from transcreate.imaging import solid_png


def _last_json_line(capsys) -> dict:
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


def _write_concept_manifest(directory: Path, n_images: int = 2) -> Path:
    lines = []
    for i in range(n_images):
        data = solid_png(20, 16, (40 * i + 10, 80, 90))
        name = f"img_{i}.png"
        (directory / name).write_bytes(data)
        lines.append(json.dumps({
            "country": "United States",
            "category": "Food",
            "concept": f"dish {i}",
            "wiki_url": f"https://en.wikipedia.org/wiki/Dish_{i}",
            "image_path": name,
            "image_sha256": hashlib.sha256(data).hexdigest(),
            "votes": [1, 1, 1],
        }))
    manifest = directory / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_validate_clean_manifest_exits_zero(tmp_path, capsys):
    manifest = _write_concept_manifest(tmp_path)
    assert main(["validate", "--manifest", str(manifest)]) == 0
    summary = _last_json_line(capsys)
    assert summary["status"] == "ok" and summary["command"] == "validate"


def test_validate_broken_manifest_exits_nonzero(tmp_path, capsys):
    manifest = tmp_path / "manifest.jsonl"
    manifest.write_text(json.dumps({
        "country": "Atlantis", "category": "Food", "concept": "x",
        "wiki_url": "https://example.org", "image_path": "missing.png",
        "image_sha256": "0" * 64, "votes": [1, 1, 1],
    }) + "\n")
    assert main(["validate", "--manifest", str(manifest)]) == 1
    summary = _last_json_line(capsys)
    assert summary["status"] == "violations"


def test_run_dry_run_prints_plan_without_outputs(tmp_path, capsys):
    manifest = _write_concept_manifest(tmp_path, n_images=2)
    out_dir = tmp_path / "out"
    code = main([
        "run", "--manifest", str(manifest), "--out", str(out_dir),
        "--pipelines", "e2e-instruct,cap-edit", "--countries", "jp,br", "--dry-run",
    ])
    assert code == 0
    summary = _last_json_line(capsys)
    assert summary["status"] == "dry-run"
    assert summary["jobs"] == 2 * 2 * 2
    assert summary["plan"]["e2e-instruct/jp"] == 2
    assert not out_dir.exists()


def test_run_twice_with_same_seed_is_byte_identical(tmp_path, capsys):
    manifest = _write_concept_manifest(tmp_path, n_images=2)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        code = main([
            "run", "--manifest", str(manifest), "--out", str(out),
            "--pipelines", "e2e-instruct,cap-edit,cap-gen", "--countries", "jp",
            "--seed", "7",
        ])
        assert code == 0
    capsys.readouterr()
    tree_a, tree_b = _tree_bytes(out_a), _tree_bytes(out_b)
    assert tree_a.keys() == tree_b.keys()
    assert all(tree_a[k] == tree_b[k] for k in tree_a)


def test_run_requires_indices_for_cap_retrieve(tmp_path, capsys):
    manifest = _write_concept_manifest(tmp_path)
    code = main([
        "run", "--manifest", str(manifest), "--out", str(tmp_path / "out"),
        "--pipelines", "cap-retrieve", "--countries", "jp",
    ])
    assert code == 1
    summary = _last_json_line(capsys)
    assert "index" in summary["error"]


def test_index_build_and_cap_retrieve_run(tmp_path, capsys):
    snapshot = tmp_path / "snapshot.tsv"
    snapshot.write_text("".join(
        f"https://host{i}.example.jp/img{i}.png\tcaption {i}\n" for i in range(5)
    ))
    indices_dir = tmp_path / "indices"
    code = main([
        "index", "build", "--snapshot", str(snapshot), "--country", "jp",
        "--out", str(indices_dir / "jp"),
    ])
    assert code == 0
    summary = _last_json_line(capsys)
    assert summary["entries"] == 5

    manifest = _write_concept_manifest(tmp_path)
    code = main([
        "run", "--manifest", str(manifest), "--out", str(tmp_path / "out"),
        "--pipelines", "cap-retrieve", "--countries", "jp",
        "--indices", str(indices_dir),
    ])
    assert code == 0
    summary = _last_json_line(capsys)
    assert summary["completed"] == 2 and summary["failed"] == 0


def test_metrics_on_empty_results_dir(tmp_path, capsys):
    results = tmp_path / "results"
    results.mkdir()
    out_csv = tmp_path / "metrics.csv"
    assert main(["metrics", "--results", str(results), "--out", str(out_csv)]) == 0
    with out_csv.open() as fh:
        rows = list(csv.reader(fh))
    assert rows == [["image_id", "pipeline", "country", "image_similarity",
                     "country_relevance", "relevance_delta"]]


def test_metrics_over_batch_outputs(tmp_path, capsys):
    manifest = _write_concept_manifest(tmp_path, n_images=2)
    out_dir = tmp_path / "out"
    main([
        "run", "--manifest", str(manifest), "--out", str(out_dir),
        "--pipelines", "e2e-instruct,cap-edit", "--countries", "jp",
    ])
    capsys.readouterr()
    out_csv = tmp_path / "metrics.csv"
    assert main(["metrics", "--results", str(out_dir), "--out", str(out_csv)]) == 0
    summary = _last_json_line(capsys)
    assert summary["rows"] == 4
    with out_csv.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    for row in rows:
        assert -1.0 - 1e-6 <= float(row["image_similarity"]) <= 1.0 + 1e-6


def test_eval_report_from_store(tmp_path, capsys):
    from transcreate.evaluation import Rating, RatingsStore, build_instance, record_rating
    from transcreate.evaluation.instances import save_instances
    from transcreate.evaluation.store import SOURCE_SLOT

    inst = build_instance("src", {"e2e-instruct": "d1", "cap-edit": "d2"}, seed=0,
                          country="jp", dataset_kind="concept")
    instances_path = tmp_path / "instances.jsonl"
    save_instances([inst], instances_path)
    store = RatingsStore(tmp_path / "ratings.jsonl")
    record_rating(store, {inst.instance_id: inst},
                  Rating(inst.instance_id, "r1", "C3", SOURCE_SLOT, 2))
    for slot in (1, 2):
        for q, v in (("C0", 5), ("C1", 4), ("C3", 4)):
            record_rating(store, {inst.instance_id: inst},
                          Rating(inst.instance_id, "r1", q, slot, v))
    out_dir = tmp_path / "report"
    code = main([
        "eval", "report", "--store", str(store.path),
        "--instances", str(instances_path), "--out", str(out_dir),
    ])
    assert code == 0
    report = json.loads((out_dir / "report.json").read_text())
    assert report["countries"]["jp"]["pipelines"]["cap-edit"]["success"]["rate"] == 1.0
    assert (out_dir / "plots").is_dir()
    assert list((out_dir / "plots").glob("*.png"))


def test_missing_manifest_is_structured_error(tmp_path, capsys):
    code = main(["validate", "--manifest", str(tmp_path / "nope.jsonl")])
    assert code == 1
    err = capsys.readouterr()
    assert "error" in err.err or err.out
