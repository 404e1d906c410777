"""Per-country embedding index: build from metadata snapshots, exact cosine
search, flat-file persistence.

All stored vectors are unit length, so cosine similarity is a plain dot
product. Search is an exact full scan — at the scale these indices see
(snapshot subsets, not the full source corpus) that is both the simplest and
the reference behaviour any approximate structure would have to match.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from ..countries import Country, country
from ..errors import EmptyIndex, TranscreateError
from ..records import ImageRecord
from .partition import MetadataRecord, assign_country


@dataclass
class BuildStats:
    scanned: int = 0
    matched: int = 0
    deduplicated: int = 0
    embedded: int = 0
    embed_failures: int = 0
    failed_ids: list[str] = field(default_factory=list)


@dataclass
class CountryIndex:
    country: Country
    dim: int
    vectors: np.ndarray  # (n, dim) float32, unit rows
    records: list[ImageRecord]
    built_at: str = ""
    source_snapshot: str = ""

    def __len__(self) -> int:
        return len(self.records)

    @property
    def entries(self) -> list[tuple[np.ndarray, ImageRecord]]:
        return [(self.vectors[i], self.records[i]) for i in range(len(self.records))]


def _unit(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("zero or non-finite vector")
    return v / norm


def build_index(
    records: Iterable[MetadataRecord],
    target: Country,
    embedder: Callable[[MetadataRecord], np.ndarray] | None = None,
    *,
    strict_substring: bool = False,
    source_snapshot: str = "",
) -> tuple[CountryIndex, BuildStats]:
    """Index exactly the records whose URL maps to `target`.

    Records are deduplicated by image_id (first occurrence wins). Records
    without a stored embedding are embedded via `embedder`; per-record
    embedding failures are counted and the record skipped.
    """
    stats = BuildStats()
    seen: set[str] = set()
    vectors: list[np.ndarray] = []
    kept: list[ImageRecord] = []
    dim: int | None = None

    for rec in records:
        stats.scanned += 1
        assigned = assign_country(rec.url, strict_substring=strict_substring)
        if assigned != target:
            continue
        stats.matched += 1
        if rec.image_id in seen:
            stats.deduplicated += 1
            continue
        seen.add(rec.image_id)

        try:
            if rec.embedding is not None:
                vec = _unit(rec.embedding)
            else:
                if embedder is None:
                    raise ValueError("record lacks an embedding and no embedder was supplied")
                vec = _unit(embedder(rec))
                stats.embedded += 1
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(f"dimension mismatch: expected {dim}, got {vec.shape[0]}")
        except Exception:
            stats.embed_failures += 1
            stats.failed_ids.append(rec.image_id)
            seen.discard(rec.image_id)
            continue

        vectors.append(vec.astype(np.float32))
        kept.append(ImageRecord(
            image_id=rec.image_id,
            source_url=rec.url,
            country=target.iso_code,
            caption=rec.caption,
        ))

    matrix = np.vstack(vectors) if vectors else np.zeros((0, dim or 0), dtype=np.float32)
    index = CountryIndex(
        country=target,
        dim=dim or 0,
        vectors=matrix,
        records=kept,
        built_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        source_snapshot=source_snapshot,
    )
    return index, stats


def query_vector(index: CountryIndex, vector: np.ndarray, k: int) -> list[tuple[ImageRecord, float]]:
    """Top-min(k, n) entries by descending dot product; ties break by ascending
    image_id. Exact full scan."""
    if len(index) == 0:
        raise EmptyIndex(f"index for {index.country.display_name} has no entries")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    q = np.asarray(vector, dtype=np.float64).reshape(-1)
    if q.shape[0] != index.dim:
        raise TranscreateError(f"query dimension {q.shape[0]} != index dimension {index.dim}")
    scores = index.vectors.astype(np.float64) @ q
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.records[i].image_id))
    top = order[: min(k, len(index))]
    return [(index.records[i], float(scores[i])) for i in top]


def query(
    index: CountryIndex,
    text: str,
    k: int,
    embed_text: Callable[[str], np.ndarray],
) -> list[tuple[ImageRecord, float]]:
    """Embed the query text and rank index entries against it."""
    return query_vector(index, embed_text(text), k)


# ---------------------------------------------------------------------------
# persistence: index.meta.json + vectors.f32 + records.jsonl


def save_index(index: CountryIndex, directory: str | Path) -> Path:
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "country": index.country.iso_code,
        "dim": index.dim,
        "count": len(index),
        "built_at": index.built_at,
        "source_snapshot": index.source_snapshot,
    }
    (out / "index.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True), encoding="utf-8")
    (out / "vectors.f32").write_bytes(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
    with (out / "records.jsonl").open("w", encoding="utf-8") as fh:
        for rec in index.records:
            fh.write(json.dumps(rec.to_json_dict(), sort_keys=True) + "\n")
    return out


def load_index(directory: str | Path) -> CountryIndex:
    src = Path(directory)
    meta = json.loads((src / "index.meta.json").read_text(encoding="utf-8"))
    dim = int(meta["dim"])
    count = int(meta["count"])
    raw = (src / "vectors.f32").read_bytes()
    vectors = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy() if count else np.zeros((0, dim), dtype=np.float32)
    records = []
    with (src / "records.jsonl").open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(ImageRecord.from_json_dict(json.loads(line)))
    if len(records) != count:
        raise TranscreateError(f"index {src}: record count {len(records)} != meta count {count}")
    return CountryIndex(
        country=country(meta["country"]),
        dim=dim,
        vectors=vectors,
        records=records,
        built_at=meta.get("built_at", ""),
        source_snapshot=meta.get("source_snapshot", ""),
    )
