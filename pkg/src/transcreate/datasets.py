"""Evaluation dataset ingestion: JSON-lines manifests, schema validation, the
three-vote majority filter, and content-hash pinning of referenced images.

Manifest schemas (one JSON object per line):
  concept:     {country, category, concept, wiki_url, image_path, image_sha256, votes}
  application: {kind, image_path, image_sha256, task_title | story_text, license_note}

Image paths are relative to the manifest's directory; each file's sha256 must
match the pinned digest so moved or corrupted files are caught at load time.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .countries import Country, maybe_country
from .errors import ManifestSchemaError, MissingImageFile, WrongVoteCount
from .imaging import decode_image
from .records import ImageRecord

CATEGORIES = (
    "Bird", "Mammal", "Food", "Beverages", "Clothing", "Houses", "Flower",
    "Fruit", "Vegetable", "Agriculture", "Utensil/Tool", "Sport",
    "Celebrations", "Education", "Music", "Visual Arts", "Religion",
)

MAX_CONCEPTS_PER_CELL = 5
VOTES_REQUIRED = 3
APPLICATION_KINDS = ("education", "story")


def majority_filter(votes: list[int]) -> bool:
    """Keep an entry iff at least 2 of its 3 validator votes are positive."""
    if len(votes) != VOTES_REQUIRED:
        raise WrongVoteCount(f"expected {VOTES_REQUIRED} votes, got {len(votes)}")
    if any(v not in (0, 1) for v in votes):
        raise WrongVoteCount(f"votes must be 0 or 1, got {votes}")
    return sum(votes) >= 2


@dataclass(frozen=True)
class ConceptEntry:
    country: Country
    category: str
    concept_name: str
    wiki_url: str
    image: ImageRecord
    votes: tuple[int, ...]


@dataclass(frozen=True)
class ApplicationEntry:
    kind: str  # education | story
    image: ImageRecord
    task_title: str | None = None
    story_text: str | None = None
    license_note: str = ""

    @property
    def task_context(self) -> str:
        """The text handed verbatim to prompt templating."""
        return self.task_title if self.kind == "education" else (self.story_text or "")


@dataclass
class Dataset:
    kind: str  # concept | application
    entries: list
    manifest_digest: str
    filtered_out: int = 0  # concept entries dropped by the majority filter


@dataclass(frozen=True)
class Violation:
    line: int
    field: str
    message: str


@dataclass
class ValidationReport:
    manifest: str
    violations: list[Violation] = field(default_factory=list)
    entries_seen: int = 0
    kind: str = ""
    bad_image_paths: list[str] = field(default_factory=list)  # absent or hash-mismatched

    @property
    def clean(self) -> bool:
        return not self.violations

    def add(self, line: int, field_name: str, message: str) -> None:
        self.violations.append(Violation(line, field_name, message))

    def to_json_dict(self) -> dict:
        return {
            "manifest": self.manifest,
            "kind": self.kind,
            "entries_seen": self.entries_seen,
            "clean": self.clean,
            "violations": [
                {"line": v.line, "field": v.field, "message": v.message}
                for v in self.violations
            ],
        }


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _detect_kind(doc: dict) -> str:
    return "application" if "kind" in doc else "concept"


def _scan_manifest(manifest_path: Path, report: ValidationReport) -> list[tuple[int, dict]]:
    """Parse lines, recording JSON and field-level problems in the report."""
    rows: list[tuple[int, dict]] = []
    base = manifest_path.parent
    kinds_seen: set[str] = set()
    cell_counts: dict[tuple[str, str], int] = {}
    digests_seen: dict[str, int] = {}

    try:
        lines = manifest_path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        report.add(0, "file", f"unreadable manifest: {exc}")
        return rows

    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        report.entries_seen += 1
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            report.add(lineno, "json", f"invalid JSON: {exc}")
            continue
        if not isinstance(doc, dict):
            report.add(lineno, "json", "entry is not an object")
            continue

        kind = _detect_kind(doc)
        kinds_seen.add(kind)
        if len(kinds_seen) > 1:
            report.add(lineno, "kind", "manifest mixes concept and application entries")

        if kind == "concept":
            for name in ("country", "category", "concept", "wiki_url", "image_path", "image_sha256", "votes"):
                if name not in doc:
                    report.add(lineno, name, "missing required field")
            if "country" in doc and maybe_country(str(doc["country"])) is None:
                report.add(lineno, "country", f"unknown country {doc['country']!r}")
            if "category" in doc and doc["category"] not in CATEGORIES:
                report.add(lineno, "category", f"unknown category {doc['category']!r}")
            votes = doc.get("votes")
            if votes is not None and (
                not isinstance(votes, list)
                or len(votes) != VOTES_REQUIRED
                or any(v not in (0, 1) for v in votes)
            ):
                report.add(lineno, "votes", f"votes must be a list of {VOTES_REQUIRED} 0/1 values")
            c = maybe_country(str(doc.get("country", "")))
            if c is not None and doc.get("category") in CATEGORIES:
                cell = (c.iso_code, doc["category"])
                cell_counts[cell] = cell_counts.get(cell, 0) + 1
                if cell_counts[cell] == MAX_CONCEPTS_PER_CELL + 1:
                    report.add(
                        lineno, "concept",
                        f"more than {MAX_CONCEPTS_PER_CELL} concepts for "
                        f"({c.display_name}, {doc['category']})",
                    )
        else:
            if doc.get("kind") not in APPLICATION_KINDS:
                report.add(lineno, "kind", f"kind must be one of {APPLICATION_KINDS}")
            for name in ("image_path", "image_sha256", "license_note"):
                if name not in doc or doc[name] in (None, ""):
                    report.add(lineno, name, "missing required field")
            if doc.get("kind") == "education" and not doc.get("task_title"):
                report.add(lineno, "task_title", "education entries need task_title")
            if doc.get("kind") == "story" and not doc.get("story_text"):
                report.add(lineno, "story_text", "story entries need story_text")

        digest = doc.get("image_sha256")
        if isinstance(digest, str) and digest:
            if digest in digests_seen:
                report.add(lineno, "image_sha256",
                           f"duplicate image digest, first seen on line {digests_seen[digest]}")
            else:
                digests_seen[digest] = lineno
            image_path = doc.get("image_path")
            if isinstance(image_path, str) and image_path:
                full = base / image_path
                if not full.is_file():
                    report.add(lineno, "image_path", f"file not found: {image_path}")
                    report.bad_image_paths.append(image_path)
                elif _sha256_file(full) != digest:
                    report.add(lineno, "image_sha256", f"content hash mismatch for {image_path}")
                    report.bad_image_paths.append(image_path)

        rows.append((lineno, doc))

    if len(kinds_seen) == 1:
        report.kind = kinds_seen.pop()
    elif kinds_seen:
        report.kind = "mixed"
    return rows


def validate_manifest(manifest_path: str | Path) -> ValidationReport:
    """Structural validation; returns a report instead of raising."""
    p = Path(manifest_path)
    report = ValidationReport(manifest=str(p))
    _scan_manifest(p, report)
    return report


def load_dataset(manifest_path: str | Path) -> Dataset:
    """Parse, validate, and materialize a dataset.

    Raises ManifestSchemaError on the first structural violation and
    MissingImageFile when referenced images are absent or fail their pinned
    hash. Concept entries failing the majority filter are excluded (counted in
    Dataset.filtered_out). Entries come back in a stable sorted order.
    """
    p = Path(manifest_path)
    report = ValidationReport(manifest=str(p))
    rows = _scan_manifest(p, report)

    if report.bad_image_paths:
        raise MissingImageFile(sorted(set(report.bad_image_paths)))
    if report.violations:
        first = report.violations[0]
        raise ManifestSchemaError(first.message, line=first.line, field=first.field)

    base = p.parent
    filtered_out = 0
    entries: list = []
    for _lineno, doc in rows:
        image_path = base / doc["image_path"]
        data = image_path.read_bytes()
        decode_image(data)
        if _detect_kind(doc) == "concept":
            votes = tuple(int(v) for v in doc["votes"])
            if not majority_filter(list(votes)):
                filtered_out += 1
                continue
            c = maybe_country(str(doc["country"]))
            assert c is not None  # unknown countries rejected during scan
            entries.append(ConceptEntry(
                country=c,
                category=doc["category"],
                concept_name=doc["concept"],
                wiki_url=doc["wiki_url"],
                image=ImageRecord(
                    image_id=doc["image_sha256"],
                    source_url=doc["wiki_url"],
                    country=c.iso_code,
                    category=doc["category"],
                    path=image_path,
                ),
                votes=votes,
            ))
        else:
            entries.append(ApplicationEntry(
                kind=doc["kind"],
                image=ImageRecord(
                    image_id=doc["image_sha256"],
                    path=image_path,
                ),
                task_title=doc.get("task_title"),
                story_text=doc.get("story_text"),
                license_note=doc["license_note"],
            ))

    kind = "concept" if (entries and isinstance(entries[0], ConceptEntry)) or report.kind == "concept" else "application"
    if kind == "concept":
        entries.sort(key=lambda e: (e.country.iso_code, e.category, e.concept_name))
    else:
        entries.sort(key=lambda e: (e.kind, e.image.image_id))
    return Dataset(
        kind=kind,
        entries=entries,
        manifest_digest=hashlib.sha256(p.read_bytes()).hexdigest(),
        filtered_out=filtered_out,
    )
