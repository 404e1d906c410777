"""Country partitioning of image-URL metadata, plus snapshot parsing.

Assignment keys on the URL host's top-level domain label, so a host like
linkedin.com never lands in a country bucket and query strings or paths can
never change the outcome. A strict-substring compatibility mode reproduces
the blunter historical rule (any ".xx" occurrence anywhere in the URL), with
its known misassignments such as ".jpg" matching ".jp".
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator
from urllib.parse import urlsplit

import numpy as np

from ..countries import Country, DEFAULT_COUNTRIES, country_for_tld
from ..errors import SnapshotUnreadable
from ..imaging import text_digest


@dataclass(frozen=True)
class MetadataRecord:
    url: str
    caption: str | None = None
    embedding: np.ndarray | None = None
    image_id: str = ""

    def __post_init__(self) -> None:
        if not self.image_id:
            object.__setattr__(self, "image_id", text_digest(self.url))


def assign_country(url: str, *, strict_substring: bool = False) -> Country | None:
    """Country whose ccTLD matches the URL, or None. Total over strings."""
    if not isinstance(url, str) or not url.strip():
        return None
    if strict_substring:
        # Historical rule: first country (registry order) whose ".xx" appears
        # anywhere in the URL. Kept only for compatibility studies.
        lowered = url.lower()
        for c in DEFAULT_COUNTRIES:
            if c.cctld in lowered:
                return c
        return None
    try:
        host = urlsplit(url.strip()).hostname
    except ValueError:
        return None
    if not host:
        return None
    host = host.rstrip(".")
    if not host or "." not in host:
        return None
    tld = host.rsplit(".", 1)[-1]
    if not tld or tld.isdigit():  # IPv4 literals have numeric last labels
        return None
    return country_for_tld(tld)


def _parse_embedding(value) -> np.ndarray | None:
    if value is None or value == "":
        return None
    if isinstance(value, list):
        return np.asarray(value, dtype=np.float64)
    if isinstance(value, str):
        raw = base64.b64decode(value)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)
    raise ValueError(f"unsupported embedding encoding: {type(value).__name__}")


def _iter_jsonl(path: Path) -> Iterator[MetadataRecord]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
                yield MetadataRecord(
                    url=doc["url"],
                    caption=doc.get("caption"),
                    embedding=_parse_embedding(doc.get("embedding")),
                    image_id=doc.get("image_id", ""),
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise SnapshotUnreadable(f"{path}:{lineno}: {exc}") from exc


def _iter_tsv(path: Path) -> Iterator[MetadataRecord]:
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            cols = line.split("\t")
            try:
                yield MetadataRecord(
                    url=cols[0],
                    caption=cols[1] if len(cols) > 1 and cols[1] else None,
                    embedding=_parse_embedding(cols[2]) if len(cols) > 2 else None,
                )
            except (ValueError, TypeError) as exc:
                raise SnapshotUnreadable(f"{path}:{lineno}: {exc}") from exc


def read_snapshot(path: str | Path) -> Iterator[MetadataRecord]:
    """Stream metadata records from a JSON-lines or tab-separated snapshot."""
    p = Path(path)
    if not p.is_file():
        raise SnapshotUnreadable(f"snapshot not found: {p}")
    try:
        first = p.open("r", encoding="utf-8").readline().lstrip()
    except (OSError, UnicodeDecodeError) as exc:
        raise SnapshotUnreadable(f"cannot read {p}: {exc}") from exc
    if first.startswith("{"):
        return _iter_jsonl(p)
    return _iter_tsv(p)
