"""ImageRecord: an image plus identity, source URL, and country/category labels."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import TranscreateError
from .imaging import content_digest


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    source_url: str = ""
    country: str | None = None  # iso code of the assigned country, if any
    category: str | None = None
    caption: str | None = None
    path: Path | None = None
    payload: bytes | None = field(default=None, repr=False)

    @classmethod
    def from_bytes(cls, data: bytes, **labels) -> "ImageRecord":
        return cls(image_id=content_digest(data), payload=data, **labels)

    @classmethod
    def from_file(cls, path: str | Path, **labels) -> "ImageRecord":
        p = Path(path)
        data = p.read_bytes()
        return cls(image_id=content_digest(data), path=p, payload=data, **labels)

    @property
    def has_pixels(self) -> bool:
        return self.payload is not None or self.path is not None

    def load_bytes(self) -> bytes:
        """Return the raw image bytes, reading from disk if needed."""
        if self.payload is not None:
            return self.payload
        if self.path is not None:
            return Path(self.path).read_bytes()
        raise TranscreateError(f"record {self.image_id} has no local image payload")

    def to_json_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "source_url": self.source_url,
            "country": self.country,
            "category": self.category,
            "caption": self.caption,
            "path": str(self.path) if self.path is not None else None,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "ImageRecord":
        return cls(
            image_id=d["image_id"],
            source_url=d.get("source_url", ""),
            country=d.get("country"),
            category=d.get("category"),
            caption=d.get("caption"),
            path=Path(d["path"]) if d.get("path") else None,
        )
