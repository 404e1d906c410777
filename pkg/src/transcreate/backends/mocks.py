"""Deterministic mock backends.

Every mock is a pure function of its inputs (plus a fixed seed where noted),
so pipeline runs against mocks are byte-for-byte reproducible. All mocks are
safe for concurrent use; the invocation counter is the only mutable state.
"""

from __future__ import annotations

import hashlib
import threading

import numpy as np
from PIL import Image

from ..countries import Country
from ..errors import BackendUnavailable
from ..imaging import content_digest, decode_image, png_bytes
from .base import (
    Backends,
    CaptionClient,
    CaptionEditClient,
    ImageEditClient,
    ImageEmbedClient,
    ImageGenClient,
    RetryPolicy,
    TextEmbedClient,
)


class CallCounting:
    """Mixin tracking how many times the transport was invoked."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.calls = 0

    def _count(self) -> None:
        with self._lock:
            self.calls += 1


def _hash_rng(*parts: str) -> np.random.Generator:
    seed_bytes = hashlib.sha256("\x1f".join(parts).encode("utf-8")).digest()
    return np.random.Generator(np.random.PCG64(int.from_bytes(seed_bytes[:16], "big")))


class EchoCaptioner(CallCounting, CaptionClient):
    """Returns the image's content-hash id, ignoring the prompt."""

    def run(self, image: bytes, prompt: str) -> str:
        self._count()
        return content_digest(image)


class MappingCaptioner(CallCounting, CaptionClient):
    """Replays fixed captions keyed by image content id; unmapped images fall
    back to the echo behaviour (or raise, if fallback is disabled)."""

    def __init__(self, captions: dict[str, str], fallback_echo: bool = True):
        super().__init__()
        self.captions = dict(captions)
        self.fallback_echo = fallback_echo

    def run(self, image: bytes, prompt: str) -> str:
        self._count()
        image_id = content_digest(image)
        if image_id in self.captions:
            return self.captions[image_id]
        if self.fallback_echo:
            return image_id
        raise BackendUnavailable(f"no canned caption for image {image_id[:12]}")


class IdentityCaptionEditor(CallCounting, CaptionEditClient):
    """Returns the caption unchanged."""

    def run(self, prompt: str, caption: str, country: Country) -> str:
        self._count()
        return caption


class MappingCaptionEditor(CallCounting, CaptionEditClient):
    """Replays fixed edits keyed by (country iso, caption); unmapped inputs get
    a deterministic country tag so batch runs still vary per target."""

    def __init__(self, edits: dict[tuple[str, str], str] | None = None):
        super().__init__()
        self.edits = dict(edits or {})

    def run(self, prompt: str, caption: str, country: Country) -> str:
        self._count()
        key = (country.iso_code, caption)
        if key in self.edits:
            return self.edits[key]
        return f"{caption}, as seen in {country.display_name}"


class WatermarkImageEditor(CallCounting, ImageEditClient):
    """Stamps a small corner block whose colour derives from the instruction
    hash. Canvas size is preserved; identical inputs give identical bytes."""

    def run(self, image: bytes, instruction: str) -> bytes:
        self._count()
        img = decode_image(image).convert("RGB")
        rng = _hash_rng("watermark", instruction, content_digest(image))
        colour = tuple(int(v) for v in rng.integers(0, 256, size=3))
        w, h = img.size
        block_w, block_h = max(1, w // 8), max(1, h // 8)
        stamp = Image.new("RGB", (block_w, block_h), colour)
        img.paste(stamp, (w - block_w, h - block_h))
        return png_bytes(img)


class FlagStripeImageEditor(CallCounting, ImageEditClient):
    """Paints a horizontal stripe derived from the instruction text, a nod to
    how naive editors decorate rather than adapt. Deterministic."""

    def run(self, image: bytes, instruction: str) -> bytes:
        self._count()
        img = decode_image(image).convert("RGB")
        rng = _hash_rng("stripe", instruction)
        colour = tuple(int(v) for v in rng.integers(0, 256, size=3))
        w, h = img.size
        stripe = Image.new("RGB", (w, max(1, h // 6)), colour)
        img.paste(stripe, (0, 0))
        return png_bytes(img)


class NoiseImageGenerator(CallCounting, ImageGenClient):
    """Generates a noise image seeded by (prompt, seed): byte-identical across
    runs for the same inputs."""

    def __init__(self, seed: int = 0, size: tuple[int, int] = (64, 64)):
        super().__init__()
        self.seed = seed
        self.size = size

    def run(self, prompt: str) -> bytes:
        self._count()
        rng = _hash_rng("noise", str(self.seed), prompt)
        w, h = self.size
        pixels = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
        return png_bytes(Image.fromarray(pixels, mode="RGB"))


class HashImageEmbedder(CallCounting, ImageEmbedClient):
    """Embedding drawn from an RNG seeded by the image content hash: identical
    images map to identical vectors, distinct images to distinct ones."""

    def __init__(self, dim: int = 64, salt: str = "image"):
        super().__init__()
        self.dim = dim
        self.salt = salt

    def run(self, image: bytes) -> np.ndarray:
        self._count()
        rng = _hash_rng("embed", self.salt, content_digest(image))
        return rng.standard_normal(self.dim)


class HashTextEmbedder(CallCounting, TextEmbedClient):
    def __init__(self, dim: int = 64, salt: str = "text"):
        super().__init__()
        self.dim = dim
        self.salt = salt

    def run(self, text: str) -> np.ndarray:
        self._count()
        rng = _hash_rng("embed", self.salt, text)
        return rng.standard_normal(self.dim)


class LookupImageEmbedder(CallCounting, ImageEmbedClient):
    """Returns hand-built vectors keyed by image content id (test oracle aid)."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        super().__init__()
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        self.dim = dim

    def run(self, image: bytes) -> np.ndarray:
        self._count()
        return self.vectors[content_digest(image)]


class LookupTextEmbedder(CallCounting, TextEmbedClient):
    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        super().__init__()
        self.vectors = {k: np.asarray(v, dtype=np.float64) for k, v in vectors.items()}
        self.dim = dim

    def run(self, text: str) -> np.ndarray:
        self._count()
        return self.vectors[text]


class Flaky:
    """Wraps a client to fail transiently for the first `failures` calls."""

    def __init__(self, inner, failures: int):
        self.inner = inner
        self.remaining = failures
        self._lock = threading.Lock()

    def __getattr__(self, name):
        return getattr(self.inner, name)

    def run(self, *args, **kwargs):
        with self._lock:
            if self.remaining > 0:
                self.remaining -= 1
                raise BackendUnavailable("simulated transient outage")
        return self.inner.run(*args, **kwargs)


class AlwaysFail(CallCounting):
    """Transport that never succeeds; usable in any role slot."""

    dim = 1

    def run(self, *args, **kwargs):
        self._count()
        raise BackendUnavailable("simulated permanent outage")


def mock_backends(
    *,
    seed: int = 0,
    dim: int = 64,
    captions: dict[str, str] | None = None,
    edits: dict[tuple[str, str], str] | None = None,
) -> Backends:
    """A full deterministic suite: no sleeping between retries, no wall clock,
    so runs are reproducible and fast."""
    return Backends(
        captioner=MappingCaptioner(captions or {}),
        caption_editor=MappingCaptionEditor(edits or {}),
        image_editor=WatermarkImageEditor(),
        image_generator=NoiseImageGenerator(seed=seed),
        layout_embedder=HashImageEmbedder(dim=dim, salt="layout"),
        joint_text_embedder=HashTextEmbedder(dim=dim, salt="joint"),
        joint_image_embedder=HashImageEmbedder(dim=dim, salt="joint"),
        retry=RetryPolicy(base_delay=0.0, sleep=lambda _s: None),
        clock=None,
    )
