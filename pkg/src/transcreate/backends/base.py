"""Backend gateway: role interfaces, retry with backoff, provenance recording.

Clients are thin transports (mock or remote). The gateway owns the contracts:
it validates inputs, retries transient failures, enforces per-client in-flight
limits, normalizes embeddings to unit length, and appends one provenance call
entry per attempt to the job's trace.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..countries import Country
from ..errors import BackendUnavailable, EmptyResponse, MalformedImage
from ..imaging import content_digest, decode_image, text_digest
from ..prompts import REALISM_SUFFIX, PromptTemplate, render_prompt
from ..provenance import BackendCall, Trace
from ..records import ImageRecord

logger = logging.getLogger(__name__)

DEFAULT_MAX_IN_FLIGHT = 4


class Role(str, enum.Enum):
    CAPTIONER = "captioner"
    CAPTION_EDITOR = "caption_editor"
    IMAGE_EDITOR = "image_editor"
    IMAGE_GENERATOR = "image_generator"
    LAYOUT_EMBEDDER = "layout_embedder"
    JOINT_TEXT_EMBEDDER = "joint_text_embedder"
    JOINT_IMAGE_EMBEDDER = "joint_image_embedder"


# Transport interfaces. Remote implementations use the fully rendered prompt;
# mocks may key off the structured arguments instead.


class CaptionClient:
    def run(self, image: bytes, prompt: str) -> str:
        raise NotImplementedError


class CaptionEditClient:
    def run(self, prompt: str, caption: str, country: Country) -> str:
        raise NotImplementedError


class ImageEditClient:
    def run(self, image: bytes, instruction: str) -> bytes:
        raise NotImplementedError


class ImageGenClient:
    def run(self, prompt: str) -> bytes:
        raise NotImplementedError


class ImageEmbedClient:
    dim: int

    def run(self, image: bytes) -> np.ndarray:
        raise NotImplementedError


class TextEmbedClient:
    dim: int

    def run(self, text: str) -> np.ndarray:
        raise NotImplementedError


@dataclass
class RetryPolicy:
    """Transient failures are retried with exponential backoff: delays of
    base_delay * 2**n between attempts."""

    max_attempts: int = 3
    base_delay: float = 1.0
    sleep: Callable[[float], None] = time.sleep


def _digest_parts(*parts: bytes | str) -> str:
    h = hashlib.sha256()
    for part in parts:
        if isinstance(part, str):
            part = part.encode("utf-8")
        h.update(len(part).to_bytes(8, "big"))
        h.update(part)
    return h.hexdigest()


def _vector_digest(vec: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(vec, dtype=np.float64).tobytes()).hexdigest()


class _Slot:
    """One configured role: the client plus its in-flight limiter."""

    def __init__(self, client, max_in_flight: int = DEFAULT_MAX_IN_FLIGHT):
        self.client = client
        self.limiter = threading.BoundedSemaphore(max_in_flight)


@dataclass
class Backends:
    """Gateway over the seven model roles.

    `clock` measures wall time per call; pass None for fully deterministic
    provenance (wall_time recorded as 0.0), which mock configurations use so
    repeated runs produce byte-identical traces.
    """

    captioner: CaptionClient | None = None
    caption_editor: CaptionEditClient | None = None
    image_editor: ImageEditClient | None = None
    image_generator: ImageGenClient | None = None
    layout_embedder: ImageEmbedClient | None = None
    joint_text_embedder: TextEmbedClient | None = None
    joint_image_embedder: ImageEmbedClient | None = None
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    clock: Callable[[], float] | None = time.perf_counter
    max_in_flight: int = DEFAULT_MAX_IN_FLIGHT

    def __post_init__(self) -> None:
        self._slots: dict[Role, _Slot] = {}
        for role, client in (
            (Role.CAPTIONER, self.captioner),
            (Role.CAPTION_EDITOR, self.caption_editor),
            (Role.IMAGE_EDITOR, self.image_editor),
            (Role.IMAGE_GENERATOR, self.image_generator),
            (Role.LAYOUT_EMBEDDER, self.layout_embedder),
            (Role.JOINT_TEXT_EMBEDDER, self.joint_text_embedder),
            (Role.JOINT_IMAGE_EMBEDDER, self.joint_image_embedder),
        ):
            if client is not None:
                limit = getattr(client, "max_in_flight", None) or self.max_in_flight
                self._slots[role] = _Slot(client, limit)

    # ------------------------------------------------------------------
    # core dispatch

    def _slot(self, role: Role) -> _Slot:
        slot = self._slots.get(role)
        if slot is None:
            raise BackendUnavailable(f"no backend configured for role {role.value!r}")
        return slot

    def _dispatch(self, role: Role, input_digest: str, call, digest_output, trace: Trace | None):
        """Run one backend call with retry; record every attempt."""
        slot = self._slot(role)
        attempt = 1
        while True:
            start = self.clock() if self.clock is not None else 0.0
            try:
                with slot.limiter:
                    output = call(slot.client)
            except BackendUnavailable as exc:
                elapsed = (self.clock() - start) if self.clock is not None else 0.0
                if trace is not None:
                    trace.record(BackendCall(role.value, input_digest, "", max(elapsed, 0.0), attempt))
                if attempt >= self.retry.max_attempts:
                    raise
                delay = self.retry.base_delay * (2 ** (attempt - 1))
                logger.warning("%s unavailable (attempt %d/%d): %s; retrying in %.1fs",
                               role.value, attempt, self.retry.max_attempts, exc, delay)
                if delay > 0:
                    self.retry.sleep(delay)
                attempt += 1
                continue
            elapsed = (self.clock() - start) if self.clock is not None else 0.0
            if trace is not None:
                trace.record(BackendCall(role.value, input_digest, digest_output(output), max(elapsed, 0.0), attempt))
            return output

    # ------------------------------------------------------------------
    # operations

    def caption(self, image: ImageRecord, prompt: str, trace: Trace | None = None) -> str:
        """Caption an image with the given captioner prompt."""
        data = image.load_bytes()
        decode_image(data)
        digest = _digest_parts(data, prompt)
        text = self._dispatch(
            Role.CAPTIONER, digest,
            lambda c: c.run(data, prompt),
            lambda out: text_digest(out),
            trace,
        )
        if not text or not text.strip():
            raise EmptyResponse("captioner returned empty text")
        return text.strip()

    def edit_caption(
        self,
        caption: str,
        country: Country,
        template: PromptTemplate,
        trace: Trace | None = None,
        task: str | None = None,
    ) -> str:
        """Rewrite a caption for cultural relevance to the target country."""
        if not caption or not caption.strip():
            raise ValueError("caption must be non-empty")
        prompt = render_prompt(template, country=country, task=task, input_text=caption)
        digest = text_digest(prompt)
        edited = self._dispatch(
            Role.CAPTION_EDITOR, digest,
            lambda c: c.run(prompt, caption, country),
            lambda out: text_digest(out),
            trace,
        )
        if not edited or not edited.strip():
            raise EmptyResponse("caption editor returned whitespace")
        return edited.strip()

    def edit_image(self, image: ImageRecord, instruction: str, trace: Trace | None = None) -> bytes:
        """Apply a natural-language edit; output keeps the input canvas size."""
        if not instruction:
            raise ValueError("instruction must be non-empty")
        data = image.load_bytes()
        size = decode_image(data).size
        digest = _digest_parts(data, instruction)
        out = self._dispatch(
            Role.IMAGE_EDITOR, digest,
            lambda c: c.run(data, instruction),
            lambda o: content_digest(o),
            trace,
        )
        out_size = decode_image(out).size
        if out_size != size:
            raise MalformedImage(f"editor changed canvas size {size} -> {out_size}")
        return out

    def generate_image(self, prompt: str, trace: Trace | None = None) -> bytes:
        """Generate an image; the realism suffix is appended before dispatch."""
        if not prompt:
            raise ValueError("prompt must be non-empty")
        dispatched = f"{prompt}, {REALISM_SUFFIX}"
        digest = text_digest(dispatched)
        out = self._dispatch(
            Role.IMAGE_GENERATOR, digest,
            lambda c: c.run(dispatched),
            lambda o: content_digest(o),
            trace,
        )
        decode_image(out)
        return out

    def embed_image(self, image: bytes | ImageRecord, role: Role, trace: Trace | None = None) -> np.ndarray:
        """Unit-normalized embedding of an image under the given embedder role."""
        if role not in (Role.LAYOUT_EMBEDDER, Role.JOINT_IMAGE_EMBEDDER):
            raise ValueError(f"embed_image expects an image-embedder role, got {role.value}")
        data = image.load_bytes() if isinstance(image, ImageRecord) else image
        decode_image(data)
        digest = content_digest(data)
        vec = self._dispatch(
            role, digest,
            lambda c: c.run(data),
            _vector_digest,
            trace,
        )
        return _normalize(vec, role)

    def embed_text(self, text: str, role: Role = Role.JOINT_TEXT_EMBEDDER, trace: Trace | None = None) -> np.ndarray:
        """Unit-normalized embedding of a text string."""
        if role is not Role.JOINT_TEXT_EMBEDDER:
            raise ValueError(f"embed_text expects the joint text embedder role, got {role.value}")
        if not text:
            raise ValueError("text must be non-empty")
        digest = text_digest(text)
        vec = self._dispatch(
            role, digest,
            lambda c: c.run(text),
            _vector_digest,
            trace,
        )
        return _normalize(vec, role)


def _normalize(vec: np.ndarray, role: Role) -> np.ndarray:
    v = np.asarray(vec, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(v))
    if norm == 0.0 or not np.isfinite(norm):
        raise EmptyResponse(f"{role.value} returned a zero or non-finite vector")
    return v / norm
