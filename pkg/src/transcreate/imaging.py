"""Image payload helpers: decoding, hashing, deterministic PNG encoding."""

from __future__ import annotations

import hashlib
import io

from PIL import Image

from .errors import MalformedImage


def content_digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def text_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def decode_image(data: bytes) -> Image.Image:
    """Decode raw bytes into a PIL image, fully loading pixel data."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except Exception as exc:
        raise MalformedImage(f"undecodable image payload: {exc}") from exc
    return img


def image_size(data: bytes) -> tuple[int, int]:
    return decode_image(data).size


def png_bytes(img: Image.Image) -> bytes:
    """Encode to PNG. PIL's PNG writer embeds no timestamps, so the bytes are
    a pure function of the pixel data."""
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def solid_png(width: int, height: int, rgb: tuple[int, int, int]) -> bytes:
    """Tiny synthetic image, mainly for fixtures and demos."""
    return png_bytes(Image.new("RGB", (width, height), rgb))
