"""Remote backends: thin JSON-over-HTTP clients.

Each client posts to a single configured endpoint and reads one field back.
API keys come only from the environment variable named in the config; they
are never read from or written to files. Transport errors and 5xx/429
responses surface as transient BackendUnavailable so the gateway can retry.
"""

from __future__ import annotations

import base64
import os

import httpx
import numpy as np

from ..countries import Country
from ..errors import BackendUnavailable, EmptyResponse, TranscreateError
from .base import (
    CaptionClient,
    CaptionEditClient,
    ImageEditClient,
    ImageEmbedClient,
    ImageGenClient,
    TextEmbedClient,
)


class RemoteClient:
    def __init__(
        self,
        endpoint: str,
        model: str = "",
        api_key_env: str | None = None,
        timeout: float = 60.0,
        max_in_flight: int | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.max_in_flight = max_in_flight
        self._http = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise BackendUnavailable(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post(self, payload: dict) -> dict:
        if self.model:
            payload = {"model": self.model, **payload}
        try:
            resp = self._http.post(self.endpoint, json=payload, headers=self._headers())
        except httpx.TransportError as exc:
            raise BackendUnavailable(f"transport error for {self.endpoint}: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise BackendUnavailable(f"HTTP {resp.status_code} from {self.endpoint}")
        if resp.status_code >= 400:
            raise TranscreateError(f"HTTP {resp.status_code} from {self.endpoint}: {resp.text[:300]}")
        try:
            return resp.json()
        except ValueError as exc:
            raise TranscreateError(f"non-JSON response from {self.endpoint}") from exc

    def _text_field(self, data: dict) -> str:
        text = data.get("text")
        if not isinstance(text, str) or not text.strip():
            raise EmptyResponse(f"no usable text in response from {self.endpoint}")
        return text

    def _image_field(self, data: dict) -> bytes:
        blob = data.get("image_b64")
        if not isinstance(blob, str) or not blob:
            raise EmptyResponse(f"no image payload in response from {self.endpoint}")
        return base64.b64decode(blob)


class RemoteCaptioner(RemoteClient, CaptionClient):
    def run(self, image: bytes, prompt: str) -> str:
        data = self._post({"prompt": prompt, "image_b64": base64.b64encode(image).decode("ascii")})
        return self._text_field(data)


class RemoteCaptionEditor(RemoteClient, CaptionEditClient):
    # The rendered prompt already embeds the caption, so only it is sent.
    def run(self, prompt: str, caption: str, country: Country) -> str:
        data = self._post({"prompt": prompt})
        return self._text_field(data)


class RemoteImageEditor(RemoteClient, ImageEditClient):
    def run(self, image: bytes, instruction: str) -> bytes:
        data = self._post({
            "instruction": instruction,
            "image_b64": base64.b64encode(image).decode("ascii"),
        })
        return self._image_field(data)


class RemoteImageGenerator(RemoteClient, ImageGenClient):
    def run(self, prompt: str) -> bytes:
        data = self._post({"prompt": prompt})
        return self._image_field(data)


class RemoteImageEmbedder(RemoteClient, ImageEmbedClient):
    def __init__(self, *args, dim: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.dim = dim

    def run(self, image: bytes) -> np.ndarray:
        data = self._post({"image_b64": base64.b64encode(image).decode("ascii")})
        return _embedding_field(data, self.endpoint)


class RemoteTextEmbedder(RemoteClient, TextEmbedClient):
    def __init__(self, *args, dim: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.dim = dim

    def run(self, text: str) -> np.ndarray:
        data = self._post({"text": text})
        return _embedding_field(data, self.endpoint)


def _embedding_field(data: dict, endpoint: str) -> np.ndarray:
    emb = data.get("embedding")
    if not isinstance(emb, list) or not emb:
        raise EmptyResponse(f"no embedding in response from {endpoint}")
    return np.asarray(emb, dtype=np.float64)
