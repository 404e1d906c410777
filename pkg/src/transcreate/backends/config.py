"""Backend configuration: JSON document mapping each role to a client.

Shape:
    {
      "defaults": {"max_in_flight": 4, "retry": {"max_attempts": 3, "base_delay": 1.0}},
      "roles": {
        "<role>": {"kind": "mock", "mock_style": "...", ...}
        "<role>": {"kind": "remote", "endpoint": "...", "model": "...",
                    "api_key_env": "VAR", "timeout": 60, "max_in_flight": 4}
      },
      "prompts": [{"id": ..., "body": ..., "dataset_kind": ...}, ...]
    }

Roles left out fall back to the deterministic mock for that role. API keys are
named by environment variable only. When every configured role is a mock, the
suite runs with deterministic provenance (no wall clock, no retry sleeps).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..prompts import DEFAULT_REGISTRY, PromptRegistry, PromptTemplate
from .base import Backends, RetryPolicy, Role
from . import mocks, remote

_MOCK_BUILDERS = {
    Role.CAPTIONER: {
        "echo": lambda opts, seed: mocks.EchoCaptioner(),
        "mapping": lambda opts, seed: mocks.MappingCaptioner(
            {str(k): str(v) for k, v in (opts.get("captions") or {}).items()}
        ),
    },
    Role.CAPTION_EDITOR: {
        "identity": lambda opts, seed: mocks.IdentityCaptionEditor(),
        "tag": lambda opts, seed: mocks.MappingCaptionEditor(),
        "mapping": lambda opts, seed: mocks.MappingCaptionEditor(
            {(str(iso), str(cap)): str(out) for iso, cap, out in (opts.get("edits") or [])}
        ),
    },
    Role.IMAGE_EDITOR: {
        "watermark": lambda opts, seed: mocks.WatermarkImageEditor(),
        "stripe": lambda opts, seed: mocks.FlagStripeImageEditor(),
    },
    Role.IMAGE_GENERATOR: {
        "noise": lambda opts, seed: mocks.NoiseImageGenerator(
            seed=int(opts.get("seed", seed)),
            size=tuple(opts.get("size", (64, 64))),
        ),
    },
    Role.LAYOUT_EMBEDDER: {
        "hash": lambda opts, seed: mocks.HashImageEmbedder(dim=int(opts.get("dim", 64)), salt="layout"),
    },
    Role.JOINT_TEXT_EMBEDDER: {
        "hash": lambda opts, seed: mocks.HashTextEmbedder(dim=int(opts.get("dim", 64)), salt="joint"),
    },
    Role.JOINT_IMAGE_EMBEDDER: {
        "hash": lambda opts, seed: mocks.HashImageEmbedder(dim=int(opts.get("dim", 64)), salt="joint"),
    },
}

_DEFAULT_MOCK_STYLE = {
    Role.CAPTIONER: "echo",
    Role.CAPTION_EDITOR: "tag",
    Role.IMAGE_EDITOR: "watermark",
    Role.IMAGE_GENERATOR: "noise",
    Role.LAYOUT_EMBEDDER: "hash",
    Role.JOINT_TEXT_EMBEDDER: "hash",
    Role.JOINT_IMAGE_EMBEDDER: "hash",
}

_REMOTE_BUILDERS = {
    Role.CAPTIONER: remote.RemoteCaptioner,
    Role.CAPTION_EDITOR: remote.RemoteCaptionEditor,
    Role.IMAGE_EDITOR: remote.RemoteImageEditor,
    Role.IMAGE_GENERATOR: remote.RemoteImageGenerator,
    Role.LAYOUT_EMBEDDER: remote.RemoteImageEmbedder,
    Role.JOINT_TEXT_EMBEDDER: remote.RemoteTextEmbedder,
    Role.JOINT_IMAGE_EMBEDDER: remote.RemoteImageEmbedder,
}


@dataclass
class BackendConfig:
    roles: dict[Role, dict[str, Any]] = field(default_factory=dict)
    max_in_flight: int = 4
    retry_max_attempts: int = 3
    retry_base_delay: float = 1.0
    prompts: PromptRegistry = field(default_factory=lambda: DEFAULT_REGISTRY)

    @property
    def all_mock(self) -> bool:
        return all(entry.get("kind", "mock") == "mock" for entry in self.roles.values())


def load_backend_config(path: str | Path | None) -> BackendConfig:
    """Parse a backend config file; None yields the all-mock default."""
    if path is None:
        return BackendConfig()
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    defaults = doc.get("defaults", {})
    retry = defaults.get("retry", {})
    config = BackendConfig(
        max_in_flight=int(defaults.get("max_in_flight", 4)),
        retry_max_attempts=int(retry.get("max_attempts", 3)),
        retry_base_delay=float(retry.get("base_delay", 1.0)),
    )
    for role_name, entry in doc.get("roles", {}).items():
        config.roles[Role(role_name)] = dict(entry)
    if doc.get("prompts"):
        registry = PromptRegistry()
        for item in doc["prompts"]:
            registry.register(PromptTemplate.from_json_dict(item))
        config.prompts = registry
    return config


def build_backends(config: BackendConfig, seed: int = 0) -> Backends:
    """Instantiate the client suite described by the config.

    Unconfigured roles get their default mock. An all-mock suite uses zero
    retry delay and no wall clock so runs stay deterministic; any remote role
    switches the suite to real timing and the configured backoff.
    """
    clients: dict[Role, Any] = {}
    for role in Role:
        entry = config.roles.get(role, {"kind": "mock"})
        kind = entry.get("kind", "mock")
        if kind == "mock":
            style = entry.get("mock_style", _DEFAULT_MOCK_STYLE[role])
            try:
                builder = _MOCK_BUILDERS[role][style]
            except KeyError:
                raise ValueError(f"unknown mock_style {style!r} for role {role.value}") from None
            client = builder(entry, seed)
        elif kind == "remote":
            client = _REMOTE_BUILDERS[role](
                endpoint=entry["endpoint"],
                model=entry.get("model", ""),
                api_key_env=entry.get("api_key_env"),
                timeout=float(entry.get("timeout", 60.0)),
            )
            if "dim" in entry and hasattr(client, "dim"):
                client.dim = int(entry["dim"])
        else:
            raise ValueError(f"unknown backend kind {kind!r} for role {role.value}")
        if "max_in_flight" in entry:
            client.max_in_flight = int(entry["max_in_flight"])
        clients[role] = client

    deterministic = config.all_mock
    retry = RetryPolicy(
        max_attempts=config.retry_max_attempts,
        base_delay=0.0 if deterministic else config.retry_base_delay,
    )
    if deterministic:
        retry.sleep = lambda _s: None
    return Backends(
        captioner=clients[Role.CAPTIONER],
        caption_editor=clients[Role.CAPTION_EDITOR],
        image_editor=clients[Role.IMAGE_EDITOR],
        image_generator=clients[Role.IMAGE_GENERATOR],
        layout_embedder=clients[Role.LAYOUT_EMBEDDER],
        joint_text_embedder=clients[Role.JOINT_TEXT_EMBEDDER],
        joint_image_embedder=clients[Role.JOINT_IMAGE_EMBEDDER],
        retry=retry,
        clock=None if deterministic else time.perf_counter,
        max_in_flight=config.max_in_flight,
    )
