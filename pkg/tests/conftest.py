from __future__ import annotations

import numpy as np
import pytest

from transcreate.backends import Backends, RetryPolicy
from transcreate.backends.mocks import (
    HashImageEmbedder,
    HashTextEmbedder,
    MappingCaptionEditor,
    MappingCaptioner,
    NoiseImageGenerator,
    WatermarkImageEditor,
    mock_backends,
)
from transcreate.countries import country
from transcreate.imaging import solid_png
from transcreate.records import ImageRecord

RAMEN_CAPTION = "a bowl of ramen with meat and vegetables"
RAMEN_EDIT_BR = "a bowl of feijoada with beef and vegetables"
COTTON_CAPTION = "a field of cotton plants"
COTTON_EDIT_JP = "a rice paddy field"


@pytest.fixture
def ramen_image() -> ImageRecord:
    return ImageRecord.from_bytes(solid_png(48, 32, (222, 184, 135)), country="jp")


@pytest.fixture
def cotton_image() -> ImageRecord:
    return ImageRecord.from_bytes(solid_png(40, 30, (240, 240, 230)), country="in")


@pytest.fixture
def brazil():
    return country("br")


@pytest.fixture
def japan():
    return country("jp")


@pytest.fixture
def replay_suite(ramen_image, cotton_image) -> Backends:
    """Mocks replaying the documented caption/edit chains."""
    return Backends(
        captioner=MappingCaptioner({
            ramen_image.image_id: RAMEN_CAPTION,
            cotton_image.image_id: COTTON_CAPTION,
        }),
        caption_editor=MappingCaptionEditor({
            ("br", RAMEN_CAPTION): RAMEN_EDIT_BR,
            ("jp", COTTON_CAPTION): COTTON_EDIT_JP,
        }),
        image_editor=WatermarkImageEditor(),
        image_generator=NoiseImageGenerator(seed=7),
        layout_embedder=HashImageEmbedder(dim=16, salt="layout"),
        joint_text_embedder=HashTextEmbedder(dim=16, salt="joint"),
        joint_image_embedder=HashImageEmbedder(dim=16, salt="joint"),
        retry=RetryPolicy(base_delay=0.0, sleep=lambda _s: None),
        clock=None,
    )


@pytest.fixture
def plain_suite() -> Backends:
    return mock_backends(dim=16)


def unit(*values: float) -> np.ndarray:
    v = np.asarray(values, dtype=np.float64)
    return v / np.linalg.norm(v)
