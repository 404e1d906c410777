"""Success criteria and delta bucketing over Likert ratings.

Scores may be single ratings (integers) or medians across raters (possibly
half-integers); every predicate accepts any numeric value inside the scale.
"""

from __future__ import annotations

import enum

from ..errors import OutOfScale
from .questions import SCALE_MAX, SCALE_MIN


class DeltaBucket(enum.Enum):
    NEGATIVE = "-"   # edited scored below the original
    NO_CHANGE = "0"
    POSITIVE = "+"   # edited scored above the original

    @property
    def label(self) -> str:
        return {"-": "negative_delta", "0": "no_change", "+": "positive_delta"}[self.value]


def _check_scale(**scores: float) -> None:
    for name, value in scores.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise OutOfScale(f"{name} must be numeric, got {value!r}")
        if not SCALE_MIN <= value <= SCALE_MAX:
            raise OutOfScale(f"{name} must lie in {SCALE_MIN}..{SCALE_MAX}, got {value}")


def delta_bucket(original_score: float, edited_score: float) -> DeltaBucket:
    """Classify the edited image's cultural score relative to the original."""
    _check_scale(original_score=original_score, edited_score=edited_score)
    if edited_score < original_score:
        return DeltaBucket.NEGATIVE
    if edited_score > original_score:
        return DeltaBucket.POSITIVE
    return DeltaBucket.NO_CHANGE


def is_successful_transcreation(c0: float, c1: float, c3_original: float, c3_edited: float) -> bool:
    """A concept output succeeds when it visibly changed (C0 > 2), stayed in
    the source's semantic category (C1 > 2), and strictly gained cultural
    relevance over the original."""
    _check_scale(c0=c0, c1=c1, c3_original=c3_original, c3_edited=c3_edited)
    return c0 > 2 and c1 > 2 and c3_edited > c3_original


def is_successful_application(
    visual_change: float,
    task_fit: float,
    relevance_original: float,
    relevance_edited: float,
) -> bool:
    """Application analogue: the visual-change gate and the task/story fit gate
    (E1 or S1) must both clear 2, and cultural relevance must strictly rise."""
    _check_scale(
        visual_change=visual_change,
        task_fit=task_fit,
        relevance_original=relevance_original,
        relevance_edited=relevance_edited,
    )
    return visual_change > 2 and task_fit > 2 and relevance_edited > relevance_original
