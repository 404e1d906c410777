"""Append-only ratings store.

Every submission is one JSON line, appended and fsynced before the ack. A
resubmission for the same (rater, instance, question, slot) key supersedes the
earlier value in the latest-wins view, but the full history stays on disk, so
any audit can reconstruct who changed what.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

from ..errors import InapplicableQuestion, OutOfScale, UnknownInstance
from .instances import EvalInstance
from .questions import QUESTIONS, SCALE_MAX, SCALE_MIN

logger = logging.getLogger(__name__)

SOURCE_SLOT = 0  # ratings about the unedited source image


@dataclass(frozen=True)
class Rating:
    instance_id: str
    rater_id: str
    question_id: str
    slot_index: int  # SOURCE_SLOT for the source image, 1.. for outputs
    value: int
    submitted_at: str = ""
    free_comment: str | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or isinstance(self.value, bool) or not SCALE_MIN <= self.value <= SCALE_MAX:
            raise OutOfScale(f"rating value must be an integer in {SCALE_MIN}..{SCALE_MAX}, got {self.value!r}")

    @property
    def key(self) -> tuple[str, str, str, int]:
        return (self.rater_id, self.instance_id, self.question_id, self.slot_index)

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "rater_id": self.rater_id,
            "question_id": self.question_id,
            "slot_index": self.slot_index,
            "value": self.value,
            "submitted_at": self.submitted_at,
            "free_comment": self.free_comment,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Rating":
        return cls(
            instance_id=d["instance_id"],
            rater_id=d["rater_id"],
            question_id=d["question_id"],
            slot_index=d["slot_index"],
            value=d["value"],
            submitted_at=d.get("submitted_at", ""),
            free_comment=d.get("free_comment"),
        )


class RatingsStore:
    """Single-writer JSONL store; reads work over immutable snapshots."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._keys_seen: set[tuple[str, str, str, int]] = set()
        self.superseded = 0
        for rating in self.history():
            if rating.key in self._keys_seen:
                self.superseded += 1
            self._keys_seen.add(rating.key)

    def append(self, rating: Rating) -> None:
        """Durably append one rating; overwriting submissions are logged."""
        if not rating.submitted_at:
            rating = Rating(
                **{**rating.to_json_dict(),
                   "submitted_at": datetime.datetime.now(datetime.timezone.utc).isoformat()}
            )
        line = json.dumps(rating.to_json_dict(), sort_keys=True)
        with self._write_lock:
            if rating.key in self._keys_seen:
                self.superseded += 1
                logger.info("rating superseded for key %s", rating.key)
            self._keys_seen.add(rating.key)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())

    def history(self) -> list[Rating]:
        """Every stored submission, oldest first."""
        if not self.path.is_file():
            return []
        out = []
        with self.path.open("r", encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    out.append(Rating.from_json_dict(json.loads(line)))
        return out

    def latest(self) -> dict[tuple[str, str, str, int], Rating]:
        """Latest-wins view over the append-only log."""
        view: dict[tuple[str, str, str, int], Rating] = {}
        for rating in self.history():
            view[rating.key] = rating
        return view

    def snapshot_digest(self) -> str:
        if not self.path.is_file():
            return hashlib.sha256(b"").hexdigest()
        return hashlib.sha256(self.path.read_bytes()).hexdigest()


def record_rating(
    store: RatingsStore,
    instances: dict[str, EvalInstance],
    rating: Rating,
) -> dict:
    """Validate a rating against its instance and persist it."""
    instance = instances.get(rating.instance_id)
    if instance is None:
        raise UnknownInstance(f"no instance {rating.instance_id!r}")
    question = QUESTIONS.get(rating.question_id)
    if question is None or question.applies_to != instance.dataset_kind:
        raise InapplicableQuestion(
            f"question {rating.question_id!r} does not apply to a "
            f"{instance.dataset_kind} instance"
        )
    if rating.slot_index == SOURCE_SLOT:
        if not question.asks_source:
            raise InapplicableQuestion(f"question {rating.question_id!r} is not asked about the source")
    else:
        try:
            instance.pipeline_for_slot(rating.slot_index)
        except KeyError:
            raise InapplicableQuestion(
                f"instance {rating.instance_id!r} has no slot {rating.slot_index}"
            ) from None
    store.append(rating)
    return {"ok": True, "key": list(rating.key)}
