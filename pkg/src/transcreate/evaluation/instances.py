"""Rating instances: one source image plus its pipeline outputs in a
seed-determined random slot order.

The slot order is the blinding mechanism: raters see the source on top and
the outputs as numbered slots, never pipeline names. The slot-to-pipeline
mapping stays server-side.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..errors import TooFewOutputs
from .questions import QUESTIONS, questions_for, source_question_for


def _rng_for_seed(seed: int | str) -> random.Random:
    # Hash-mixed seeding: sequential seeds must still give uniform permutations.
    digest = hashlib.sha256(str(seed).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest, "big"))


@dataclass(frozen=True)
class SlotAssignment:
    slot_index: int  # 1-based; slot 0 is implicitly the source image
    pipeline_id: str
    image_digest: str
    image_path: str | None = None


@dataclass(frozen=True)
class EvalInstance:
    instance_id: str
    source_digest: str
    outputs: tuple[SlotAssignment, ...]
    permutation_seed: int | str
    country: str  # iso code
    dataset_kind: str
    context_label: str | None = None
    source_path: str | None = None

    def pipeline_for_slot(self, slot_index: int) -> str:
        for assignment in self.outputs:
            if assignment.slot_index == slot_index:
                return assignment.pipeline_id
        raise KeyError(f"instance {self.instance_id} has no slot {slot_index}")

    def to_json_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "source_digest": self.source_digest,
            "source_path": self.source_path,
            "outputs": [
                {
                    "slot_index": a.slot_index,
                    "pipeline_id": a.pipeline_id,
                    "image_digest": a.image_digest,
                    "image_path": a.image_path,
                }
                for a in self.outputs
            ],
            "permutation_seed": self.permutation_seed,
            "country": self.country,
            "dataset_kind": self.dataset_kind,
            "context_label": self.context_label,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "EvalInstance":
        return cls(
            instance_id=d["instance_id"],
            source_digest=d["source_digest"],
            source_path=d.get("source_path"),
            outputs=tuple(
                SlotAssignment(o["slot_index"], o["pipeline_id"], o["image_digest"], o.get("image_path"))
                for o in d["outputs"]
            ),
            permutation_seed=d["permutation_seed"],
            country=d["country"],
            dataset_kind=d["dataset_kind"],
            context_label=d.get("context_label"),
        )


def build_instance(
    source_digest: str,
    outputs: Mapping[str, str],
    seed: int | str,
    *,
    country: str = "",
    dataset_kind: str = "concept",
    context_label: str | None = None,
    source_path: str | None = None,
    output_paths: Mapping[str, str] | None = None,
) -> EvalInstance:
    """Assemble an instance with a deterministic, seed-keyed slot permutation.

    `outputs` maps pipeline id to output image digest. The source is always
    displayed first; output slots are numbered from 1.
    """
    if len(outputs) < 2:
        raise TooFewOutputs(f"need at least 2 outputs to randomize, got {len(outputs)}")
    order = sorted(outputs)
    _rng_for_seed(seed).shuffle(order)
    paths = output_paths or {}
    slots = tuple(
        SlotAssignment(i + 1, pid, outputs[pid], paths.get(pid))
        for i, pid in enumerate(order)
    )
    instance_id = hashlib.sha256(
        json.dumps({"source": source_digest, "outputs": dict(outputs), "seed": str(seed)},
                   sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]
    return EvalInstance(
        instance_id=instance_id,
        source_digest=source_digest,
        outputs=slots,
        permutation_seed=seed,
        country=country,
        dataset_kind=dataset_kind,
        context_label=context_label,
        source_path=source_path,
    )


def blinded_payload(instance: EvalInstance) -> dict:
    """The rater-facing view: slot order only, no pipeline identities."""
    return {
        "instance_id": instance.instance_id,
        "country": instance.country,
        "dataset_kind": instance.dataset_kind,
        "context_label": instance.context_label,
        "source": {"label": "Image-1", "image_url": f"/img/{instance.source_digest}"},
        "slots": [
            {
                "slot_index": a.slot_index,
                "label": f"Image-{a.slot_index + 1}",
                "image_url": f"/img/{a.image_digest}",
            }
            for a in sorted(instance.outputs, key=lambda a: a.slot_index)
        ],
        "questions": [
            {"id": q.id, "text": q.text, "scale_min": 1, "scale_max": 5}
            for q in questions_for(instance.dataset_kind)
        ],
        "source_question": source_question_for(instance.dataset_kind).id,
    }


def build_instances_from_results(
    results_dir: str | Path,
    seed: int,
    *,
    dataset_kind: str = "concept",
    kinds: Mapping[str, str] | None = None,
    contexts: Mapping[str, str] | None = None,
) -> list[EvalInstance]:
    """Scan a batch output tree and group successful results into instances.

    One instance per (country, source image) with one slot per pipeline that
    produced a result. Groups with fewer than two outputs are skipped. Each
    instance's permutation seed derives from the batch seed and the group key,
    so the whole session plan is reproducible. `kinds` maps image ids to their
    dataset kind for mixed application sets; unmapped images fall back to the
    trace's recorded kind, then to `dataset_kind`.
    """
    root = Path(results_dir)
    grouped: dict[tuple[str, str], dict[str, Path]] = {}
    trace_kinds: dict[str, str] = {}
    for trace_path in sorted(root.glob("*/*/*.trace.json")):
        doc = json.loads(trace_path.read_text(encoding="utf-8"))
        if doc.get("status") != "ok":
            continue
        result_png = trace_path.with_name(trace_path.name.replace(".trace.json", ".png"))
        if not result_png.is_file():
            continue
        key = (doc["country"], doc["image_id"])
        grouped.setdefault(key, {})[doc["pipeline"]] = result_png
        recorded = doc.get("request", {}).get("dataset_kind")
        if recorded:
            trace_kinds[doc["image_id"]] = recorded

    instances = []
    for (iso, image_id), by_pipeline in sorted(grouped.items()):
        if len(by_pipeline) < 2:
            continue
        digests, paths = {}, {}
        for pid, path in by_pipeline.items():
            data = path.read_bytes()
            digests[pid] = hashlib.sha256(data).hexdigest()
            paths[pid] = str(path)
        source_path = _source_path_from_traces(root, iso, image_id)
        kind = (kinds or {}).get(image_id) or trace_kinds.get(image_id) or dataset_kind
        instances.append(build_instance(
            image_id,
            digests,
            seed=f"{seed}:{iso}:{image_id}",
            country=iso,
            dataset_kind=kind,
            context_label=(contexts or {}).get(image_id),
            source_path=source_path,
            output_paths=paths,
        ))
    return instances


def _source_path_from_traces(root: Path, iso: str, image_id: str) -> str | None:
    for trace_path in root.glob(f"*/{iso}/{image_id}.trace.json"):
        doc = json.loads(trace_path.read_text(encoding="utf-8"))
        source = doc.get("request", {}).get("source_path")
        if source:
            return source
    return None


def save_instances(instances: list[EvalInstance], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst.to_json_dict(), sort_keys=True) + "\n")


def load_instances(path: str | Path) -> list[EvalInstance]:
    out = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(EvalInstance.from_json_dict(json.loads(line)))
    return out
