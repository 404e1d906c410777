"""Batch execution over a dataset: one job per (image, pipeline, target).

Output layout under the batch directory:
    {pipeline}/{country_iso}/{image_id}.png          result pixels (when resolvable)
    {pipeline}/{country_iso}/{image_id}.trace.json   request, captions, call log, status
    batch_report.json

Jobs are keyed by content (image id x pipeline x target), results are written
atomically, and a re-run skips any job whose trace already records success —
so interrupted batches resume without repeating backend calls. Job failures
are recorded per job and never abort the batch.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from ..backends import Backends
from ..countries import Country
from ..datasets import ApplicationEntry, ConceptEntry, Dataset
from ..errors import TranscreateError
from ..imaging import content_digest, text_digest
from ..prompts import DEFAULT_REGISTRY, PromptRegistry
from ..records import ImageRecord
from ..retrieval import CountryIndex
from .core import PIPELINE_IDS, PipelineOutput, TranscreationRequest, run_pipeline

logger = logging.getLogger(__name__)

DEFAULT_WORKERS = 8


@dataclass(frozen=True)
class BatchJob:
    image: ImageRecord
    pipeline_id: str
    target: Country
    dataset_kind: str = "concept"
    task_context: str | None = None

    @property
    def key(self) -> str:
        return text_digest(f"{self.image.image_id}|{self.pipeline_id}|{self.target.iso_code}")[:16]

    @property
    def label(self) -> str:
        return f"{self.pipeline_id}/{self.target.iso_code}/{self.image.image_id[:12]}"

    def result_path(self, out_dir: Path) -> Path:
        return out_dir / self.pipeline_id / self.target.iso_code / f"{self.image.image_id}.png"

    def trace_path(self, out_dir: Path) -> Path:
        return out_dir / self.pipeline_id / self.target.iso_code / f"{self.image.image_id}.trace.json"


@dataclass
class BatchReport:
    total: int = 0
    completed: list[str] = field(default_factory=list)   # job labels
    reused: list[str] = field(default_factory=list)      # completed in an earlier run
    failed: list[dict] = field(default_factory=list)     # {"job": label, "reason": ...}
    skipped: list[dict] = field(default_factory=list)    # {"job": label, "reason": ...}

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "completed": sorted(self.completed),
            "reused": sorted(self.reused),
            "failed": sorted(self.failed, key=lambda d: d["job"]),
            "skipped": sorted(self.skipped, key=lambda d: d["job"]),
        }

    def save(self, out_dir: Path) -> None:
        _atomic_write_text(
            out_dir / "batch_report.json",
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True),
        )


def _atomic_write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


def plan_jobs(
    dataset: Dataset,
    pipeline_ids: list[str],
    targets: list[Country],
    *,
    skip_same_country: bool = False,
) -> tuple[list[BatchJob], list[dict]]:
    """Expand the dataset into jobs; same-country pairs are executed unless the
    skip flag is set, in which case they are itemized."""
    for pid in pipeline_ids:
        if pid not in PIPELINE_IDS:
            raise ValueError(f"unknown pipeline {pid!r}")
    jobs: list[BatchJob] = []
    skipped: list[dict] = []
    for entry in dataset.entries:
        if isinstance(entry, ConceptEntry):
            image, kind, context = entry.image, "concept", None
            source_iso = entry.country.iso_code
        elif isinstance(entry, ApplicationEntry):
            image, kind, context = entry.image, entry.kind, entry.task_context
            source_iso = entry.image.country
        else:
            raise TypeError(f"unsupported dataset entry {type(entry).__name__}")
        for target in targets:
            for pid in pipeline_ids:
                job = BatchJob(image, pid, target, dataset_kind=kind, task_context=context)
                if skip_same_country and source_iso == target.iso_code:
                    skipped.append({"job": job.label, "reason": "same-country pair"})
                    continue
                jobs.append(job)
    return jobs, skipped


def _previously_completed(job: BatchJob, out_dir: Path) -> bool:
    trace_path = job.trace_path(out_dir)
    if not trace_path.is_file():
        return False
    try:
        doc = json.loads(trace_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, OSError):
        return False
    return doc.get("status") == "ok" and doc.get("job_key") == job.key


def _trace_document(job: BatchJob, output: PipelineOutput, result_digest: str | None) -> dict:
    retrieved = None
    if isinstance(output.result_image, ImageRecord):
        retrieved = output.result_image.to_json_dict()
    return {
        "job_key": job.key,
        "pipeline": job.pipeline_id,
        "country": job.target.iso_code,
        "image_id": job.image.image_id,
        "request": {
            "dataset_kind": job.dataset_kind,
            "task_context": job.task_context,
            "source_url": job.image.source_url,
            "source_path": str(job.image.path) if job.image.path else None,
        },
        "captions": {
            "intermediate": output.intermediate_caption,
            "llm_edited": output.llm_edited_caption,
        },
        "calls": output.trace.to_json_list(),
        "status": output.status,
        "failure_reason": output.failure_reason,
        "result_digest": result_digest,
        "retrieved": retrieved,
    }


def _execute_job(
    job: BatchJob,
    backends: Backends,
    indices: dict[str, CountryIndex],
    registry: PromptRegistry,
    out_dir: Path,
) -> tuple[BatchJob, str, str | None]:
    """Run one job and persist its artifacts. Returns (job, status, reason)."""
    index = indices.get(job.target.iso_code) if job.pipeline_id == "cap-retrieve" else None
    req = TranscreationRequest(
        source=job.image,
        target=job.target,
        dataset_kind=job.dataset_kind,
        task_context=job.task_context,
    )
    try:
        output = run_pipeline(job.pipeline_id, req, backends, index=index, registry=registry)
    except (TranscreateError, ValueError) as exc:
        # Precondition-level failures (missing/empty index, bad request) are
        # recorded like stage failures so the batch carries on.
        output = PipelineOutput(
            pipeline_id=job.pipeline_id,
            request=req,
            status="failed",
            failure_reason=f"{type(exc).__name__}: {exc}",
        )

    result_digest = None
    if output.ok:
        if isinstance(output.result_image, ImageRecord) and not output.result_image.has_pixels:
            # Retrieval hit whose pixels live elsewhere: persist the record
            # reference; the trace carries the full metadata.
            ref = output.result_image.to_json_dict()
            result_digest = text_digest(json.dumps(ref, sort_keys=True))
            _atomic_write_text(
                job.result_path(out_dir).with_suffix(".record.json"),
                json.dumps(ref, indent=2, sort_keys=True),
            )
        else:
            data = output.result_bytes()
            result_digest = content_digest(data)
            _atomic_write_bytes(job.result_path(out_dir), data)
    _atomic_write_text(
        job.trace_path(out_dir),
        json.dumps(_trace_document(job, output, result_digest), indent=2, sort_keys=True),
    )
    return job, output.status, output.failure_reason


def run_batch(
    dataset: Dataset,
    pipeline_ids: list[str],
    targets: list[Country],
    out_dir: str | Path,
    backends: Backends,
    *,
    indices: dict[str, CountryIndex] | None = None,
    registry: PromptRegistry = DEFAULT_REGISTRY,
    workers: int = DEFAULT_WORKERS,
    skip_same_country: bool = False,
) -> BatchReport:
    """Run every (image x pipeline x target) job, concurrently up to `workers`.

    Partial failures never abort the batch; they are listed in the report.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs, skipped = plan_jobs(dataset, pipeline_ids, targets, skip_same_country=skip_same_country)
    report = BatchReport(total=len(jobs) + len(skipped), skipped=skipped)

    pending: list[BatchJob] = []
    for job in jobs:
        if _previously_completed(job, out):
            report.reused.append(job.label)
        else:
            pending.append(job)

    indices = indices or {}
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        futures = [
            pool.submit(_execute_job, job, backends, indices, registry, out)
            for job in pending
        ]
        for future in futures:
            job, status, reason = future.result()
            if status == "ok":
                report.completed.append(job.label)
            else:
                report.failed.append({"job": job.label, "reason": reason or "unknown"})
                logger.warning("job %s failed: %s", job.label, reason)

    report.save(out)
    return report
