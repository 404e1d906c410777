"""The four transcreation pipelines.

Stage sequences, by pipeline:
  e2e-instruct  image_editor
  cap-edit      captioner -> caption_editor -> image_editor
  cap-retrieve  captioner -> caption_editor -> joint_text_embedder (index query)
  cap-gen       captioner -> caption_editor -> image_generator

A stage failure aborts the job: the output carries status "failed", the
failure reason, and the trace of whatever ran. cap-retrieve never fabricates
pixels — its result is always an existing indexed record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..backends import Backends, Role
from ..countries import Country
from ..errors import (
    BackendUnavailable,
    CountryMismatch,
    EmptyIndex,
    EmptyResponse,
    MalformedImage,
)
from ..prompts import DATASET_KINDS, DEFAULT_REGISTRY, PromptRegistry, render_prompt
from ..provenance import Trace
from ..records import ImageRecord
from ..retrieval import CountryIndex, query

PIPELINE_IDS = ("e2e-instruct", "cap-edit", "cap-retrieve", "cap-gen")

E2E_INSTRUCTION = "make the image culturally relevant to {country}"

_STAGE_FAILURES = (BackendUnavailable, MalformedImage, EmptyResponse)


@dataclass(frozen=True)
class TranscreationRequest:
    source: ImageRecord
    target: Country
    dataset_kind: str = "concept"
    task_context: str | None = None

    def __post_init__(self) -> None:
        if self.dataset_kind not in DATASET_KINDS:
            raise ValueError(f"dataset_kind must be one of {DATASET_KINDS}, got {self.dataset_kind!r}")
        if self.dataset_kind in ("education", "story") and not self.task_context:
            raise ValueError(f"{self.dataset_kind} requests need task_context")


@dataclass
class PipelineOutput:
    pipeline_id: str
    request: TranscreationRequest
    result_image: bytes | ImageRecord | None = None
    intermediate_caption: str | None = None
    llm_edited_caption: str | None = None
    trace: Trace = field(default_factory=Trace)
    status: str = "ok"
    failure_reason: str | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def result_bytes(self) -> bytes:
        if isinstance(self.result_image, ImageRecord):
            return self.result_image.load_bytes()
        if self.result_image is None:
            raise ValueError("pipeline output has no result image")
        return self.result_image


def _failed(pipeline_id: str, req: TranscreationRequest, trace: Trace, exc: Exception,
            intermediate: str | None = None, edited: str | None = None) -> PipelineOutput:
    return PipelineOutput(
        pipeline_id=pipeline_id,
        request=req,
        intermediate_caption=intermediate,
        llm_edited_caption=edited,
        trace=trace,
        status="failed",
        failure_reason=f"{type(exc).__name__}: {exc}",
    )


def run_e2e_instruct(req: TranscreationRequest, backends: Backends) -> PipelineOutput:
    """Single-pass instruction edit."""
    trace = Trace()
    instruction = E2E_INSTRUCTION.format(country=req.target.display_name)
    try:
        result = backends.edit_image(req.source, instruction, trace)
    except _STAGE_FAILURES as exc:
        return _failed("e2e-instruct", req, trace, exc)
    return PipelineOutput("e2e-instruct", req, result_image=result, trace=trace)


def _caption_then_edit(
    req: TranscreationRequest,
    backends: Backends,
    registry: PromptRegistry,
    trace: Trace,
) -> tuple[str, str]:
    """Shared head of the three caption-first pipelines."""
    caption_template = registry.caption_template(req.dataset_kind)
    caption_prompt_task = req.task_context if "TASK" in caption_template.markers() else None
    caption_prompt = render_prompt(caption_template, task=caption_prompt_task)
    caption = backends.caption(req.source, caption_prompt, trace)
    edited = backends.edit_caption(
        caption,
        req.target,
        registry.edit_template(req.dataset_kind),
        trace,
        task=req.task_context,
    )
    return caption, edited


def run_cap_edit(
    req: TranscreationRequest,
    backends: Backends,
    registry: PromptRegistry = DEFAULT_REGISTRY,
) -> PipelineOutput:
    """Caption the image, culturally rewrite the caption, then edit the image
    using the rewritten caption as the instruction."""
    trace = Trace()
    caption = edited = None
    try:
        caption, edited = _caption_then_edit(req, backends, registry, trace)
        result = backends.edit_image(req.source, edited, trace)
    except _STAGE_FAILURES as exc:
        return _failed("cap-edit", req, trace, exc, caption, edited)
    return PipelineOutput(
        "cap-edit", req,
        result_image=result,
        intermediate_caption=caption,
        llm_edited_caption=edited,
        trace=trace,
    )


def run_cap_retrieve(
    req: TranscreationRequest,
    backends: Backends,
    index: CountryIndex,
    registry: PromptRegistry = DEFAULT_REGISTRY,
    k: int = 1,
) -> PipelineOutput:
    """Caption, rewrite, then retrieve the closest natural image from the
    target country's index. Only rank 1 becomes the result."""
    if index.country != req.target:
        raise CountryMismatch(
            f"index is for {index.country.display_name}, request targets {req.target.display_name}"
        )
    if len(index) == 0:
        raise EmptyIndex(f"index for {index.country.display_name} has no entries")
    trace = Trace()
    caption = edited = None
    try:
        caption, edited = _caption_then_edit(req, backends, registry, trace)
        ranked = query(index, edited, k, lambda text: backends.embed_text(text, Role.JOINT_TEXT_EMBEDDER, trace))
    except _STAGE_FAILURES as exc:
        return _failed("cap-retrieve", req, trace, exc, caption, edited)
    top_record, _score = ranked[0]
    return PipelineOutput(
        "cap-retrieve", req,
        result_image=top_record,
        intermediate_caption=caption,
        llm_edited_caption=edited,
        trace=trace,
    )


def run_cap_gen(
    req: TranscreationRequest,
    backends: Backends,
    registry: PromptRegistry = DEFAULT_REGISTRY,
) -> PipelineOutput:
    """Caption, rewrite, then generate a fresh image from the rewritten
    caption (realism suffix appended at dispatch)."""
    trace = Trace()
    caption = edited = None
    try:
        caption, edited = _caption_then_edit(req, backends, registry, trace)
        result = backends.generate_image(edited, trace)
    except _STAGE_FAILURES as exc:
        return _failed("cap-gen", req, trace, exc, caption, edited)
    return PipelineOutput(
        "cap-gen", req,
        result_image=result,
        intermediate_caption=caption,
        llm_edited_caption=edited,
        trace=trace,
    )


def run_pipeline(
    pipeline_id: str,
    req: TranscreationRequest,
    backends: Backends,
    *,
    index: CountryIndex | None = None,
    registry: PromptRegistry = DEFAULT_REGISTRY,
) -> PipelineOutput:
    """Dispatch by pipeline id; cap-retrieve requires an index."""
    if pipeline_id == "e2e-instruct":
        return run_e2e_instruct(req, backends)
    if pipeline_id == "cap-edit":
        return run_cap_edit(req, backends, registry)
    if pipeline_id == "cap-retrieve":
        if index is None:
            raise ValueError("cap-retrieve needs a country index")
        return run_cap_retrieve(req, backends, index, registry)
    if pipeline_id == "cap-gen":
        return run_cap_gen(req, backends, registry)
    raise ValueError(f"unknown pipeline {pipeline_id!r}; expected one of {PIPELINE_IDS}")
