from .core import (
    PIPELINE_IDS,
    PipelineOutput,
    TranscreationRequest,
    run_cap_edit,
    run_cap_gen,
    run_cap_retrieve,
    run_e2e_instruct,
    run_pipeline,
)
from .batch import BatchReport, run_batch

__all__ = [
    "PIPELINE_IDS",
    "PipelineOutput",
    "TranscreationRequest",
    "run_cap_edit",
    "run_cap_gen",
    "run_cap_retrieve",
    "run_e2e_instruct",
    "run_pipeline",
    "BatchReport",
    "run_batch",
]
