from .questions import QUESTIONS, Question, questions_for, source_question_for
from .scoring import DeltaBucket, delta_bucket, is_successful_application, is_successful_transcreation
from .instances import EvalInstance, SlotAssignment, build_instance, build_instances_from_results, blinded_payload
from .store import Rating, RatingsStore, record_rating
from .aggregate import AggregateReport, aggregate

__all__ = [
    "QUESTIONS",
    "Question",
    "questions_for",
    "source_question_for",
    "DeltaBucket",
    "delta_bucket",
    "is_successful_application",
    "is_successful_transcreation",
    "EvalInstance",
    "SlotAssignment",
    "build_instance",
    "build_instances_from_results",
    "blinded_payload",
    "Rating",
    "RatingsStore",
    "record_rating",
    "AggregateReport",
    "aggregate",
]
