"""Prompt templates and rendering.

Templates carry bare uppercase markers (COUNTRY, TASK, INPUT) in their body.
Rendering substitutes bound values for markers; when the body has no INPUT
marker, a provided input string is appended after the body, which for the
shipped edit templates lands right after their trailing "Input: ".
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .countries import Country
from .errors import MissingBinding, UnknownTemplate

DATASET_KINDS = ("concept", "education", "story")

# Appended to every generation prompt so outputs lean photographic.
REALISM_SUFFIX = "photo, photograph, raw photo, analog photo, 4k, fujifilm photograph"

_MARKER_RE = re.compile(r"\b(COUNTRY|TASK|INPUT)\b")


@dataclass(frozen=True)
class PromptTemplate:
    id: str
    body: str
    dataset_kind: str

    def __post_init__(self) -> None:
        if self.dataset_kind not in DATASET_KINDS:
            raise ValueError(f"dataset_kind must be one of {DATASET_KINDS}, got {self.dataset_kind!r}")

    def markers(self) -> set[str]:
        return set(_MARKER_RE.findall(self.body))

    def to_json_dict(self) -> dict:
        return {"id": self.id, "body": self.body, "dataset_kind": self.dataset_kind}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PromptTemplate":
        return cls(id=d["id"], body=d["body"], dataset_kind=d["dataset_kind"])


DEFAULT_TEMPLATES: tuple[PromptTemplate, ...] = (
    PromptTemplate(
        id="concept-caption",
        body="A short image description:",
        dataset_kind="concept",
    ),
    PromptTemplate(
        id="education-caption",
        body=(
            "This image is from a math worksheet titled: TASK. Describe the image "
            "such that it talks about details relevant to the task of the worksheet. "
            "The output should be ONLY ONE sentence long."
        ),
        dataset_kind="education",
    ),
    PromptTemplate(
        id="story-caption",
        body=(
            "This image is from a storybook for children. Caption the image such "
            "that it describes details relevant to the story."
        ),
        dataset_kind="story",
    ),
    PromptTemplate(
        id="concept-llm-edit",
        body=(
            "Edit the input text, such that it is culturally relevant to COUNTRY. "
            "Keep the output text of a similar length as the input text. If it is "
            "already culturally relevant to COUNTRY, no need to make any edits. "
            "The output text must be in English only.\nInput: "
        ),
        dataset_kind="concept",
    ),
    PromptTemplate(
        id="education-llm-edit",
        body=(
            "Edit the input text, such that it is culturally relevant to COUNTRY. "
            "The text describes an image in a math worksheet titled: TASK. Hence, "
            "make sure the edit preserves the intent of the task in the worksheet. "
            "Keep the output text to be of a similar length as the input text. If "
            "it is already culturally relevant to COUNTRY, there is no need to make "
            "any edits. The output text must be in English only.\nInput: "
        ),
        dataset_kind="education",
    ),
    PromptTemplate(
        id="story-llm-edit",
        body=(
            "Edit the input text, such that it is culturally relevant to COUNTRY. "
            "The text describes an image in a storybook for children. Make sure the "
            "edit preserves the meaning of the story. Keep the output text to be of "
            "a similar length as the input text. If it is already culturally "
            "relevant to COUNTRY, there is no need to make any edits. The output "
            "text must be in English only.\nInput: "
        ),
        dataset_kind="story",
    ),
)


class PromptRegistry:
    """Immutable defaults plus config-supplied overrides, keyed by template id."""

    def __init__(self, templates: tuple[PromptTemplate, ...] = DEFAULT_TEMPLATES):
        self._templates: dict[str, PromptTemplate] = {}
        for t in templates:
            self._templates[t.id] = t

    def register(self, template: PromptTemplate) -> None:
        self._templates[template.id] = template

    def get(self, template_id: str) -> PromptTemplate:
        try:
            return self._templates[template_id]
        except KeyError:
            raise UnknownTemplate(f"no template registered under id {template_id!r}") from None

    def ids(self) -> list[str]:
        return sorted(self._templates)

    def caption_template(self, dataset_kind: str) -> PromptTemplate:
        return self.get(f"{dataset_kind}-caption")

    def edit_template(self, dataset_kind: str) -> PromptTemplate:
        return self.get(f"{dataset_kind}-llm-edit")

    def to_json_list(self) -> list[dict]:
        return [self._templates[i].to_json_dict() for i in self.ids()]

    @classmethod
    def from_json_list(cls, items: list[dict]) -> "PromptRegistry":
        reg = cls(templates=())
        for item in items:
            reg.register(PromptTemplate.from_json_dict(item))
        return reg

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_list(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "PromptRegistry":
        return cls.from_json_list(json.loads(Path(path).read_text(encoding="utf-8")))


DEFAULT_REGISTRY = PromptRegistry()


def render_prompt(
    template: PromptTemplate,
    country: Country | None = None,
    task: str | None = None,
    input_text: str | None = None,
) -> str:
    """Substitute marker values into the template body.

    Pure function of its arguments. Raises MissingBinding when the body uses a
    marker with no bound value. An input string with no INPUT marker in the
    body is appended verbatim after the rendered body.
    """
    bindings = {
        "COUNTRY": country.display_name if country is not None else None,
        "TASK": task,
        "INPUT": input_text,
    }

    def substitute(match: re.Match) -> str:
        name = match.group(1)
        value = bindings[name]
        if value is None:
            raise MissingBinding(f"template {template.id!r} uses {name} but no value was bound")
        return value

    rendered = _MARKER_RE.sub(substitute, template.body)
    if input_text is not None and "INPUT" not in template.markers():
        rendered += input_text
    return rendered
