"""The shipped rating questionnaire.

Question ids group by dataset kind: C* for single-concept images, E* for
education worksheets, S* for story images. The visual-change and cultural
questions repeat across kinds under their own ids. Scale is Likert 1..5,
1 = strongly disagree, 5 = strongly agree.
"""

from __future__ import annotations

from dataclasses import dataclass

SCALE_MIN, SCALE_MAX = 1, 5


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    applies_to: str  # concept | education | story
    asks_source: bool = False  # also asked once about the unedited source image


QUESTIONS: dict[str, Question] = {q.id: q for q in (
    Question(
        "C0",
        "Is there any visual change in the generated image compared to the original image?",
        "concept",
    ),
    Question(
        "C1",
        "Is the generated image from the same semantic category as the original image?",
        "concept",
    ),
    Question(
        "C2",
        "Does the generated image maintain spatial layout of the original image?",
        "concept",
    ),
    Question(
        "C3",
        "Does the image seem like it came from your country/ is representative of your culture?",
        "concept",
        asks_source=True,
    ),
    Question(
        "C4",
        "Does the generated image reflect naturally occurring scenes/objects?",
        "concept",
    ),
    Question(
        "C5",
        "Is this image offensive to you, or is likely offensive to someone from your culture?",
        "concept",
    ),
    Question(
        "E0",
        "Is there any visual change in the generated image compared to the original image?",
        "education",
    ),
    Question(
        "E1",
        "Can the generated image be used to teach the concept of the worksheet?",
        "education",
    ),
    Question(
        "E2",
        "Does the image seem like it came from your country/is representative of your culture?",
        "education",
        asks_source=True,
    ),
    Question(
        "S0",
        "Is there any visual change in the generated image compared to the original image?",
        "story",
    ),
    Question(
        "S1",
        "Would the generated image match the text of the story in a children’s storybook?",
        "story",
    ),
    Question(
        "S2",
        "Does the image seem like it came from your country/is representative of your culture?",
        "story",
        asks_source=True,
    ),
)}

# Per dataset kind: (visual-change gate, meaning-fit gate, cultural-relevance)
GATES = {
    "concept": ("C0", "C1", "C3"),
    "education": ("E0", "E1", "E2"),
    "story": ("S0", "S1", "S2"),
}


def questions_for(dataset_kind: str) -> list[Question]:
    qs = [q for q in QUESTIONS.values() if q.applies_to == dataset_kind]
    if not qs:
        raise ValueError(f"unknown dataset kind {dataset_kind!r}")
    return sorted(qs, key=lambda q: q.id)


def source_question_for(dataset_kind: str) -> Question:
    """The cultural-relevance question, also asked once about the source."""
    return QUESTIONS[GATES[dataset_kind][2]]
