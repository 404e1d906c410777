"""Quantitative metrics over transcreated images.

Two scores per output: how close it stays to the source image (layout
embedding similarity) and how strongly it reads as belonging to the target
country (joint-space similarity against a fixed relevance sentence). A
calibration routine converts human visual-change ratings into a per-country
similarity threshold above which outputs are treated as unedited.

Known limitation, inherited from the underlying joint-embedding approach: the
country-relevance score has high recall but low precision — images decorated
with stereotypical artifacts (flag colours, landmark cutouts) score high even
when the edit is meaningless. No automatic correction is applied; treat the
score as a screening signal, not a verdict.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .backends import Backends, Role
from .countries import Country
from .errors import CountryMismatch, InsufficientSupport, OutOfScale

RELEVANCE_PROMPT = "This image is culturally relevant to {country}"

PUBLISH_MIN_SUPPORT = 10


def relevance_prompt(country: Country) -> str:
    return RELEVANCE_PROMPT.format(country=country.display_name)


@dataclass(frozen=True)
class MetricResult:
    image_id: str
    pipeline_id: str
    target: str  # iso code
    image_similarity: float
    country_relevance: float
    relevance_delta: float | None = None

    def __post_init__(self) -> None:
        for name in ("image_similarity", "country_relevance"):
            value = getattr(self, name)
            if not (-1.0 - 1e-6 <= value <= 1.0 + 1e-6):
                raise ValueError(f"{name} out of [-1, 1]: {value}")


@dataclass(frozen=True)
class EditThreshold:
    country: str | None  # iso code; None for a pooled threshold
    threshold: float
    support: int
    no_support: bool = False  # no cut point had a low-change mean rating

    def __post_init__(self) -> None:
        if not (0.0 <= self.threshold <= 1.0):
            raise ValueError(f"threshold out of [0, 1]: {self.threshold}")


def image_similarity(source: bytes, output: bytes, backends: Backends) -> float:
    """Dot product of unit layout embeddings; symmetric in its arguments."""
    a = backends.embed_image(source, Role.LAYOUT_EMBEDDER)
    b = backends.embed_image(output, Role.LAYOUT_EMBEDDER)
    return float(a @ b)


def country_relevance(output: bytes, country: Country, backends: Backends) -> float:
    """Similarity between the output image and the country relevance sentence,
    both embedded into the joint space."""
    img = backends.embed_image(output, Role.JOINT_IMAGE_EMBEDDER)
    txt = backends.embed_text(relevance_prompt(country), Role.JOINT_TEXT_EMBEDDER)
    return float(img @ txt)


def relevance_delta(source: bytes, output: bytes, country: Country, backends: Backends) -> float:
    """Gain in country relevance of the output over the source."""
    return country_relevance(output, country, backends) - country_relevance(source, country, backends)


def calibrate_edit_threshold(
    pairs: Sequence[tuple[float, int]],
    country: Country | None = None,
    *,
    min_support: int = 1,
) -> EditThreshold:
    """Smallest observed similarity s whose upper tail {pairs with sim >= s}
    has mean visual-change rating <= 2.

    Candidate cut points are the observed similarities only. When no cut
    qualifies the threshold is 1.0 with the no_support flag set. Publishing a
    threshold to the store additionally requires PUBLISH_MIN_SUPPORT pairs.
    """
    if len(pairs) < max(min_support, 1):
        raise InsufficientSupport(f"need at least {max(min_support, 1)} pairs, got {len(pairs)}")
    for sim, rating in pairs:
        if not isinstance(rating, int) or isinstance(rating, bool) or not 1 <= rating <= 5:
            raise OutOfScale(f"rating must be an integer in 1..5, got {rating!r}")
        if not 0.0 <= sim <= 1.0:
            raise ValueError(f"similarity must be in [0, 1], got {sim}")

    qualifying = []
    for cut in sorted({sim for sim, _ in pairs}):
        tail = [rating for sim, rating in pairs if sim >= cut]
        if statistics.fmean(tail) <= 2.0:
            qualifying.append(cut)
    if not qualifying:
        return EditThreshold(
            country=country.iso_code if country else None,
            threshold=1.0,
            support=len(pairs),
            no_support=True,
        )
    return EditThreshold(
        country=country.iso_code if country else None,
        threshold=min(qualifying),
        support=len(pairs),
    )


def filter_unedited(results: Iterable[MetricResult], threshold: EditThreshold) -> list[MetricResult]:
    """Drop results whose image similarity exceeds the threshold (strictly
    greater than: boundary results are kept). Idempotent."""
    kept = []
    for result in results:
        if threshold.country is not None and result.target != threshold.country:
            raise CountryMismatch(
                f"threshold is for {threshold.country!r} but result targets {result.target!r}"
            )
        if result.image_similarity <= threshold.threshold:
            kept.append(result)
    return kept


# ---------------------------------------------------------------------------
# stores: metrics.csv and thresholds.json

METRICS_CSV_COLUMNS = ("image_id", "pipeline", "country", "image_similarity", "country_relevance", "relevance_delta")


def write_metrics_csv(results: Iterable[MetricResult], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_CSV_COLUMNS)
        for r in sorted(results, key=lambda r: (r.target, r.pipeline_id, r.image_id)):
            writer.writerow([
                r.image_id,
                r.pipeline_id,
                r.target,
                r.image_similarity,
                r.country_relevance,
                "" if r.relevance_delta is None else r.relevance_delta,
            ])


def save_thresholds(thresholds: Iterable[EditThreshold], path: str | Path, *, require_support: bool = True) -> None:
    """Persist thresholds keyed by country. Publishing requires enough
    calibration pairs unless explicitly overridden."""
    doc = {}
    for t in thresholds:
        if require_support and t.support < PUBLISH_MIN_SUPPORT:
            raise InsufficientSupport(
                f"threshold for {t.country!r} has support {t.support} < {PUBLISH_MIN_SUPPORT}"
            )
        doc[t.country or "_pooled"] = {
            "threshold": t.threshold,
            "support": t.support,
            "no_support": t.no_support,
        }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")


def load_thresholds(path: str | Path) -> dict[str, EditThreshold]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for key, entry in doc.items():
        iso = None if key == "_pooled" else key
        out[key] = EditThreshold(
            country=iso,
            threshold=float(entry["threshold"]),
            support=int(entry["support"]),
            no_support=bool(entry.get("no_support", False)),
        )
    return out
