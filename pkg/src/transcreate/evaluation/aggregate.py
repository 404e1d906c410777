"""Aggregate ratings into per-country, per-pipeline reports.

Multiple raters on the same (instance, question, slot) are combined by median
before any success gate is applied, keeping comparisons on the ordinal scale.
Because the gating convention for multi-rater data is genuinely ambiguous,
the report exposes two computations side by side: `success` evaluates the
criterion on median scores, `success_per_rater` evaluates it per rater and
averages over (instance, rater) pairs.

The report is a pure function of the store snapshot: aggregating the same
file twice yields byte-identical JSON.
"""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .instances import EvalInstance
from .questions import GATES, QUESTIONS
from .scoring import delta_bucket, is_successful_application, is_successful_transcreation
from .store import SOURCE_SLOT, Rating, RatingsStore


@dataclass
class AggregateReport:
    report: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.report, indent=2, sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    def success_rate(self, iso: str, pipeline_id: str) -> float | None:
        try:
            return self.report["countries"][iso]["pipelines"][pipeline_id]["success"]["rate"]
        except KeyError:
            return None


def _median_scores(
    ratings: list[Rating],
) -> dict[tuple[str, str, int], float]:
    """(instance, question, slot) -> median across raters of latest values."""
    latest: dict[tuple[str, str, str, int], int] = {}
    for r in ratings:
        latest[(r.rater_id, r.instance_id, r.question_id, r.slot_index)] = r.value
    grouped: dict[tuple[str, str, int], list[int]] = {}
    for (rater, instance, question, slot), value in latest.items():
        grouped.setdefault((instance, question, slot), []).append(value)
    return {key: float(statistics.median(values)) for key, values in grouped.items()}


def _success_for(kind: str, visual: float, fit: float, rel_source: float, rel_slot: float) -> bool:
    if kind == "concept":
        return is_successful_transcreation(visual, fit, rel_source, rel_slot)
    return is_successful_application(visual, fit, rel_source, rel_slot)


def aggregate(
    store: RatingsStore | Iterable[Rating],
    instances: Iterable[EvalInstance],
    *,
    pipelines: Iterable[str] | None = None,
) -> AggregateReport:
    instance_map = {inst.instance_id: inst for inst in instances}
    if isinstance(store, RatingsStore):
        ratings = store.history()
        snapshot = store.snapshot_digest()
    else:
        ratings = list(store)
        snapshot = ""
    ratings = [r for r in ratings if r.instance_id in instance_map]
    pipeline_filter = set(pipelines) if pipelines else None

    medians = _median_scores(ratings)

    # latest-wins raw values feed the histograms
    latest: dict[tuple[str, str, str, int], Rating] = {}
    for r in ratings:
        latest[r.key] = r

    countries: dict[str, dict] = {}

    def pipeline_bucket(iso: str, pid: str) -> dict:
        c = countries.setdefault(iso, {"pipelines": {}, "source_histograms": {}})
        return c["pipelines"].setdefault(pid, {
            "question_histograms": {},
            "delta_buckets": {"negative_delta": 0, "no_change": 0, "positive_delta": 0},
            "success": {"count": 0, "total": 0, "rate": 0.0},
            "success_per_rater": {"count": 0, "total": 0, "rate": 0.0},
        })

    # histograms of raw (latest-wins) ratings
    for rating in latest.values():
        inst = instance_map[rating.instance_id]
        if rating.slot_index == SOURCE_SLOT:
            hist = countries.setdefault(inst.country, {"pipelines": {}, "source_histograms": {}})[
                "source_histograms"
            ].setdefault(rating.question_id, {str(v): 0 for v in range(1, 6)})
            hist[str(rating.value)] += 1
            continue
        pid = inst.pipeline_for_slot(rating.slot_index)
        if pipeline_filter and pid not in pipeline_filter:
            continue
        bucket = pipeline_bucket(inst.country, pid)
        hist = bucket["question_histograms"].setdefault(
            rating.question_id, {str(v): 0 for v in range(1, 6)}
        )
        hist[str(rating.value)] += 1

    # per-instance median-based outcomes
    for inst in instance_map.values():
        visual_q, fit_q, culture_q = GATES[inst.dataset_kind]
        rel_source = medians.get((inst.instance_id, culture_q, SOURCE_SLOT))
        for assignment in inst.outputs:
            pid = assignment.pipeline_id
            if pipeline_filter and pid not in pipeline_filter:
                continue
            slot = assignment.slot_index
            visual = medians.get((inst.instance_id, visual_q, slot))
            fit = medians.get((inst.instance_id, fit_q, slot))
            rel_slot = medians.get((inst.instance_id, culture_q, slot))
            if None in (visual, fit, rel_source, rel_slot):
                continue  # incomplete instances stay out of the rate
            bucket = pipeline_bucket(inst.country, pid)
            bucket["delta_buckets"][delta_bucket(rel_source, rel_slot).label] += 1
            bucket["success"]["total"] += 1
            if _success_for(inst.dataset_kind, visual, fit, rel_source, rel_slot):
                bucket["success"]["count"] += 1

    # per-rater variant of the success computation
    per_rater: dict[tuple[str, str, str, int], int] = {}
    for r in ratings:
        per_rater[(r.rater_id, r.instance_id, r.question_id, r.slot_index)] = r.value
    raters_by_instance: dict[str, set[str]] = {}
    for rater, instance_id, _q, _s in per_rater:
        raters_by_instance.setdefault(instance_id, set()).add(rater)
    for inst in instance_map.values():
        visual_q, fit_q, culture_q = GATES[inst.dataset_kind]
        for rater in sorted(raters_by_instance.get(inst.instance_id, ())):
            rel_source = per_rater.get((rater, inst.instance_id, culture_q, SOURCE_SLOT))
            for assignment in inst.outputs:
                pid = assignment.pipeline_id
                if pipeline_filter and pid not in pipeline_filter:
                    continue
                slot = assignment.slot_index
                visual = per_rater.get((rater, inst.instance_id, visual_q, slot))
                fit = per_rater.get((rater, inst.instance_id, fit_q, slot))
                rel_slot = per_rater.get((rater, inst.instance_id, culture_q, slot))
                if None in (visual, fit, rel_source, rel_slot):
                    continue
                bucket = pipeline_bucket(inst.country, pid)
                bucket["success_per_rater"]["total"] += 1
                if _success_for(inst.dataset_kind, visual, fit, rel_source, rel_slot):
                    bucket["success_per_rater"]["count"] += 1

    for c in countries.values():
        for bucket in c["pipelines"].values():
            for section in ("success", "success_per_rater"):
                total = bucket[section]["total"]
                bucket[section]["rate"] = bucket[section]["count"] / total if total else 0.0

    report = {
        "store_digest": snapshot,
        "instances_known": len(instance_map),
        "ratings_total": len(ratings),
        "raters": sorted({r.rater_id for r in ratings}),
        "rater_combination": "median",
        "countries": countries,
    }
    return AggregateReport(report=report)


def plot_report(report: AggregateReport, out_dir: str | Path) -> list[Path]:
    """Render one rating-distribution bar chart per question (pipelines side by
    side, summed over countries)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_question: dict[str, dict[str, list[int]]] = {}
    for country in report.report.get("countries", {}).values():
        for pid, bucket in country["pipelines"].items():
            for qid, hist in bucket["question_histograms"].items():
                rows = per_question.setdefault(qid, {})
                counts = rows.setdefault(pid, [0] * 5)
                for v in range(1, 6):
                    counts[v - 1] += hist[str(v)]

    written = []
    for qid, by_pipeline in sorted(per_question.items()):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        width = 0.8 / max(1, len(by_pipeline))
        for i, (pid, counts) in enumerate(sorted(by_pipeline.items())):
            xs = [v + i * width for v in range(1, 6)]
            ax.bar(xs, counts, width=width, label=pid)
        ax.set_title(f"{qid}: {QUESTIONS[qid].text}"[:80])
        ax.set_xlabel("rating")
        ax.set_ylabel("count")
        ax.set_xticks([v + 0.4 for v in range(1, 6)], [str(v) for v in range(1, 6)])
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out / f"{qid}.png"
        fig.savefig(path, metadata={"Software": None})
        plt.close(fig)
        written.append(path)
    return written
