"""HTTP facade for the rating workflow.

Endpoints (JSON bodies):
    GET  /api/session/next?rater_id=&country=   blinded instance or completion
    POST /api/ratings                            one rating or a list of them
    GET  /api/progress?rater_id=
    GET  /api/report
    GET  /img/{digest}                           static image bytes
    GET  /                                       rating UI, when one is mounted

Raters only ever see slot indices; the slot-to-pipeline mapping never leaves
the server. Writes funnel through the single-writer store; reads are cheap
snapshots.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import FileResponse, JSONResponse, Response

from ..errors import InapplicableQuestion, OutOfScale, UnknownInstance
from .aggregate import aggregate
from .instances import EvalInstance, blinded_payload
from .questions import questions_for, source_question_for
from .store import SOURCE_SLOT, Rating, RatingsStore, record_rating


def _required_keys(instance: EvalInstance) -> set[tuple[str, int]]:
    """Every (question, slot) a rater must answer to complete an instance."""
    keys: set[tuple[str, int]] = set()
    for q in questions_for(instance.dataset_kind):
        for assignment in instance.outputs:
            keys.add((q.id, assignment.slot_index))
    keys.add((source_question_for(instance.dataset_kind).id, SOURCE_SLOT))
    return keys


class EvalService:
    def __init__(
        self,
        instances: list[EvalInstance],
        store: RatingsStore,
        image_paths: dict[str, Path] | None = None,
        raters_per_instance: int | None = None,
    ):
        self.instances = {inst.instance_id: inst for inst in instances}
        self.order = [inst.instance_id for inst in instances]
        self.store = store
        self.image_paths = image_paths or {}
        self.skips: dict[tuple[str, str], str] = {}  # (rater, instance) -> reason
        # how many distinct raters may claim one instance; None = unlimited
        self.raters_per_instance = raters_per_instance

    def _completed_by(self, rater_id: str) -> set[str]:
        answered: dict[str, set[tuple[str, int]]] = {}
        for key, _rating in self.store.latest().items():
            krater, instance_id, question_id, slot = key
            if krater == rater_id:
                answered.setdefault(instance_id, set()).add((question_id, slot))
        done = set()
        for instance_id, got in answered.items():
            inst = self.instances.get(instance_id)
            if inst is not None and _required_keys(inst) <= got:
                done.add(instance_id)
        return done

    def _claimants(self) -> dict[str, set[str]]:
        """instance -> raters with any rating on it (a claim, even if partial)."""
        claims: dict[str, set[str]] = {}
        for (rater, instance_id, _q, _s) in self.store.latest():
            claims.setdefault(instance_id, set()).add(rater)
        return claims

    def next_for(self, rater_id: str, country: str | None = None) -> EvalInstance | None:
        """First unfinished, unskipped instance in plan order; repeated calls
        return the same instance until it is completed (idempotent assignment).
        With a raters_per_instance cap, an instance already claimed by that
        many other raters is passed over (a rater's own partial work always
        stays theirs)."""
        done = self._completed_by(rater_id)
        claims = self._claimants() if self.raters_per_instance is not None else {}
        for instance_id in self.order:
            inst = self.instances[instance_id]
            if country and inst.country != country:
                continue
            if instance_id in done or (rater_id, instance_id) in self.skips:
                continue
            if self.raters_per_instance is not None:
                others = claims.get(instance_id, set()) - {rater_id}
                if len(others) >= self.raters_per_instance:
                    continue
            return inst
        return None

    def progress(self, rater_id: str, country: str | None = None) -> dict:
        pool = [i for i in self.order if not country or self.instances[i].country == country]
        done = self._completed_by(rater_id)
        skipped = {i for (r, i) in self.skips if r == rater_id}
        return {
            "rater_id": rater_id,
            "total": len(pool),
            "completed": len([i for i in pool if i in done]),
            "skipped": len([i for i in pool if i in skipped]),
            "remaining": len([i for i in pool if i not in done and i not in skipped]),
        }


def create_app(
    instances: list[EvalInstance],
    store: RatingsStore,
    image_paths: dict[str, Path] | None = None,
    ui_dir: str | Path | None = None,
    raters_per_instance: int | None = None,
) -> FastAPI:
    service = EvalService(instances, store, image_paths, raters_per_instance)
    app = FastAPI(title="transcreate rating service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )
    app.state.service = service

    @app.get("/api/session/next")
    def session_next(rater_id: str, country: str | None = None):
        inst = service.next_for(rater_id, country)
        if inst is None:
            return {"done": True, "progress": service.progress(rater_id, country)}
        return blinded_payload(inst)

    @app.post("/api/ratings")
    async def post_ratings(request: Request):
        body = await request.json()
        items = body if isinstance(body, list) else [body]
        recorded = 0
        try:
            for item in items:
                if item.get("skip"):
                    service.skips[(item["rater_id"], item["instance_id"])] = item.get("reason", "")
                    continue
                rating = Rating(
                    instance_id=item["instance_id"],
                    rater_id=item["rater_id"],
                    question_id=item["question_id"],
                    slot_index=int(item.get("slot_index", SOURCE_SLOT)),
                    value=int(item["value"]),
                    free_comment=item.get("free_comment"),
                )
                record_rating(service.store, service.instances, rating)
                recorded += 1
        except UnknownInstance as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except (InapplicableQuestion, OutOfScale, KeyError, ValueError) as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return {"ok": True, "recorded": recorded}

    @app.get("/api/progress")
    def progress(rater_id: str, country: str | None = None):
        return service.progress(rater_id, country)

    @app.get("/api/report")
    def report():
        result = aggregate(service.store, list(service.instances.values()))
        return JSONResponse(content=result.report)

    @app.get("/img/{digest}")
    def image(digest: str):
        path = service.image_paths.get(digest)
        if path is None or not Path(path).is_file():
            raise HTTPException(status_code=404, detail="unknown image digest")
        return Response(content=Path(path).read_bytes(), media_type="image/png")

    if ui_dir is not None and Path(ui_dir).is_dir():
        index_html = Path(ui_dir) / "index.html"

        @app.get("/")
        def ui_index():
            return FileResponse(index_html)

        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir)), name="ui")

    return app


def image_paths_for_instances(instances: list[EvalInstance]) -> dict[str, Path]:
    """Digest -> file map for serving instance images."""
    paths: dict[str, Path] = {}
    for inst in instances:
        if inst.source_path:
            paths[inst.source_digest] = Path(inst.source_path)
        for assignment in inst.outputs:
            if assignment.image_path:
                paths[assignment.image_digest] = Path(assignment.image_path)
    return paths
