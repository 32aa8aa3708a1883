"""HTTP face of the engine: one endpoint per store or pipeline operation.

All success bodies are canonical JSON bytes, so identical state yields
identical responses across restarts. The view endpoint in particular
returns exactly the bytes the in-process pipeline would serialize.
"""

from __future__ import annotations

import socket
import threading
from dataclasses import replace
from typing import Literal

import uvicorn
from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from pydantic import BaseModel, ConfigDict

from ..errors import (
    BindFailure,
    MalformedReport,
    UnknownMetric,
    UnknownProject,
    UnknownSolution,
    VersionConflict,
    WardenError,
)
from ..fixtime import estimate_to_doc
from ..identity import assign_fingerprints
from ..ingest import (
    canonical_json_bytes,
    run_from_doc,
    triage_state_from_doc,
    triage_state_to_doc,
)
from ..knowledge import (
    PurgePolicy,
    Vote,
    comment_to_doc,
    solution_to_doc,
)
from ..metrics import (
    Direction,
    build_deltas,
    fit_impact,
    impact_to_doc,
    pattern_counts,
    recommend,
)
from ..model import Confidence, FpMode
from ..triage import TriageConfig, apply_level, view_to_doc
from .store import SyncStore

DAY_SECONDS = 86400.0

_NOT_FOUND = (UnknownSolution, UnknownProject, UnknownMetric)


class CommentIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str
    author: str | None = None
    fingerprint: str | None = None


class SolutionIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    text: str
    codeSnippet: str | None = None


class VoteIn(BaseModel):
    model_config = ConfigDict(extra="forbid")
    direction: Literal["UP", "DOWN"]


class FixTimeIn(BaseModel):
    # extra="forbid" is load-bearing: fix durations stay anonymous, so a
    # client smuggling `author`/`user` must be rejected, not ignored.
    model_config = ConfigDict(extra="forbid")
    patternId: str
    minutes: float


class TriagePut(BaseModel):
    model_config = ConfigDict(extra="forbid")
    falsePositives: dict[str, str] = {}
    severityOverrides: dict[str, int] = {}
    dormantSince: dict[str, str] = {}
    version: int


def _json(doc, status_code: int = 200) -> Response:
    return Response(
        content=canonical_json_bytes(doc),
        status_code=status_code,
        media_type="application/json",
    )


def _status_for(exc: WardenError) -> int:
    if isinstance(exc, _NOT_FOUND):
        return 404
    if isinstance(exc, VersionConflict):
        return 409
    return 400


def create_app(store: SyncStore) -> FastAPI:
    app = FastAPI(title="warden sync server", docs_url=None, redoc_url=None)

    @app.exception_handler(WardenError)
    async def _warden_error(request: Request, exc: WardenError) -> Response:
        doc = {"error": {"code": type(exc).__name__, "message": str(exc)}}
        return _json(doc, status_code=_status_for(exc))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(
        request: Request, exc: RequestValidationError
    ) -> Response:
        doc = {"error": {"code": "ValidationError", "message": str(exc.errors())}}
        return _json(doc, status_code=400)

    # -- knowledge ------------------------------------------------------

    @app.post("/api/v1/patterns/{pattern_id}/comments", status_code=201)
    def post_comment(pattern_id: str, body: CommentIn) -> Response:
        comment = store.add_comment(
            pattern_id, body.text, author=body.author, fingerprint=body.fingerprint
        )
        return _json(comment_to_doc(comment), status_code=201)

    @app.get("/api/v1/patterns/{pattern_id}/comments")
    def get_comments(pattern_id: str) -> Response:
        comments = store.knowledge.list_comments(pattern_id)
        return _json([comment_to_doc(c) for c in comments])

    @app.post("/api/v1/patterns/{pattern_id}/solutions", status_code=201)
    def post_solution(pattern_id: str, body: SolutionIn) -> Response:
        solution = store.add_solution(
            pattern_id, body.text, code_snippet=body.codeSnippet
        )
        return _json(solution_to_doc(solution), status_code=201)

    @app.get("/api/v1/patterns/{pattern_id}/solutions")
    def get_solutions(pattern_id: str) -> Response:
        solutions = store.knowledge.list_solutions(pattern_id)
        return _json([solution_to_doc(s) for s in solutions])

    @app.post("/api/v1/solutions/{solution_id}/votes")
    def post_vote(solution_id: str, body: VoteIn) -> Response:
        solution = store.vote(solution_id, Vote(body.direction))
        return _json(solution_to_doc(solution))

    # -- fix times ------------------------------------------------------

    @app.post("/api/v1/fixtimes", status_code=201)
    def post_fixtime(body: FixTimeIn) -> Response:
        record = store.record_fix(body.patternId, body.minutes)
        return _json(
            {
                "patternId": record.pattern_id,
                "minutes": record.minutes,
                "source": record.source.value,
            },
            status_code=201,
        )

    @app.get("/api/v1/fixtimes/{pattern_id}/estimate")
    def get_estimate(pattern_id: str) -> Response:
        return _json(estimate_to_doc(store.fixtimes.estimate(pattern_id)))

    # -- projects -------------------------------------------------------

    @app.post("/api/v1/projects/{project_id}/runs", status_code=201)
    def post_run(project_id: str, doc: dict) -> Response:
        run = run_from_doc(doc)
        if any(not f.fingerprint for f in run.findings):
            run = replace(run, findings=tuple(assign_fingerprints(run.findings)))
        store.add_run(project_id, run)
        state = store.project(project_id)
        return _json(
            {
                "runId": run.run_id,
                "findingCount": len(run.findings),
                "triageVersion": state.version,
            },
            status_code=201,
        )

    @app.get("/api/v1/projects/{project_id}/triage")
    def get_triage(project_id: str) -> Response:
        state = store.project(project_id)
        doc = triage_state_to_doc(state.triage)
        doc["version"] = state.version
        return _json(doc)

    @app.put("/api/v1/projects/{project_id}/triage")
    def put_triage(project_id: str, body: TriagePut) -> Response:
        triage = triage_state_from_doc(
            {
                "falsePositives": body.falsePositives,
                "severityOverrides": body.severityOverrides,
                "dormantSince": body.dormantSince,
            }
        )
        version = store.replace_triage(project_id, triage, body.version)
        return _json({"version": version})

    @app.get("/api/v1/projects/{project_id}/view")
    def get_view(
        project_id: str,
        level: int = Query(default=5, ge=0, le=6),
        minConfidence: str = Query(default="normal"),
        maxRank: int = Query(default=9, ge=1, le=20),
        cap: int = Query(default=8, ge=1),
        seed: int | None = Query(default=None),
        fpMode: str = Query(default="highlight"),
    ) -> Response:
        state = store.project(project_id)
        run = state.latest_run()
        config = TriageConfig(
            level=level,
            min_confidence=_confidence(minConfidence),
            max_rank=maxRank,
            cap=cap,
            random_seed=seed,
            fp_mode=_fp_mode(fpMode),
        )
        view = apply_level(run, state.triage, config)
        return _json(view_to_doc(view))

    @app.get("/api/v1/projects/{project_id}/impact")
    def get_impact(project_id: str) -> Response:
        state = store.project(project_id)
        model = fit_impact(build_deltas(state.runs))
        return _json(impact_to_doc(model))

    @app.get("/api/v1/projects/{project_id}/recommendations")
    def get_recommendations(
        project_id: str,
        metric: str,
        direction: Literal["decrease", "increase"] = "decrease",
    ) -> Response:
        state = store.project(project_id)
        model = fit_impact(build_deltas(state.runs))
        counts = pattern_counts(state.latest_run())
        recs = recommend(model, metric, Direction(direction.upper()), counts)
        betas = model.per_metric[metric].betas
        return _json(
            [
                {
                    "patternId": pattern,
                    "count": counts.get(pattern, 0),
                    "beta": betas[pattern],
                    "projectedDelta": projection,
                }
                for pattern, projection in recs
            ]
        )

    return app


def _confidence(text: str) -> Confidence:
    try:
        return Confidence(text.upper())
    except ValueError:
        raise MalformedReport(f"unknown confidence {text!r}") from None


def _fp_mode(text: str) -> FpMode:
    try:
        return FpMode(text.upper())
    except ValueError:
        raise MalformedReport(f"unknown fpMode {text!r}") from None


class PurgeScheduler:
    """Daily purge of never-endorsed solutions, on a daemon thread."""

    def __init__(
        self,
        store: SyncStore,
        policy: PurgePolicy,
        interval_seconds: float = DAY_SECONDS,
    ) -> None:
        self._store = store
        self._policy = policy
        self._interval = interval_seconds
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def start(self) -> None:
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()

    def _loop(self) -> None:
        while not self._stop.wait(self._interval):
            self._store.purge_solutions(self._policy)


def bind_socket(addr: str) -> socket.socket:
    """Bind ``host:port`` eagerly so failures surface before serving."""
    host, _, port_text = addr.rpartition(":")
    if not host or not port_text:
        raise BindFailure(f"address must be host:port, got {addr!r}")
    try:
        port = int(port_text)
    except ValueError:
        raise BindFailure(f"invalid port in {addr!r}") from None
    try:
        return socket.create_server((host, port))
    except OSError as exc:
        raise BindFailure(f"cannot bind {addr}: {exc}") from exc


def serve(
    addr: str,
    storage: str,
    purge_policy: PurgePolicy | None = None,
    purge_interval_seconds: float = DAY_SECONDS,
) -> None:
    """Run the sync server until interrupted.

    Raises BindFailure if the address is taken and CorruptJournal (with
    the last valid sequence number) if the storage directory holds a
    damaged journal; a damaged journal is never silently truncated.
    """
    sock = bind_socket(addr)
    try:
        store = SyncStore.open(storage)
        app = create_app(store)
        scheduler = PurgeScheduler(
            store, purge_policy or PurgePolicy(), purge_interval_seconds
        )
        scheduler.start()
        config = uvicorn.Config(app, log_level="warning")
        server = uvicorn.Server(config)
        try:
            server.run(sockets=[sock])
        finally:
            scheduler.stop()
            store.write_snapshot()
    finally:
        sock.close()
