"""HTTP service exposing interactive discovery sessions to the explorer UI.

All bodies are JSON. Sessions are held in memory with idle expiry; requests
touching the same session are serialized by a per-session lock while the
taxonomy itself is shared read-only.
"""

from __future__ import annotations

import itertools
import threading
import time
from contextlib import contextmanager
from dataclasses import replace

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .discovery import DiscoveryConfig, DiscoverySession, back, drill, start_session
from .errors import InvalidChoiceError, PreconditionError, QrefineError, StateError
from .filters import FilterRule, Gazetteer, default_gazetteer, default_rules
from .optimizer import STATUS_BUDGET_EXCEEDED
from .pipeline import METHODS, PipelineConfig, build_dataset
from .taxonomy import Taxonomy


class SessionStore:
    """Map of live sessions: monotonically unique ids, idle expiry, per-session locks."""

    def __init__(self, ttl_seconds: float = 1800.0):
        self._ttl = ttl_seconds
        self._guard = threading.Lock()
        self._counter = itertools.count(1)
        self._sessions: dict[str, tuple[DiscoverySession, threading.Lock, float]] = {}

    def _sweep(self) -> None:
        now = time.monotonic()
        stale = [sid for sid, (_, _, seen) in self._sessions.items() if now - seen > self._ttl]
        for sid in stale:
            del self._sessions[sid]

    def create(self, factory) -> tuple[str, DiscoverySession]:
        with self._guard:
            self._sweep()
            sid = f"s{next(self._counter):08d}"
            session = factory(sid)
            self._sessions[sid] = (session, threading.Lock(), time.monotonic())
            return sid, session

    def checkout(self, sid: str):
        """Context manager holding the session's exclusive lock.

        Raises KeyError immediately (before entry) for unknown or expired ids.
        """
        with self._guard:
            self._sweep()
            entry = self._sessions.get(sid)
            if entry is None:
                raise KeyError(sid)
            session, lock, _ = entry

        @contextmanager
        def _held():
            with lock:
                yield session
            with self._guard:
                if sid in self._sessions:
                    self._sessions[sid] = (session, lock, time.monotonic())

        return _held()

    def __len__(self) -> int:
        return len(self._sessions)


def _node_view(taxonomy: Taxonomy, session: DiscoverySession) -> dict:
    offer = session.offer()
    answers = session.current_answers
    offered = []
    union_bits = 0
    for tid in offer.offered:
        member_answers = taxonomy.answers(tid) & answers
        union_bits |= member_answers.bits
        offered.append(
            {"name": taxonomy.type_name(tid), "answer_count": member_answers.cardinality}
        )
    node = {
        "type": taxonomy.type_name(session.current),
        "answer_count": answers.cardinality,
        "offered": offered,
        "covered_count": int(union_bits.bit_count()),
        "terminal": offer.terminal,
    }
    if offer.solver_status is not None:
        node["status"] = offer.solver_status
    if offer.terminal:
        node["entities"] = sorted(taxonomy.entity_names(answers))
    return node


def _path_view(taxonomy: Taxonomy, session: DiscoverySession) -> list[dict]:
    nodes = [session.root] + [step.chosen for step in session.path]
    return [
        {
            "type": taxonomy.type_name(tid),
            "answer_count": taxonomy.answers(tid).cardinality,
        }
        for tid in nodes[:-1]
    ]


class CreateSessionBody(BaseModel):
    query: str
    k: int | None = None
    filters: bool = True


class DrillBody(BaseModel):
    choice: str


def create_app(
    taxonomy: Taxonomy,
    rules: tuple[FilterRule, ...] | None = None,
    gazetteer: Gazetteer | None = None,
    k_default: int = 5,
    solver_budget: float = 1.0,
    listing_threshold: int = 10,
    session_ttl: float = 1800.0,
    default_seed: int = 0,
) -> FastAPI:
    app = FastAPI(title="qrefine explorer API")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(ttl_seconds=session_ttl)
    app.state.store = store
    rules = rules if rules is not None else default_rules()
    gazetteer = gazetteer if gazetteer is not None else default_gazetteer()
    base_config = DiscoveryConfig(
        k=k_default,
        listing_threshold=listing_threshold,
        solver_budget=solver_budget,
        rules=rules,
        gazetteer=gazetteer,
    )
    type_names = sorted(taxonomy.type_names())

    def node_response(session: DiscoverySession, created: str | None = None):
        node = _node_view(taxonomy, session)
        payload = {"id": created, "node": node} if created else node
        if node.get("status") == STATUS_BUDGET_EXCEEDED:
            return JSONResponse(status_code=503, content=payload)
        return payload

    @app.get("/types")
    def list_types(prefix: str = "", limit: int = 20):
        needle = prefix.lower()
        out = []
        for name in type_names:
            if not name.lower().startswith(needle):
                continue
            tid = taxonomy.type_id(name)
            out.append(
                {
                    "name": name,
                    "answer_count": taxonomy.answers(tid).cardinality,
                    "subtype_count": len(taxonomy.subtypes(tid)),
                }
            )
            if len(out) >= limit:
                break
        return out

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        if not taxonomy.has_type(body.query):
            raise HTTPException(404, f"unknown type {body.query!r}")
        k = body.k or k_default
        config = replace(base_config, k=k, filters_enabled=body.filters)
        sid, session = store.create(
            lambda new_id: start_session(taxonomy, body.query, k=k, config=config,
                                         session_id=new_id)
        )
        return node_response(session, created=sid)

    def checkout_or_404(sid: str):
        try:
            return store.checkout(sid)
        except KeyError:
            raise HTTPException(404, f"unknown session {sid!r}") from None

    @app.post("/sessions/{sid}/drill")
    def drill_session(sid: str, body: DrillBody):
        with checkout_or_404(sid) as session:
            if not taxonomy.has_type(body.choice):
                raise HTTPException(422, f"unknown type {body.choice!r}")
            try:
                drill(session, body.choice)
            except StateError as exc:
                raise HTTPException(409, str(exc)) from exc
            except InvalidChoiceError as exc:
                raise HTTPException(422, str(exc)) from exc
            return node_response(session)

    @app.post("/sessions/{sid}/back")
    def back_session(sid: str):
        with checkout_or_404(sid) as session:
            try:
                back(session)
            except StateError as exc:
                raise HTTPException(409, str(exc)) from exc
            return node_response(session)

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        with checkout_or_404(sid) as session:
            return {"path": _path_view(taxonomy, session), "node": _node_view(taxonomy, session)}

    @app.get("/queries/{name}/refinements")
    def query_refinements(name: str, method: str = "qresp", k: int = 5, seed: int | None = None):
        if not taxonomy.has_type(name):
            raise HTTPException(404, f"unknown type {name!r}")
        if method not in METHODS:
            raise HTTPException(422, f"unknown method {method!r}")
        cfg = PipelineConfig(
            k=k,
            seed=seed if seed is not None else default_seed,
            solver_budget=solver_budget,
            method=method,
        )
        try:
            record = next(
                iter(build_dataset(taxonomy, cfg, rules=rules, gazetteer=gazetteer,
                                   queries=[name]))
            )
        except PreconditionError as exc:
            raise HTTPException(422, str(exc)) from exc
        except QrefineError as exc:
            raise HTTPException(422, str(exc)) from exc
        payload = {
            "query": record.query,
            "method": record.method,
            "refinements": list(record.refinements),
            "candidates_all": record.candidates_all,
            "candidates_kept": record.candidates_kept,
            "seed": record.seed,
        }
        if record.cost is not None:
            payload["cost"] = record.cost
        if record.status is not None:
            payload["status"] = record.status
        if record.status == STATUS_BUDGET_EXCEEDED:
            return JSONResponse(status_code=503, content=payload)
        return payload

    return app
