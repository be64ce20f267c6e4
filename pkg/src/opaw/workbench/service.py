"""Loopback-first HTTP service exposing sessions, solves, and benchmark data.

Sessions are persisted as JSON documents and every mutation happens under a
per-session lock, so the questionnaire survives restarts and concurrent
clients cannot interleave half-recorded answers.
"""

from __future__ import annotations

import importlib.resources as resources
import json
from contextlib import contextmanager
from pathlib import Path

from fastapi import Body, FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import AliasChoices, BaseModel, Field

from .. import elicitation
from ..benchmarks import spearman
from ..errors import (
    NoPendingQuestionError,
    OpawError,
    SchemaError,
    SessionExhaustedError,
    UnknownIdError,
)
from ..opa import aggregate_weights, solve_opa_closed_form
from ..opa_pr import solve_opa_pr
from ..opa_prs import PrsInstance, solve_opa_prs
from . import documents
from .store import JsonStore, default_data_dir, new_ulid

_STATUS_BY_CODE = {
    UnknownIdError.code: 404,
    NoPendingQuestionError.code: 409,
    SessionExhaustedError.code: 409,
}


@contextmanager
def _translate_errors():
    try:
        yield
    except OpawError as exc:
        status = _STATUS_BY_CODE.get(exc.code, 400 if exc.category == "validation" else 500)
        detail = {"code": exc.code, "message": str(exc)}
        if isinstance(exc, SchemaError):
            detail["violations"] = [{"path": p, "message": m} for p, m in exc.violations]
        raise HTTPException(status_code=status, detail=detail) from exc


class SessionCreate(BaseModel):
    n_ranks: int = Field(validation_alias=AliasChoices("n_ranks", "R"))
    lipschitz: float = Field(validation_alias=AliasChoices("lipschitz", "G"))
    questions: int = Field(validation_alias=AliasChoices("questions", "L"))
    seed: int = 0


class AnswerBody(BaseModel):
    answer: str


def _question_payload(question) -> dict:
    return {
        "index": question.index,
        "r1": question.r1,
        "r2": question.r2,
        "r3": question.r3,
        "p": question.p,
        "c_lo": question.c_lo,
        "c_hi": question.c_hi,
    }


def _session_summary(doc_id: str, session) -> dict:
    return {
        "id": doc_id,
        "status": session.status,
        "n_ranks": session.n_ranks,
        "lipschitz": session.lipschitz,
        "questions_total": session.target_questions,
        "questions_asked": len(session.asked),
        "budget_warning": session.budget_warning,
        "pending": _question_payload(session.pending) if session.pending else None,
    }


def _band_payload(session) -> dict:
    grid, lower, upper = session.utility_band()
    return {"grid": grid.tolist(), "lower": lower.tolist(), "upper": upper.tolist()}


def create_app(data_dir: str | Path | None = None, ui_dir: str | Path | None = None) -> FastAPI:
    store = JsonStore(data_dir if data_dir is not None else default_data_dir())
    app = FastAPI(
        title="ordinal priority workbench",
        version="0.1.0",
        openapi_url="/api/spec",
    )

    def load_session_doc(session_id: str) -> dict:
        return store.load("sessions", session_id)

    def save_session(session_id: str, session, band_history: list) -> None:
        doc = session.to_dict()
        doc["band_history"] = band_history
        store.save("sessions", session_id, doc)

    def hydrate(session_id: str):
        doc = load_session_doc(session_id)
        history = doc.get("band_history", [])
        return elicitation.ElicitationSession.from_dict(doc), history

    @app.post("/api/sessions", status_code=201)
    def create_session(body: SessionCreate):
        with _translate_errors():
            session = elicitation.start_session(
                body.n_ranks, body.lipschitz, body.questions, body.seed
            )
            session_id = new_ulid()
            with store.lock(session_id):
                band = _band_payload(session)
                save_session(session_id, session, [band])
            return _session_summary(session_id, session)

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        with _translate_errors():
            session, _ = hydrate(session_id)
            return _session_summary(session_id, session)

    @app.get("/api/sessions/{session_id}/question")
    def get_question(session_id: str):
        with _translate_errors():
            with store.lock(session_id):
                session, history = hydrate(session_id)
                question = session.next_question()
                save_session(session_id, session, history)
            return _question_payload(question)

    @app.post("/api/sessions/{session_id}/answer")
    def post_answer(session_id: str, body: AnswerBody):
        with _translate_errors():
            with store.lock(session_id):
                session, history = hydrate(session_id)
                session.record_answer(body.answer)
                if session.status != elicitation.INCONSISTENT:
                    history = history + [_band_payload(session)]
                save_session(session_id, session, history)
            return _session_summary(session_id, session)

    @app.get("/api/sessions/{session_id}/band")
    def get_band(session_id: str):
        with _translate_errors():
            session, history = hydrate(session_id)
            current = _band_payload(session)
            return {**current, "history": history}

    @app.post("/api/sessions/{session_id}/finalize")
    def finalize_session(session_id: str):
        with _translate_errors():
            session, _ = hydrate(session_id)
            spec = session.finalize()
            return {
                "id": session_id,
                "n_ranks": session.n_ranks,
                "lipschitz": session.lipschitz,
                "constraints": [
                    documents.moment_constraint_to_dict(c) for c in spec.constraints
                ],
            }

    def _store_result(doc: dict) -> dict:
        result_id = new_ulid()
        store.save("results", result_id, doc)
        return {"id": result_id, **doc}

    @app.post("/api/solve/opa")
    def solve_opa(body: dict = Body(...)):
        with _translate_errors():
            profile = documents.ranking_profile_from_document(body)
            solution = solve_opa_closed_form(profile)
            groups = aggregate_weights(solution)
            doc = documents.result_document_opa(
                solution, groups, documents.provenance("opa", solver_path="closed_form")
            )
            return _store_result(doc)

    @app.post("/api/solve/opa-pr")
    def solve_pr(body: dict = Body(...)):
        with _translate_errors():
            instance = documents.pr_instance_from_document(
                body, session_loader=lambda sid: store.load("sessions", sid)
            )
            result = solve_opa_pr(instance)
            doc = documents.result_document_pr(
                result, documents.provenance("opa-pr", solver_path="closed_form")
            )
            return _store_result(doc)

    @app.post("/api/solve/opa-prs")
    def solve_prs(body: dict = Body(...), alpha: float | None = None):
        with _translate_errors():
            instance = documents.pr_instance_from_document(
                body, session_loader=lambda sid: store.load("sessions", sid)
            )
            stage = solve_opa_pr(instance)
            level = alpha if alpha is not None else body.get("alpha", 0.9)
            intervals = body.get("expert_rank_intervals")
            if intervals is None:
                nominal = [float(t) for t in body["expert_ranks"]]
                intervals = [[t, t] for t in nominal]
            prs = PrsInstance(stage.profile, stage.table, intervals, float(level))
            result = solve_opa_prs(prs, instance.ranking_profile().rank_to_alternative())
            doc = documents.result_document_prs(
                result, documents.provenance("opa-prs", alpha=float(level))
            )
            return _store_result(doc)

    @app.get("/api/results/{result_id}")
    def get_result(result_id: str):
        with _translate_errors():
            return store.load("results", result_id)

    @app.get("/api/bench/heatmap")
    def bench_heatmap():
        with _translate_errors():
            raw = json.loads(
                resources.files("opaw.fixtures").joinpath("table2_rankings.json").read_text()
            )
            methods = list(raw["methods"].keys())
            matrix = [
                [spearman(raw["methods"][a], raw["methods"][b]) for b in methods]
                for a in methods
            ]
            return {"methods": methods, "matrix": matrix}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
