"""HTTP service wrapping the engine.

The service is read-mostly: artifacts are loaded once at startup and shared
across requests. Build endpoints operate on server-local paths and are meant
for operator use, mirroring the CLI build commands.
"""

from __future__ import annotations

import os
from dataclasses import replace

from fastapi import FastAPI, HTTPException

from ..config import SunarConfig, load_config
from ..corpus import ingest_corpus
from ..embeddings import embed_corpus, load_store, save_store
from ..engine import SunarEngine, answers_report, build_embedder, load_questions
from ..errors import SunarError
from ..evaluation import load_qrels, load_run, metrics_report
from ..graph import build_graph, save_graph
from ..index import build_term_index, save_index
from .schemas import (
    AskRequest,
    AskResponse,
    BuildRequest,
    BuildResponse,
    EvalRequest,
    EvalResponse,
    HealthResponse,
    RetrieveRequest,
    RetrieveResponse,
    RunRequest,
    RunResponse,
    ScoredDocModel,
    StepModel,
)

CONFIG_ENV = "SUNAR_CONFIG"


def create_app(engine: SunarEngine | None = None, config: SunarConfig | None = None) -> FastAPI:
    app = FastAPI(title="sunar", version="0.1.0")

    if engine is None:
        if config is None:
            config_path = os.environ.get(CONFIG_ENV)
            if config_path is None:
                raise SunarError(f"no engine supplied and {CONFIG_ENV} is unset")
            config = load_config(config_path)
        engine = SunarEngine.from_config(config)
    app.state.engine = engine

    def _engine() -> SunarEngine:
        return app.state.engine

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        eng = _engine()
        return HealthResponse(status="ok", corpus_size=len(eng.corpus), graph_nodes=len(eng.graph))

    @app.post("/retrieve", response_model=RetrieveResponse)
    def retrieve(request: RetrieveRequest) -> RetrieveResponse:
        eng = _engine()
        try:
            if request.rerank:
                ranked, trace = eng.rerank(request.query, with_feedback=request.asu)
                ranked = ranked.top(request.k)
                trace_dicts = trace.to_dicts()
            else:
                ranked = eng.retrieve(request.query, request.k)
                trace_dicts = None
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return RetrieveResponse(
            query=request.query,
            results=[ScoredDocModel(**_doc_fields(entry)) for entry in ranked],
            trace=trace_dicts,
        )

    @app.post("/ask", response_model=AskResponse)
    def ask(request: AskRequest) -> AskResponse:
        eng = _engine()
        try:
            path = eng.answer(
                request.question,
                asu_enabled=request.asu_enabled,
                mer_enabled=request.mer_enabled,
                l=request.l,
            )
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        traces = [step.trace.to_dicts() for step in path.steps] if request.include_trace else None
        return AskResponse(
            question=path.question,
            answer=path.reported_answer,
            final_answer=path.final_answer,
            mer_answer=path.mer_answer,
            steps=[
                StepModel(
                    index=step.index,
                    sub_question=step.sub_question,
                    intermediate_answer=step.intermediate_answer,
                    evidence=[ScoredDocModel(**_doc_fields(entry)) for entry in step.evidence],
                )
                for step in path.steps
            ],
            error=path.error,
            traces=traces,
        )

    @app.post("/run", response_model=RunResponse)
    def run(request: RunRequest) -> RunResponse:
        eng = _engine()
        try:
            questions = load_questions(request.questions_path)
            qrels = load_qrels(request.qrels_path) if request.qrels_path else None
            results = eng.run_questions(
                questions,
                workers=request.workers,
                asu_enabled=request.asu_enabled,
                mer_enabled=request.mer_enabled,
                l=request.l,
            )
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        report = answers_report(results, questions, qrels)
        return RunResponse(answers=[result.to_dict() for result in results], report=report)

    @app.post("/eval", response_model=EvalResponse)
    def evaluate(request: EvalRequest) -> EvalResponse:
        try:
            run_data = load_run(request.run_path)
            qrels = load_qrels(request.qrels_path)
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return EvalResponse(report=metrics_report(run_data, qrels, request.k))

    @app.post("/artifacts/index", response_model=BuildResponse)
    def build_index_endpoint(request: BuildRequest) -> BuildResponse:
        try:
            corpus = ingest_corpus(request.corpus_path)
            save_index(build_term_index(corpus), request.output_path)
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return BuildResponse(output_path=request.output_path, detail=f"indexed {len(corpus)} documents")

    @app.post("/artifacts/embeddings", response_model=BuildResponse)
    def build_embeddings_endpoint(request: BuildRequest) -> BuildResponse:
        eng = _engine()
        try:
            corpus = ingest_corpus(request.corpus_path)
            dim = request.dim or eng.config.embed_dim
            embedder = build_embedder(replace(eng.config, embed_dim=dim))
            store = embed_corpus(corpus, embedder, dim)
            save_store(store, request.output_path)
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return BuildResponse(output_path=request.output_path, detail=f"embedded {len(store)} documents")

    @app.post("/artifacts/graph", response_model=BuildResponse)
    def build_graph_endpoint(request: BuildRequest) -> BuildResponse:
        eng = _engine()
        if not request.embeddings_path:
            raise HTTPException(status_code=422, detail="embeddings_path is required")
        try:
            store = load_store(request.embeddings_path)
            graph = build_graph(store, k=request.k or eng.config.graph_k)
            save_graph(graph, request.output_path)
        except SunarError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        return BuildResponse(
            output_path=request.output_path,
            detail=f"graph over {len(graph)} nodes, {graph.edge_count()} edges",
        )

    return app


def _doc_fields(entry) -> dict:
    return {
        "doc_id": entry.doc_id,
        "score": entry.score,
        "origin": entry.origin.value,
        "source_doc": entry.source_doc,
    }
