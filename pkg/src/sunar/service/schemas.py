"""Request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    corpus_size: int
    graph_nodes: int


class ScoredDocModel(BaseModel):
    doc_id: str
    score: float
    origin: str
    source_doc: str | None = None


class RetrieveRequest(BaseModel):
    query: str
    k: int = Field(default=100, ge=1)
    rerank: bool = False
    asu: bool = False


class RetrieveResponse(BaseModel):
    query: str
    results: list[ScoredDocModel]
    trace: list[dict] | None = None


class StepModel(BaseModel):
    index: int
    sub_question: str
    intermediate_answer: str
    evidence: list[ScoredDocModel]


class AskRequest(BaseModel):
    question: str
    asu_enabled: bool | None = None
    mer_enabled: bool | None = None
    l: int | None = Field(default=None, ge=1)
    include_trace: bool = False


class AskResponse(BaseModel):
    question: str
    answer: str
    final_answer: str
    mer_answer: str | None
    steps: list[StepModel]
    error: str | None = None
    traces: list[list[dict]] | None = None


class RunRequest(BaseModel):
    questions_path: str
    qrels_path: str | None = None
    workers: int = Field(default=1, ge=1)
    asu_enabled: bool | None = None
    mer_enabled: bool | None = None
    l: int | None = Field(default=None, ge=1)


class RunResponse(BaseModel):
    answers: list[dict]
    report: dict


class EvalRequest(BaseModel):
    run_path: str
    qrels_path: str
    k: list[int] = Field(default_factory=lambda: [10])


class EvalResponse(BaseModel):
    report: dict


class BuildRequest(BaseModel):
    corpus_path: str
    output_path: str
    k: int | None = Field(default=None, ge=1)
    dim: int | None = Field(default=None, ge=1)
    embeddings_path: str | None = None


class BuildResponse(BaseModel):
    output_path: str
    detail: str
