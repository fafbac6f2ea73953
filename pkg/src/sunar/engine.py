"""Engine layer: loads built artifacts once, serves queries many times.

Both the HTTP service and the CLI drive this same object; it owns no network
IO of its own (model clients do), and all loaded state is immutable, so
concurrent question runs are safe.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .clients import (
    HashEmbedder,
    HttpBackendConfig,
    HttpChatClient,
    HttpCrossScorer,
    HttpEmbedder,
    HttpEntailmentClient,
    NLI_API_KEY_ENV,
    ScriptedCrossScorer,
    ScriptedEmbedder,
    ScriptedEntailmentClient,
    ScriptedLlmClient,
)
from .config import SunarConfig, resolve_path
from .corpus import Corpus, ingest_corpus
from .errors import ConfigError, SunarError
from .evaluation import Qrels, cover_em, metrics_report
from .graph import NeighborhoodGraph, load_graph
from .index import TermIndex, load_index, sparse_retrieve
from .nar import NarTrace, run_nar
from .pipeline import PipelineConfig, PipelineResources, ReasoningPath, answer_question
from .ranking import RankedList
from .uncertainty import asu_feedback_hook


@dataclass(frozen=True)
class Question:
    qid: str
    question: str
    answer: str | tuple[str, ...] | None = None


def load_questions(path: str | Path) -> list[Question]:
    questions: list[Question] = []
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"questions file not found: {path}")
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if "qid" not in record or "question" not in record:
                raise ConfigError(f"{path}:{lineno}: record must carry 'qid' and 'question'")
            answer = record.get("answer")
            if isinstance(answer, list):
                answer = tuple(str(a) for a in answer)
            questions.append(Question(qid=str(record["qid"]), question=str(record["question"]), answer=answer))
    if not questions:
        raise ConfigError(f"{path}: no questions")
    return questions


@dataclass
class QuestionResult:
    qid: str
    question: str
    path: ReasoningPath | None
    error: str | None = None

    def to_dict(self) -> dict:
        record = {"qid": self.qid, "question": self.question, "error": self.error}
        if self.path is not None:
            record.update(self.path.to_dict())
        else:
            record["answer"] = ""
        return record


def _build_clients(config: SunarConfig):
    clients = config.clients
    if clients.mode == "scripted":
        fixtures_dir = resolve_path(config, config.paths.fixtures_dir)
        if fixtures_dir is None:
            raise ConfigError("scripted client mode requires paths.fixtures_dir")
        llm = ScriptedLlmClient(path=fixtures_dir / "llm.jsonl")
        nli_path = fixtures_dir / "nli.jsonl"
        nli = ScriptedEntailmentClient(path=nli_path) if nli_path.exists() else ScriptedEntailmentClient({})
        scorer = ScriptedCrossScorer(path=fixtures_dir / "scorer.jsonl")
    else:
        if not clients.llm_base_url:
            raise ConfigError("http client mode requires clients.llm_base_url")
        llm = HttpChatClient(
            HttpBackendConfig(
                base_url=clients.llm_base_url,
                model=clients.llm_model,
                rate_limit_rps=clients.rate_limit_rps,
            )
        )
        nli_url = clients.nli_base_url or clients.llm_base_url
        nli = HttpEntailmentClient(
            HttpBackendConfig(
                base_url=nli_url,
                model=clients.nli_model or clients.llm_model,
                api_key_env=NLI_API_KEY_ENV,
                rate_limit_rps=clients.rate_limit_rps,
            ),
            backend=clients.nli_backend,
        )
        if not clients.scorer_base_url:
            raise ConfigError("http client mode requires clients.scorer_base_url")
        scorer = HttpCrossScorer(
            HttpBackendConfig(base_url=clients.scorer_base_url, rate_limit_rps=clients.rate_limit_rps)
        )
    return llm, nli, scorer


def build_embedder(config: SunarConfig):
    clients = config.clients
    if clients.embedder == "hash":
        return HashEmbedder(config.embed_dim)
    if clients.embedder == "scripted":
        fixtures_dir = resolve_path(config, config.paths.fixtures_dir)
        if fixtures_dir is None:
            raise ConfigError("scripted embedder requires paths.fixtures_dir")
        return ScriptedEmbedder(config.embed_dim, path=fixtures_dir / "embedder.jsonl")
    if not clients.llm_base_url:
        raise ConfigError("http embedder requires clients.llm_base_url")
    return HttpEmbedder(HttpBackendConfig(base_url=clients.llm_base_url), dim=config.embed_dim)


@dataclass
class SunarEngine:
    config: SunarConfig
    corpus: Corpus
    index: TermIndex
    graph: NeighborhoodGraph
    llm: object
    nli: object
    scorer: object

    @classmethod
    def from_config(cls, config: SunarConfig) -> "SunarEngine":
        corpus_path = resolve_path(config, config.paths.corpus)
        if corpus_path is None:
            raise ConfigError("paths.corpus is required")
        corpus = ingest_corpus(corpus_path)

        index_path = resolve_path(config, config.paths.index)
        if index_path is not None and index_path.exists():
            index = load_index(index_path)
        else:
            from .index import build_term_index

            index = build_term_index(corpus)

        graph_path = resolve_path(config, config.paths.graph)
        if graph_path is None or not graph_path.exists():
            raise ConfigError(
                f"graph file not found ({graph_path}); build it first with `sunar graph`"
            )
        graph = load_graph(graph_path)

        llm, nli, scorer = _build_clients(config)
        return cls(config=config, corpus=corpus, index=index, graph=graph, llm=llm, nli=nli, scorer=scorer)

    # -- query surfaces ----------------------------------------------------

    def pipeline_config(self, **overrides) -> PipelineConfig:
        section = self.config.pipeline
        values = {
            "l": section.l,
            "max_hops": section.max_hops,
            "asu_enabled": section.asu_enabled,
            "mer_enabled": section.mer_enabled,
            "m": section.m,
            "temperature": section.temperature,
            "exemplars": section.exemplars,
            "first_stage_k": self.config.first_stage_k,
            "nar": self.config.nar,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return PipelineConfig(**values)

    def resources(self) -> PipelineResources:
        return PipelineResources(
            index=self.index,
            graph=self.graph,
            documents=self.corpus.by_id(),
            llm=self.llm,
            scorer=self.scorer,
            nli=self.nli,
        )

    def retrieve(self, query: str, k: int | None = None) -> RankedList:
        return sparse_retrieve(self.index, query, k or self.config.first_stage_k)

    def rerank(self, sub_question: str, *, with_feedback: bool = False) -> tuple[RankedList, NarTrace]:
        initial = self.retrieve(sub_question)
        feedback = None
        if with_feedback:
            feedback = asu_feedback_hook(
                self.llm, self.nli, self.config.pipeline.m, self.config.pipeline.temperature
            )
        return run_nar(
            sub_question,
            initial,
            self.graph,
            self.scorer,
            self.corpus.by_id(),
            self.config.nar,
            feedback=feedback,
        )

    def answer(self, question: str, **config_overrides) -> ReasoningPath:
        return answer_question(question, self.resources(), self.pipeline_config(**config_overrides))

    def run_questions(
        self,
        questions: Sequence[Question],
        workers: int = 1,
        **config_overrides,
    ) -> list[QuestionResult]:
        """Answer a batch; output order always matches input order."""
        config = self.pipeline_config(**config_overrides)
        resources = self.resources()

        def one(question: Question) -> QuestionResult:
            try:
                path = answer_question(question.question, resources, config)
                return QuestionResult(qid=question.qid, question=question.question, path=path, error=path.error)
            except SunarError as exc:
                return QuestionResult(qid=question.qid, question=question.question, path=None, error=str(exc))

        if workers <= 1:
            return [one(question) for question in questions]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, questions))


def run_rows(results: Sequence[QuestionResult]) -> dict[str, list[tuple[str, float]]]:
    """One run entry per sub-question, qid formed as '<qid>.<hop>'."""
    rows: dict[str, list[tuple[str, float]]] = {}
    for result in results:
        if result.path is None:
            continue
        for step in result.path.steps:
            rows[f"{result.qid}.{step.index}"] = [
                (entry.doc_id, entry.score) for entry in step.ranked
            ]
    return rows


def answers_report(
    results: Sequence[QuestionResult],
    questions: Sequence[Question],
    qrels: Qrels | None = None,
    ks: Sequence[int] = (10,),
) -> dict:
    gold = {q.qid: q.answer for q in questions}
    cover: dict[str, int] = {}
    for result in results:
        answer = result.path.reported_answer if result.path else ""
        expected = gold.get(result.qid)
        if expected is not None:
            cover[result.qid] = cover_em(answer, expected)
    report: dict = {"metrics": {}}
    if cover:
        report["metrics"]["cover_em"] = {
            "mean": sum(cover.values()) / len(cover),
            "per_query": cover,
        }
    if qrels is not None:
        hop_qrels = Qrels(
            judgments={
                (hop_qid, doc_id): grade
                for hop_qid in run_rows(results)
                for (qid, doc_id), grade in qrels.judgments.items()
                if hop_qid.rsplit(".", 1)[0] == qid
            }
        )
        retrieval = metrics_report(run_rows(results), hop_qrels, ks)
        report["metrics"].update(retrieval["metrics"])
    failures = [result.qid for result in results if result.error]
    report["failed_qids"] = failures
    return report
