"""Decomposition-driven question answering.

A question is answered by alternating a decomposition model with retrieval:
each follow-up sub-question runs first-stage retrieval plus neighborhood-aware
re-ranking, the top-l documents ground an intermediate answer, and the loop
continues until the model emits a final answer or the hop cap is reached.
A post-hoc meta-reasoning call over the pooled evidence of all hops can
replace the transcript's final answer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .clients import ChatRequest, EntailmentClient, LlmClient
from .corpus import Document
from .errors import ClientError, DecompositionParseError, NarError
from .graph import NeighborhoodGraph
from .index import TermIndex, sparse_retrieve
from .nar import NarConfig, NarTrace, run_nar
from .prompts import build_answer_prompt, build_meta_prompt, exemplar_block
from .ranking import RankedList, ScoredDoc
from .uncertainty import asu_feedback_hook

logger = logging.getLogger(__name__)

FOLLOW_UP_MARKER = "Follow up:"
INTERMEDIATE_MARKER = "Intermediate Answer:"
FINAL_MARKER = "[Final Answer]:"
ASK_MARKER = "Are follow up questions needed here:"


@dataclass(frozen=True)
class FollowUp:
    sub_question: str


@dataclass(frozen=True)
class FinalAnswer:
    answer: str


@dataclass(frozen=True)
class PipelineConfig:
    l: int = 10
    max_hops: int = 6
    asu_enabled: bool = True
    mer_enabled: bool = True
    m: int = 5
    temperature: float = 0.7
    first_stage_k: int = 100
    exemplars: str = "wqa"
    nar: NarConfig = field(default_factory=NarConfig)

    def __post_init__(self) -> None:
        if self.l < 1:
            raise ValueError("context size l must be >= 1")
        if self.max_hops < 1:
            raise ValueError("max_hops must be >= 1")


@dataclass(frozen=True)
class PipelineResources:
    index: TermIndex
    graph: NeighborhoodGraph
    documents: Mapping[str, Document]
    llm: LlmClient
    scorer: object
    nli: EntailmentClient | None = None


@dataclass(frozen=True)
class DecompositionStep:
    index: int
    sub_question: str
    evidence: RankedList
    intermediate_answer: str
    ranked: RankedList
    trace: NarTrace

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "sub_question": self.sub_question,
            "intermediate_answer": self.intermediate_answer,
            "evidence": self.evidence.to_dicts(),
        }


@dataclass
class ReasoningPath:
    question: str
    steps: tuple[DecompositionStep, ...]
    final_answer: str
    mer_answer: str | None = None
    transcript: str = ""
    error: str | None = None
    mer_fallback: bool = False

    @property
    def reported_answer(self) -> str:
        return self.mer_answer if self.mer_answer is not None else self.final_answer

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.reported_answer,
            "final_answer": self.final_answer,
            "mer_answer": self.mer_answer,
            "mer_fallback": self.mer_fallback,
            "error": self.error,
            "steps": [step.to_dict() for step in self.steps],
        }


def decompose_step(llm: LlmClient, transcript: str) -> FollowUp | FinalAnswer:
    """Parse the model's next move from its continuation of the transcript.

    Generation is cut at the first intermediate-answer marker: the pipeline,
    not the model, supplies evidence-grounded intermediate answers.
    """
    completion = llm.generate(ChatRequest.user(transcript))[0]
    text = completion.split(INTERMEDIATE_MARKER, 1)[0]
    follow_pos = text.find(FOLLOW_UP_MARKER)
    final_pos = text.find(FINAL_MARKER)
    if follow_pos == -1 and final_pos == -1:
        raise DecompositionParseError(f"unparseable decomposition output: {completion!r}")
    if final_pos == -1 or (follow_pos != -1 and follow_pos < final_pos):
        line = text[follow_pos + len(FOLLOW_UP_MARKER):].split("\n", 1)[0].strip()
        if not line:
            raise DecompositionParseError(f"empty follow-up question in output: {completion!r}")
        return FollowUp(sub_question=line)
    line = text[final_pos + len(FINAL_MARKER):].split("\n", 1)[0].strip()
    return FinalAnswer(answer=line)


def answer_sub_question(llm: LlmClient, sub_question: str, evidence: Sequence[Document]) -> str:
    if not evidence:
        raise NarError(f"no evidence available for sub-question {sub_question!r}")
    prompt = build_answer_prompt(sub_question, evidence)
    return llm.generate(ChatRequest.user(prompt))[0].strip()


def merge_evidence(ranked_lists: Sequence[RankedList], limit: int) -> RankedList:
    """Pool ranked lists, keeping each document's maximum score, truncate."""
    best: dict[str, ScoredDoc] = {}
    for ranked in ranked_lists:
        for entry in ranked:
            current = best.get(entry.doc_id)
            if current is None or entry.score > current.score:
                best[entry.doc_id] = entry
    return RankedList(tuple(best.values())).top(limit)


def _format_reasoning_path(steps: Sequence[DecompositionStep]) -> str:
    lines = []
    for step in steps:
        lines.append(f"{FOLLOW_UP_MARKER} {step.sub_question}")
        lines.append(f"{INTERMEDIATE_MARKER} {step.intermediate_answer}")
    return "\n".join(lines)


def meta_reason(
    llm: LlmClient,
    question: str,
    path: ReasoningPath,
    evidence_union: Sequence[Document],
) -> str | None:
    """Post-hoc answer over the pooled evidence; None means the caller should
    fall back to the transcript answer."""
    prompt = build_meta_prompt(question, _format_reasoning_path(path.steps), evidence_union)
    try:
        completion = llm.generate(ChatRequest.user(prompt))[0]
    except ClientError as exc:
        logger.warning("meta reasoning call failed; falling back to transcript answer: %s", exc)
        return None
    final_pos = completion.find(FINAL_MARKER)
    if final_pos == -1:
        logger.warning("meta reasoning output had no final-answer marker; falling back")
        return None
    return completion[final_pos + len(FINAL_MARKER):].split("\n", 1)[0].strip()


def answer_question(
    question: str,
    resources: PipelineResources,
    config: PipelineConfig,
) -> ReasoningPath:
    """Run the full decompose-retrieve-answer loop for one question."""
    feedback = None
    if config.asu_enabled:
        if resources.nli is None:
            raise ClientError("uncertainty feedback requires an entailment client")
        feedback = asu_feedback_hook(resources.llm, resources.nli, config.m, config.temperature)

    transcript = f"{exemplar_block(config.exemplars)}\nQuestion: {question}\n{ASK_MARKER}"
    steps: list[DecompositionStep] = []
    final_answer: str | None = None
    error: str | None = None

    for hop in range(1, config.max_hops + 1):
        outcome = decompose_step(resources.llm, transcript)
        if isinstance(outcome, FinalAnswer):
            final_answer = outcome.answer
            transcript += f"{' No.' if not steps else ''}\n{FINAL_MARKER} {final_answer}"
            break
        sub_question = outcome.sub_question
        initial = sparse_retrieve(resources.index, sub_question, config.first_stage_k)
        ranked, trace = run_nar(
            sub_question,
            initial,
            resources.graph,
            resources.scorer,
            resources.documents,
            config.nar,
            feedback=feedback,
        )
        evidence = ranked.top(config.l)
        evidence_docs = [resources.documents[entry.doc_id] for entry in evidence]
        intermediate = answer_sub_question(resources.llm, sub_question, evidence_docs)
        steps.append(
            DecompositionStep(
                index=hop,
                sub_question=sub_question,
                evidence=evidence,
                intermediate_answer=intermediate,
                ranked=ranked,
                trace=trace,
            )
        )
        prefix = " Yes.\n" if len(steps) == 1 else ""
        transcript += f"{prefix}{FOLLOW_UP_MARKER} {sub_question}\n{INTERMEDIATE_MARKER} {intermediate}\n"
    else:
        final_answer = ""
        error = f"hop cap exceeded ({config.max_hops})"

    path = ReasoningPath(
        question=question,
        steps=tuple(steps),
        final_answer=final_answer if final_answer is not None else "",
        transcript=transcript,
        error=error,
    )

    if config.mer_enabled and steps and error is None:
        union = merge_evidence([step.ranked for step in steps], config.l)
        union_docs = [resources.documents[entry.doc_id] for entry in union]
        mer_answer = meta_reason(resources.llm, question, path, union_docs)
        if mer_answer is None:
            path.mer_fallback = True
        else:
            path.mer_answer = mer_answer
    return path
