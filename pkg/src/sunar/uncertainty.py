"""Answer-uncertainty feedback for batch re-ranking.

For each scored batch, sample m answers to the sub-question conditioned on
the batch evidence, group the answers into semantic sets via bidirectional
entailment, and divide every score in the batch by the number of sets s.
One set means the answers agree and the batch keeps its scores; many sets
mean the model is uncertain given this evidence and the batch is pushed down.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .clients import ChatRequest, EntailmentClient, LlmClient
from .corpus import Document
from .errors import ClientError, EntailmentJudgmentError
from .nar import FeedbackHook
from .prompts import build_sampling_prompt
from .ranking import ScoredDoc


@dataclass(frozen=True)
class AnswerSamples:
    sub_question: str
    answers: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.answers) < 1:
            raise ClientError("answer samples require m >= 1")

    @property
    def m(self) -> int:
        return len(self.answers)


@dataclass(frozen=True)
class SemanticClustering:
    """A partition of answer indices (0-based) into semantic sets."""

    sets: tuple[tuple[int, ...], ...]

    @property
    def s(self) -> int:
        return len(self.sets)

    def assignments(self) -> dict[int, int]:
        return {index: set_id for set_id, members in enumerate(self.sets) for index in members}


def sample_answers(
    llm: LlmClient,
    sub_question: str,
    evidence: Sequence[Document],
    m: int,
    temperature: float,
) -> AnswerSamples:
    """Draw m answers from one prompt holding the evidence in ranked order.

    Empty completions are kept as the literal answer "" so the partition is
    still over m items.
    """
    if m < 1:
        raise ClientError("m must be >= 1")
    if not evidence:
        raise ClientError("answer sampling requires non-empty evidence")
    prompt = build_sampling_prompt(sub_question, evidence)
    completions = llm.generate(ChatRequest.user(prompt, n=m, temperature=temperature))
    return AnswerSamples(sub_question=sub_question, answers=tuple(c if c is not None else "" for c in completions))


def _bidirectional_entail(nli: EntailmentClient, first: str, second: str) -> bool:
    """Both directions are always evaluated; failure carries the pair."""
    try:
        forward = nli.entail(first, second)
        backward = nli.entail(second, first)
    except ClientError as exc:
        raise EntailmentJudgmentError(
            f"entailment judgment failed for pair ({first!r}, {second!r}): {exc}"
        ) from exc
    return forward and backward


def cluster_answers(nli: EntailmentClient, samples: AnswerSamples) -> SemanticClustering:
    """Greedy sequential clustering against each set's first member.

    Identical trimmed strings share a set without consulting the judge; an
    empty answer only ever joins another empty answer.
    """
    sets: list[list[int]] = []
    representatives: list[str] = []
    for index, raw_answer in enumerate(samples.answers):
        answer = raw_answer.strip()
        placed = False
        for set_id, representative in enumerate(representatives):
            if representative == answer:
                equivalent = True
            elif not representative or not answer:
                equivalent = False
            else:
                equivalent = _bidirectional_entail(nli, representative, answer)
            if equivalent:
                sets[set_id].append(index)
                placed = True
                break
        if not placed:
            sets.append([index])
            representatives.append(answer)
    return SemanticClustering(sets=tuple(tuple(members) for members in sets))


def rescore_batch(batch: Sequence[ScoredDoc], s: int) -> list[ScoredDoc]:
    """Divide every score by s; a uniform positive divisor preserves order."""
    if s < 1:
        raise ClientError(f"semantic set count must be >= 1, got {s}")
    for scored in batch:
        if not (0.0 < scored.score < 1.0):
            raise ClientError(
                f"rescoring expects transformed scores in (0, 1); doc {scored.doc_id!r} has {scored.score}"
            )
    return [scored.with_score(scored.score / s) for scored in batch]


def asu_feedback_hook(
    llm: LlmClient,
    nli: EntailmentClient,
    m: int = 5,
    temperature: float = 0.7,
) -> FeedbackHook:
    """Compose sample -> cluster -> rescore into a per-batch feedback hook."""

    def hook(sub_question: str, batch: list[ScoredDoc], docs: list[Document]) -> tuple[list[float], int]:
        by_id = {doc.doc_id: doc for doc in docs}
        ranked = sorted(batch, key=lambda scored: (-scored.score, scored.doc_id))
        evidence = [by_id[scored.doc_id] for scored in ranked]
        try:
            samples = sample_answers(llm, sub_question, evidence, m, temperature)
        except ClientError as exc:
            raise ClientError(f"answer sampling stage failed: {exc}") from exc
        try:
            clustering = cluster_answers(nli, samples)
        except ClientError as exc:
            raise ClientError(f"semantic clustering stage failed: {exc}") from exc
        rescored = rescore_batch(batch, clustering.s)
        return [scored.score for scored in rescored], clustering.s

    return hook
