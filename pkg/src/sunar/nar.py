"""Neighborhood-aware re-ranking under a scoring budget.

Given a first-stage candidate list R and the document graph G, the loop
scores batches of size b until budget c is spent, alternating between two
pools: the remaining first-stage candidates (R) and a neighbor pool (N) that
grows with the graph neighbors of every scored batch. Scored documents are
removed from both pools; neighbors already ranked are never re-added. When
the scheduled pool is empty the other pool is drawn from instead; when both
are empty the loop terminates early even if budget remains.

Raw cross-scorer logits are mapped through the logistic function to (0, 1)
before any use, so that dividing by the uncertainty penalty s >= 1 always
moves scores down. An optional per-batch feedback hook may rescore each batch
(returning the divisor s that is recorded in the trace); neighbor-promotion
priorities use those final scores. The returned list is globally sorted by
final score, descending, ties by ascending doc_id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .corpus import Document
from .errors import ClientError, NarError
from .graph import NeighborhoodGraph, neighbors
from .ranking import Origin, RankedList, ScoredDoc

FeedbackHook = Callable[[str, "list[ScoredDoc]", "list[Document]"], "tuple[list[float], int]"]

POOL_FIRST_STAGE = "R"
POOL_NEIGHBOR = "N"


@dataclass(frozen=True)
class NarConfig:
    b: int = 10
    c: int = 100
    neighbor_limit: int = 10
    start_pool: str = POOL_FIRST_STAGE

    def __post_init__(self) -> None:
        if self.b < 1:
            raise NarError("batch size b must be >= 1")
        if self.c < self.b:
            raise NarError("budget c must satisfy b <= c")
        if self.neighbor_limit < 0:
            raise NarError("neighbor_limit must be >= 0")
        if self.start_pool not in (POOL_FIRST_STAGE, POOL_NEIGHBOR):
            raise NarError(f"start_pool must be 'R' or 'N', got {self.start_pool!r}")


@dataclass(frozen=True)
class NarIteration:
    index: int
    scheduled_pool: str
    pool: str
    pool_sizes: dict[str, int]
    doc_ids: tuple[str, ...]
    raw_scores: tuple[float, ...]
    s: int | None
    rescored_scores: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "iteration": self.index,
            "scheduled_pool": self.scheduled_pool,
            "pool": self.pool,
            "pool_sizes": dict(self.pool_sizes),
            "doc_ids": list(self.doc_ids),
            "raw_scores": list(self.raw_scores),
            "s": self.s,
            "rescored_scores": list(self.rescored_scores),
        }


@dataclass
class NarTrace:
    iterations: list[NarIteration] = field(default_factory=list)

    def scoring_order(self) -> list[str]:
        return [doc_id for iteration in self.iterations for doc_id in iteration.doc_ids]

    def pool_labels(self) -> list[str]:
        return [iteration.pool for iteration in self.iterations]

    def to_dicts(self) -> list[dict]:
        return [iteration.to_dict() for iteration in self.iterations]


def logistic(x: float) -> float:
    """Numerically stable 1 / (1 + e^-x)."""
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def score_batch(scorer, sub_question: str, batch: Sequence[Document]) -> list[float]:
    """Score each document and map the raw logits into (0, 1)."""
    if not batch:
        raise NarError("cannot score an empty batch")
    return [logistic(scorer.score(sub_question, doc.text)) for doc in batch]


@dataclass
class _PoolEntry:
    source_doc: str
    source_score: float
    similarity: float


class NeighborPool:
    """Dynamically grown neighbor pool.

    Entries are prioritized by (source document's final score, graph
    similarity, ascending doc_id); re-promotions keep the higher priority.
    """

    def __init__(self) -> None:
        self._entries: dict[str, _PoolEntry] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._entries

    def add(self, doc_id: str, source_doc: str, source_score: float, similarity: float) -> None:
        current = self._entries.get(doc_id)
        if current is None or (source_score, similarity) > (current.source_score, current.similarity):
            self._entries[doc_id] = _PoolEntry(source_doc, source_score, similarity)

    def discard(self, doc_id: str) -> None:
        self._entries.pop(doc_id, None)

    def ordered_ids(self) -> list[str]:
        return sorted(
            self._entries,
            key=lambda doc_id: (
                -self._entries[doc_id].source_score,
                -self._entries[doc_id].similarity,
                doc_id,
            ),
        )

    def take(self, count: int) -> list[tuple[str, str]]:
        """Pop up to ``count`` (doc_id, source_doc) pairs in priority order."""
        taken = self.ordered_ids()[: max(count, 0)]
        return [(doc_id, self._entries.pop(doc_id).source_doc) for doc_id in taken]


def promote_neighbors(
    batch: Sequence[ScoredDoc],
    graph: NeighborhoodGraph,
    neighbor_limit: int,
    already_ranked: set[str],
    pool: NeighborPool,
) -> NeighborPool:
    """Add each batch document's graph neighbors to the pool, skipping
    anything already ranked. Unknown graph nodes contribute no neighbors."""
    if neighbor_limit <= 0:
        return pool
    for scored in batch:
        if scored.doc_id not in graph:
            continue
        for neighbor_id, similarity in neighbors(graph, scored.doc_id, neighbor_limit):
            if neighbor_id in already_ranked:
                continue
            pool.add(neighbor_id, scored.doc_id, scored.score, similarity)
    return pool


def _other(pool: str) -> str:
    return POOL_NEIGHBOR if pool == POOL_FIRST_STAGE else POOL_FIRST_STAGE


def run_nar(
    sub_question: str,
    initial: RankedList,
    graph: NeighborhoodGraph,
    scorer,
    documents: Mapping[str, Document],
    config: NarConfig,
    feedback: FeedbackHook | None = None,
) -> tuple[RankedList, NarTrace]:
    """Budgeted batch re-ranking with neighbor promotion.

    Returns the re-ranked pool (min(c, reachable) documents, each scored
    exactly once) together with the per-iteration trace.
    """
    if len(initial) == 0:
        raise NarError("empty first-stage retrieval")
    for entry in initial:
        if entry.doc_id not in documents:
            raise NarError(f"initial doc {entry.doc_id!r} is not resolvable to text")

    r_pool: list[str] = initial.ids()
    n_pool = NeighborPool()
    ranked: dict[str, ScoredDoc] = {}
    trace = NarTrace()

    iteration = 0
    while len(ranked) < config.c:
        iteration += 1
        scheduled = config.start_pool if iteration % 2 == 1 else _other(config.start_pool)
        pool_sizes = {POOL_FIRST_STAGE: len(r_pool), POOL_NEIGHBOR: len(n_pool)}
        actual = scheduled if pool_sizes[scheduled] > 0 else _other(scheduled)
        if pool_sizes[actual] == 0:
            break

        take = min(config.b, config.c - len(ranked))
        if actual == POOL_FIRST_STAGE:
            batch_ids = r_pool[:take]
            sources: dict[str, str | None] = {doc_id: None for doc_id in batch_ids}
        else:
            pairs = n_pool.take(take)
            batch_ids = [doc_id for doc_id, _ in pairs]
            sources = dict(pairs)

        batch_docs: list[Document] = []
        for doc_id in batch_ids:
            if doc_id not in documents:
                raise NarError(f"iteration {iteration}: doc {doc_id!r} is not resolvable to text")
            batch_docs.append(documents[doc_id])

        try:
            raw_scores = score_batch(scorer, sub_question, batch_docs)
        except ClientError as exc:
            raise NarError(f"scorer failure at iteration {iteration}: {exc}") from exc

        batch = [
            ScoredDoc(
                doc_id=doc_id,
                score=raw,
                origin=Origin.FIRST_STAGE if sources[doc_id] is None else Origin.NEIGHBOR,
                source_doc=sources[doc_id],
                batch_index=iteration,
            )
            for doc_id, raw in zip(batch_ids, raw_scores)
        ]

        s: int | None = None
        final_scores = list(raw_scores)
        if feedback is not None:
            try:
                final_scores, s = feedback(sub_question, list(batch), batch_docs)
            except ClientError as exc:
                raise NarError(f"feedback failure at iteration {iteration}: {exc}") from exc
            if len(final_scores) != len(batch):
                raise NarError(f"feedback returned {len(final_scores)} scores for a batch of {len(batch)}")
        batch = [scored.with_score(score) for scored, score in zip(batch, final_scores)]

        batch_id_set = set(batch_ids)
        r_pool = [doc_id for doc_id in r_pool if doc_id not in batch_id_set]
        for doc_id in batch_ids:
            n_pool.discard(doc_id)

        for scored in batch:
            ranked[scored.doc_id] = scored
        promote_neighbors(batch, graph, config.neighbor_limit, set(ranked), n_pool)

        trace.iterations.append(
            NarIteration(
                index=iteration,
                scheduled_pool=scheduled,
                pool=actual,
                pool_sizes=pool_sizes,
                doc_ids=tuple(batch_ids),
                raw_scores=tuple(raw_scores),
                s=s,
                rescored_scores=tuple(final_scores),
            )
        )

    return RankedList(tuple(ranked.values())), trace


def rerank_only(
    sub_question: str,
    initial: RankedList,
    scorer,
    documents: Mapping[str, Document],
    budget: int,
) -> RankedList:
    """Plain re-ranking of the first-stage list: score up to ``budget``
    candidates with no neighbor exploration."""
    if len(initial) == 0:
        raise NarError("empty first-stage retrieval")
    entries = []
    for entry in list(initial)[:budget]:
        doc = documents.get(entry.doc_id)
        if doc is None:
            raise NarError(f"doc {entry.doc_id!r} is not resolvable to text")
        try:
            raw = logistic(scorer.score(sub_question, doc.text))
        except ClientError as exc:
            raise NarError(f"scorer failure for doc {entry.doc_id!r}: {exc}") from exc
        entries.append(ScoredDoc(doc_id=entry.doc_id, score=raw, origin=Origin.FIRST_STAGE))
    return RankedList(tuple(entries))
