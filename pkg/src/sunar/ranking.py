"""Ranked-list primitives shared by retrieval, re-ranking, and the pipeline."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Iterator

from .errors import SunarError


class Origin(enum.Enum):
    FIRST_STAGE = "first-stage"
    NEIGHBOR = "neighbor"


@dataclass(frozen=True)
class ScoredDoc:
    doc_id: str
    score: float
    origin: Origin
    source_doc: str | None = None
    batch_index: int | None = None

    def __post_init__(self) -> None:
        if self.origin is Origin.NEIGHBOR and self.source_doc is None:
            raise SunarError(f"neighbor {self.doc_id!r} lacks a source document")
        if self.origin is Origin.FIRST_STAGE and self.source_doc is not None:
            raise SunarError(f"first-stage doc {self.doc_id!r} must not carry a source document")

    def with_score(self, score: float) -> "ScoredDoc":
        return replace(self, score=score)

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "score": self.score,
            "origin": self.origin.value,
            "source_doc": self.source_doc,
            "batch_index": self.batch_index,
        }


def _rank_key(entry: ScoredDoc) -> tuple[float, str]:
    return (-entry.score, entry.doc_id)


@dataclass(frozen=True)
class RankedList:
    """Entries sorted by descending score, ties broken by ascending doc_id."""

    entries: tuple[ScoredDoc, ...]

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.entries, key=_rank_key))
        seen: set[str] = set()
        for entry in ordered:
            if entry.doc_id in seen:
                raise SunarError(f"duplicate doc_id {entry.doc_id!r} in ranked list")
            seen.add(entry.doc_id)
        object.__setattr__(self, "entries", ordered)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[ScoredDoc]:
        return iter(self.entries)

    def __getitem__(self, index: int) -> ScoredDoc:
        return self.entries[index]

    def ids(self) -> list[str]:
        return [entry.doc_id for entry in self.entries]

    def top(self, limit: int) -> "RankedList":
        return RankedList(self.entries[: max(limit, 0)])

    def to_dicts(self) -> list[dict]:
        return [entry.to_dict() for entry in self.entries]
