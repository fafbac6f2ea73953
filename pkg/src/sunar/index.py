"""Lexical inverted index and BM25 first-stage retrieval.

The index is immutable after build; concurrent reads are safe. Scoring uses
BM25 with k1=0.9, b=0.4 and a non-negative idf, so any document sharing at
least one query term receives a positive score.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, tokenize
from .errors import CorpusError, IndexFormatError
from .ranking import Origin, RankedList, ScoredDoc

BM25_K1 = 0.9
BM25_B = 0.4

_INDEX_FORMAT = "sunar-term-index"
_INDEX_VERSION = 1


@dataclass(frozen=True)
class TermIndex:
    postings: dict[str, tuple[tuple[str, int], ...]]
    doc_lengths: dict[str, int]
    doc_count: int
    avg_doc_length: float


def build_term_index(corpus: Corpus) -> TermIndex:
    """Index every token of every document; zero-length documents are allowed."""
    if len(corpus) == 0:
        raise CorpusError("cannot index an empty corpus")
    postings: dict[str, dict[str, int]] = {}
    doc_lengths: dict[str, int] = {}
    for doc in corpus:
        tokens = tokenize(doc.text)
        doc_lengths[doc.doc_id] = len(tokens)
        for token in tokens:
            postings.setdefault(token, {}).setdefault(doc.doc_id, 0)
            postings[token][doc.doc_id] += 1
    frozen = {
        term: tuple(sorted(freqs.items()))
        for term, freqs in sorted(postings.items())
    }
    total_length = sum(doc_lengths.values())
    return TermIndex(
        postings=frozen,
        doc_lengths=doc_lengths,
        doc_count=len(corpus),
        avg_doc_length=total_length / len(corpus),
    )


def _idf(doc_count: int, doc_freq: int) -> float:
    return math.log(1.0 + (doc_count - doc_freq + 0.5) / (doc_freq + 0.5))


def bm25_scores(
    index: TermIndex,
    query_tokens: list[str],
    *,
    k1: float = BM25_K1,
    b: float = BM25_B,
    doc_count: int | None = None,
    avg_doc_length: float | None = None,
) -> dict[str, float]:
    """BM25 score for every document sharing at least one query term.

    Corpus statistics can be overridden to score against frozen statistics.
    """
    n = index.doc_count if doc_count is None else doc_count
    avgdl = index.avg_doc_length if avg_doc_length is None else avg_doc_length
    scores: dict[str, float] = {}
    for term in sorted(set(query_tokens)):
        plist = index.postings.get(term)
        if not plist:
            continue
        idf = _idf(n, len(plist))
        for doc_id, tf in plist:
            dl = index.doc_lengths[doc_id]
            norm = k1 * (1.0 - b + b * dl / avgdl) if avgdl > 0 else k1
            scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (k1 + 1.0) / (tf + norm)
    return scores


def sparse_retrieve(index: TermIndex, query_text: str, k: int) -> RankedList:
    """Top-k lexical retrieval; an empty query yields an empty list."""
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = tokenize(query_text)
    if not tokens:
        return RankedList(())
    scores = bm25_scores(index, tokens)
    ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))[:k]
    return RankedList(
        tuple(ScoredDoc(doc_id=doc_id, score=score, origin=Origin.FIRST_STAGE) for doc_id, score in ranked)
    )


def save_index(index: TermIndex, path: str | Path) -> None:
    payload = {
        "format": _INDEX_FORMAT,
        "version": _INDEX_VERSION,
        "doc_count": index.doc_count,
        "avg_doc_length": index.avg_doc_length,
        "doc_lengths": index.doc_lengths,
        "postings": {term: [list(entry) for entry in plist] for term, plist in index.postings.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8")


def load_index(path: str | Path) -> TermIndex:
    path = Path(path)
    if not path.exists():
        raise IndexFormatError(f"index file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexFormatError(f"{path}: not a valid index file ({exc.msg})") from exc
    if not isinstance(payload, dict) or payload.get("format") != _INDEX_FORMAT:
        raise IndexFormatError(f"{path}: missing {_INDEX_FORMAT!r} header")
    if payload.get("version") != _INDEX_VERSION:
        raise IndexFormatError(f"{path}: unsupported version {payload.get('version')!r}")
    postings = {
        term: tuple((str(doc_id), int(tf)) for doc_id, tf in plist)
        for term, plist in payload["postings"].items()
    }
    return TermIndex(
        postings=postings,
        doc_lengths={str(k): int(v) for k, v in payload["doc_lengths"].items()},
        doc_count=int(payload["doc_count"]),
        avg_doc_length=float(payload["avg_doc_length"]),
    )
