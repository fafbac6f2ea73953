"""Offline document-neighborhood graph.

Nodes are documents; each node's edges are its top-k nearest neighbors by
cosine similarity over the embedding store (exact brute force, self excluded).
Adjacency lists are sorted by descending similarity, ties by ascending doc_id,
so builds are deterministic. The graph is immutable once built and safe for
concurrent lookup.

File format: a header line ``SUNAR-GRAPH v1 k=<k>`` followed by one line per
node, ``<doc_id>\\t<n1>:<sim1> <n2>:<sim2> ...`` with similarities printed to
six decimal places.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingStore
from .errors import GraphError, GraphFormatError

logger = logging.getLogger(__name__)

_HEADER_PREFIX = "SUNAR-GRAPH v1 k="


@dataclass(frozen=True)
class NeighborhoodGraph:
    k: int
    adjacency: dict[str, tuple[tuple[str, float], ...]]
    zero_norm_docs: tuple[str, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.adjacency)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.adjacency

    def edge_count(self) -> int:
        return sum(len(neighbors) for neighbors in self.adjacency.values())


def build_graph(store: EmbeddingStore, k: int) -> NeighborhoodGraph:
    """Exact cosine KNN per node. Zero-norm vectors get similarity 0 to
    everything; they are flagged in the build report but not fatal."""
    if len(store) == 0:
        raise GraphError("cannot build a graph over an empty embedding store")
    if k < 1:
        raise GraphError("k must be >= 1")
    ids, matrix = store.matrix()
    n = len(ids)
    norms = np.linalg.norm(matrix, axis=1)
    zero_mask = norms == 0.0
    zero_docs = tuple(ids[i] for i in np.flatnonzero(zero_mask))
    if zero_docs:
        logger.warning("graph build: %d zero-norm vectors (%s)", len(zero_docs), ", ".join(zero_docs))
    safe_norms = np.where(zero_mask, 1.0, norms)
    unit = matrix / safe_norms[:, None]

    take = min(k, n - 1)
    adjacency: dict[str, tuple[tuple[str, float], ...]] = {}
    indices = np.arange(n)
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        sims = unit[start:stop] @ unit.T
        for row, i in enumerate(range(start, stop)):
            row_sims = sims[row].copy()
            row_sims[i] = -np.inf
            # lexsort: last key is primary; index order equals doc_id order.
            order = np.lexsort((indices, -row_sims))[:take]
            adjacency[ids[i]] = tuple((ids[j], float(row_sims[j])) for j in order)
    return NeighborhoodGraph(k=k, adjacency=adjacency, zero_norm_docs=zero_docs)


def neighbors(graph: NeighborhoodGraph, doc_id: str, limit: int) -> list[tuple[str, float]]:
    """The first min(limit, list length) adjacency entries, order preserved."""
    if doc_id not in graph.adjacency:
        raise GraphError(f"unknown doc_id {doc_id!r} in neighborhood graph")
    if limit <= 0:
        return []
    return list(graph.adjacency[doc_id][:limit])


def save_graph(graph: NeighborhoodGraph, path: str | Path) -> None:
    lines = [f"{_HEADER_PREFIX}{graph.k}"]
    for doc_id in sorted(graph.adjacency):
        cells = " ".join(f"{nid}:{sim:.6f}" for nid, sim in graph.adjacency[doc_id])
        lines.append(f"{doc_id}\t{cells}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_graph(path: str | Path) -> NeighborhoodGraph:
    path = Path(path)
    if not path.exists():
        raise GraphFormatError(f"graph file not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or not lines[0].startswith(_HEADER_PREFIX):
        raise GraphFormatError(f"{path}: missing '{_HEADER_PREFIX}<k>' header")
    try:
        k = int(lines[0][len(_HEADER_PREFIX):])
    except ValueError as exc:
        raise GraphFormatError(f"{path}: unparseable k in header {lines[0]!r}") from exc
    adjacency: dict[str, tuple[tuple[str, float], ...]] = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        if "\t" not in line:
            raise GraphFormatError(f"{path}:{lineno}: expected '<doc_id>\\t<neighbors>'")
        doc_id, _, cells = line.partition("\t")
        entries: list[tuple[str, float]] = []
        for cell in cells.split():
            nid, sep, sim_text = cell.rpartition(":")
            if not sep or not nid:
                raise GraphFormatError(f"{path}:{lineno}: malformed neighbor cell {cell!r}")
            try:
                entries.append((nid, float(sim_text)))
            except ValueError as exc:
                raise GraphFormatError(f"{path}:{lineno}: malformed similarity in {cell!r}") from exc
        if doc_id in adjacency:
            raise GraphFormatError(f"{path}:{lineno}: duplicate node {doc_id!r}")
        adjacency[doc_id] = tuple(entries)
    if not adjacency:
        raise GraphFormatError(f"{path}: graph has no nodes")
    return NeighborhoodGraph(k=k, adjacency=adjacency)
