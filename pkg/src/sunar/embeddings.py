"""Dense embedding store backing offline graph construction."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import ClientError, IndexFormatError

_STORE_FORMAT = "sunar-embeddings"
_STORE_VERSION = 1


@dataclass(frozen=True)
class EmbeddingStore:
    dim: int
    vectors: dict[str, tuple[float, ...]]

    def __post_init__(self) -> None:
        for doc_id, vector in self.vectors.items():
            if len(vector) != self.dim:
                raise ClientError(f"vector for {doc_id!r} has dim {len(vector)}, expected {self.dim}")

    def __len__(self) -> int:
        return len(self.vectors)

    def matrix(self) -> tuple[list[str], np.ndarray]:
        """Rows ordered by ascending doc_id; the fixed order keeps builds deterministic."""
        ids = sorted(self.vectors)
        return ids, np.array([self.vectors[doc_id] for doc_id in ids], dtype=np.float64)


def embed_corpus(corpus: Corpus, embedder, dim: int) -> EmbeddingStore:
    """One vector per document; deterministic given a deterministic embedder."""
    if getattr(embedder, "dim", dim) != dim:
        raise ClientError(f"embedder is configured for dim {embedder.dim}, requested {dim}")
    vectors: dict[str, tuple[float, ...]] = {}
    for doc in corpus:
        try:
            vector = embedder.embed(doc.text)
        except ClientError as exc:
            raise ClientError(f"embedding failed for doc {doc.doc_id!r}: {exc}") from exc
        if len(vector) != dim:
            raise ClientError(
                f"embedder returned dim {len(vector)} for doc {doc.doc_id!r}, expected {dim}"
            )
        vectors[doc.doc_id] = tuple(float(v) for v in vector)
    return EmbeddingStore(dim=dim, vectors=vectors)


def save_store(store: EmbeddingStore, path: str | Path) -> None:
    payload = {
        "format": _STORE_FORMAT,
        "version": _STORE_VERSION,
        "dim": store.dim,
        "vectors": {doc_id: list(vector) for doc_id, vector in store.vectors.items()},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), encoding="utf-8")


def load_store(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    if not path.exists():
        raise IndexFormatError(f"embedding store not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IndexFormatError(f"{path}: not a valid embedding store ({exc.msg})") from exc
    if not isinstance(payload, dict) or payload.get("format") != _STORE_FORMAT:
        raise IndexFormatError(f"{path}: missing {_STORE_FORMAT!r} header")
    if payload.get("version") != _STORE_VERSION:
        raise IndexFormatError(f"{path}: unsupported version {payload.get('version')!r}")
    return EmbeddingStore(
        dim=int(payload["dim"]),
        vectors={doc_id: tuple(float(v) for v in vec) for doc_id, vec in payload["vectors"].items()},
    )
