"""Corpus ingestion and tokenization.

The corpus file format is JSONL with one record per line:
``{"id": str, "title": str (optional), "contents": str}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import CorpusError

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric characters, dropping empty tokens."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    doc_id: str
    text: str
    title: str | None = None

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise CorpusError("document with empty doc_id")
        if not self.text:
            raise CorpusError(f"document {self.doc_id!r} has empty text")


@dataclass(frozen=True)
class Corpus:
    """An ordered, duplicate-free collection of documents."""

    documents: tuple[Document, ...]
    _by_id: dict[str, Document] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Document] = {}
        for doc in self.documents:
            if doc.doc_id in by_id:
                raise CorpusError(f"duplicate doc_id {doc.doc_id!r}")
            by_id[doc.doc_id] = doc
        object.__setattr__(self, "_by_id", by_id)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._by_id

    def get(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise CorpusError(f"unknown doc_id {doc_id!r}") from None

    def by_id(self) -> dict[str, Document]:
        return dict(self._by_id)

    def ids(self) -> list[str]:
        return [doc.doc_id for doc in self.documents]


def ingest_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus file, preserving record order.

    Raises CorpusError on an empty file, a malformed record (with its line
    number), or a duplicate id (naming the id and the offending line).
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"corpus file not found: {path}")
    documents: list[Document] = []
    seen: dict[str, int] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(record, dict) or "id" not in record or "contents" not in record:
                raise CorpusError(f"{path}:{lineno}: record must carry 'id' and 'contents'")
            doc_id = str(record["id"])
            if doc_id in seen:
                raise CorpusError(
                    f"{path}:{lineno}: duplicate doc_id {doc_id!r} (first seen on line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            try:
                documents.append(
                    Document(doc_id=doc_id, text=str(record["contents"]), title=record.get("title"))
                )
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    if not documents:
        raise CorpusError("empty corpus")
    return Corpus(tuple(documents))


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for doc in corpus:
            record: dict[str, str] = {"id": doc.doc_id, "contents": doc.text}
            if doc.title is not None:
                record["title"] = doc.title
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
