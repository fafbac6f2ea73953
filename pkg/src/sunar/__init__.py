"""Neighborhood-aware retrieval and multi-hop question answering."""

from .corpus import Corpus, Document, ingest_corpus, tokenize
from .embeddings import EmbeddingStore, embed_corpus
from .graph import NeighborhoodGraph, build_graph, neighbors
from .index import TermIndex, build_term_index, sparse_retrieve
from .nar import NarConfig, NarTrace, run_nar
from .pipeline import PipelineConfig, ReasoningPath, answer_question
from .ranking import Origin, RankedList, ScoredDoc
from .uncertainty import cluster_answers, rescore_batch, sample_answers

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "Document",
    "EmbeddingStore",
    "NarConfig",
    "NarTrace",
    "NeighborhoodGraph",
    "Origin",
    "PipelineConfig",
    "RankedList",
    "ReasoningPath",
    "ScoredDoc",
    "TermIndex",
    "answer_question",
    "build_graph",
    "build_term_index",
    "cluster_answers",
    "embed_corpus",
    "ingest_corpus",
    "neighbors",
    "rescore_batch",
    "run_nar",
    "sample_answers",
    "sparse_retrieve",
    "tokenize",
]
