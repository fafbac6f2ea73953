"""Answer and retrieval metrics plus qrels / run file IO.

File formats follow the usual TREC conventions:
qrels lines are ``qid 0 doc_id grade``; run lines are
``qid Q0 doc_id rank score tag`` with scores printed to six decimals.
"""

from __future__ import annotations

import logging
import math
import string
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import EvalFormatError

logger = logging.getLogger(__name__)

_PUNCT = string.punctuation


@dataclass(frozen=True)
class Qrels:
    judgments: dict[tuple[str, str], int]

    def __post_init__(self) -> None:
        for (qid, doc_id), grade in self.judgments.items():
            if grade < 0:
                raise EvalFormatError(f"negative grade for ({qid}, {doc_id})")

    def qids(self) -> list[str]:
        return sorted({qid for qid, _ in self.judgments})

    def grades_for(self, qid: str) -> dict[str, int]:
        return {doc_id: grade for (q, doc_id), grade in self.judgments.items() if q == qid}

    def relevant_for(self, qid: str) -> set[str]:
        return {doc_id for (q, doc_id), grade in self.judgments.items() if q == qid and grade > 0}


Run = dict[str, list[tuple[str, float]]]


@dataclass(frozen=True)
class MetricResult:
    per_query: dict[str, float]
    mean: float


def normalize_answer(text: str) -> str:
    """Lowercase, strip punctuation from token edges, collapse whitespace."""
    tokens = [token.strip(_PUNCT) for token in text.lower().split()]
    return " ".join(token for token in tokens if token)


def cover_em(prediction: str, gold: str | Sequence[str]) -> int:
    """1 iff any normalized gold string is contained in the normalized prediction."""
    golds = [gold] if isinstance(gold, str) else list(gold)
    normalized_prediction = normalize_answer(prediction)
    for answer in golds:
        normalized_gold = normalize_answer(answer)
        if normalized_gold and normalized_gold in normalized_prediction:
            return 1
    return 0


def _evaluated_qids(run: Run, qrels: Qrels) -> list[str]:
    evaluated = []
    for qid in qrels.qids():
        if qrels.relevant_for(qid):
            evaluated.append(qid)
    for qid in sorted(run):
        if qid not in set(qrels.qids()):
            logger.warning("run qid %r has no judgments; excluded from metrics", qid)
    return evaluated


def recall_at_k(run: Run, qrels: Qrels, k: int) -> MetricResult:
    """|relevant in top-k| / |relevant| per query; mean over judged queries."""
    if k < 1:
        raise EvalFormatError("k must be >= 1")
    per_query: dict[str, float] = {}
    for qid in _evaluated_qids(run, qrels):
        relevant = qrels.relevant_for(qid)
        top = [doc_id for doc_id, _ in run.get(qid, [])[:k]]
        per_query[qid] = len(relevant & set(top)) / len(relevant)
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(per_query=per_query, mean=mean)


def ndcg_at_k(run: Run, qrels: Qrels, k: int) -> MetricResult:
    """Exponential-gain DCG, (2^grade - 1) / log2(rank + 1), over ideal DCG."""
    if k < 1:
        raise EvalFormatError("k must be >= 1")
    per_query: dict[str, float] = {}
    for qid in _evaluated_qids(run, qrels):
        grades = qrels.grades_for(qid)
        dcg = 0.0
        for rank, (doc_id, _) in enumerate(run.get(qid, [])[:k], start=1):
            gain = (2 ** grades.get(doc_id, 0)) - 1
            dcg += gain / math.log2(rank + 1)
        ideal = sorted(grades.values(), reverse=True)[:k]
        idcg = sum(((2 ** grade) - 1) / math.log2(rank + 1) for rank, grade in enumerate(ideal, start=1))
        if idcg == 0:
            continue
        per_query[qid] = dcg / idcg
    mean = sum(per_query.values()) / len(per_query) if per_query else 0.0
    return MetricResult(per_query=per_query, mean=mean)


def load_qrels(path: str | Path) -> Qrels:
    path = Path(path)
    if not path.exists():
        raise EvalFormatError(f"qrels file not found: {path}")
    judgments: dict[tuple[str, str], int] = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EvalFormatError(f"{path}:{lineno}: expected 'qid 0 doc_id grade'")
            qid, _, doc_id, grade_text = parts
            try:
                grade = int(grade_text)
            except ValueError as exc:
                raise EvalFormatError(f"{path}:{lineno}: non-integer grade {grade_text!r}") from exc
            if grade < 0:
                raise EvalFormatError(f"{path}:{lineno}: negative grade")
            judgments[(qid, doc_id)] = grade
    return Qrels(judgments=judgments)


def save_qrels(qrels: Qrels, path: str | Path) -> None:
    lines = [f"{qid} 0 {doc_id} {grade}" for (qid, doc_id), grade in sorted(qrels.judgments.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_run(path: str | Path, run: Run, tag: str) -> None:
    lines = []
    for qid in sorted(run):
        for rank, (doc_id, score) in enumerate(run[qid], start=1):
            lines.append(f"{qid} Q0 {doc_id} {rank} {score:.6f} {tag}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_run(path: str | Path) -> Run:
    path = Path(path)
    if not path.exists():
        raise EvalFormatError(f"run file not found: {path}")
    run: Run = {}
    with path.open("r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise EvalFormatError(f"{path}:{lineno}: expected 'qid Q0 doc_id rank score tag'")
            qid, _, doc_id, _, score_text, _ = parts
            try:
                score = float(score_text)
            except ValueError as exc:
                raise EvalFormatError(f"{path}:{lineno}: non-numeric score {score_text!r}") from exc
            entries = run.setdefault(qid, [])
            if any(existing == doc_id for existing, _ in entries):
                raise EvalFormatError(f"{path}:{lineno}: duplicate doc_id {doc_id!r} for qid {qid!r}")
            if entries and score > entries[-1][1]:
                raise EvalFormatError(f"{path}:{lineno}: scores must be non-increasing within a qid")
            entries.append((doc_id, score))
    return run


def metrics_report(
    run: Run,
    qrels: Qrels,
    ks: Sequence[int],
    cover_em_values: Mapping[str, int] | None = None,
) -> dict:
    """JSON-ready report with per-metric per-qid values and means."""
    report: dict = {"metrics": {}}
    for k in ks:
        recall = recall_at_k(run, qrels, k)
        ndcg = ndcg_at_k(run, qrels, k)
        report["metrics"][f"recall@{k}"] = {"mean": recall.mean, "per_query": recall.per_query}
        report["metrics"][f"ndcg@{k}"] = {"mean": ndcg.mean, "per_query": ndcg.per_query}
    if cover_em_values is not None:
        values = dict(cover_em_values)
        mean = sum(values.values()) / len(values) if values else 0.0
        report["metrics"]["cover_em"] = {"mean": mean, "per_query": values}
    return report
