"""Prompt templates stored as text files with named placeholders."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from typing import Sequence

from ..corpus import Document

EXEMPLAR_TEMPLATES = {"wqa": "self_ask_wqa", "mqa": "self_ask_mqa"}


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return resources.files(__package__).joinpath(f"{name}.txt").read_text(encoding="utf-8")


def exemplar_block(style: str) -> str:
    if style not in EXEMPLAR_TEMPLATES:
        raise KeyError(f"unknown exemplar style {style!r}; expected one of {sorted(EXEMPLAR_TEMPLATES)}")
    return load_template(EXEMPLAR_TEMPLATES[style])


def format_evidence(evidence: Sequence[Document]) -> str:
    lines = []
    for rank, doc in enumerate(evidence, start=1):
        prefix = f"{doc.title}: " if doc.title else ""
        lines.append(f"{rank}. {prefix}{doc.text}")
    return "\n".join(lines)


def build_answer_prompt(sub_question: str, evidence: Sequence[Document]) -> str:
    return load_template("answer_sub_question").format(
        evidence=format_evidence(evidence), sub_question=sub_question
    )


def build_sampling_prompt(sub_question: str, evidence: Sequence[Document]) -> str:
    return load_template("asu_sample").format(
        evidence=format_evidence(evidence), sub_question=sub_question
    )


def build_meta_prompt(question: str, reasoning_path: str, evidence: Sequence[Document]) -> str:
    return load_template("meta_reasoner").format(
        question=question, reasoning_path=reasoning_path, evidence=format_evidence(evidence)
    )
