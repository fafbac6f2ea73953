"""Synthetic corpora and scripted fixture suites for offline testing.

``generate_corpus`` plants, for each synthetic question, a tight embedding
cluster of relevant documents of which only a fraction is findable lexically;
the rest share no query terms and are reachable only through the neighborhood
graph. Distractors share query terms but sit far away in embedding space.

``build_fixture_suite`` writes complete offline scenarios (corpus, qrels,
questions, embeddings, graph, scripted client fixtures, config) by running
the real pipeline against rule-driven clients and recording every request.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import cycle, islice
from pathlib import Path

import numpy as np
import yaml

from .clients import (
    ChatRequest,
    ExactMatchEntailment,
    RecordingEntailment,
    RecordingLlm,
    ScriptedCrossScorer,
    fingerprint_pair,
    fingerprint_request,
    scorer_fixture_records,
    write_fixture_file,
)
from .corpus import Corpus, Document, write_corpus
from .embeddings import EmbeddingStore, save_store
from .errors import SunarError
from .evaluation import Qrels, cover_em, save_qrels
from .graph import build_graph, save_graph
from .index import build_term_index, sparse_retrieve
from .nar import NarConfig
from .pipeline import (
    ASK_MARKER,
    FINAL_MARKER,
    FOLLOW_UP_MARKER,
    INTERMEDIATE_MARKER,
    PipelineConfig,
    PipelineResources,
    answer_question,
)
from .prompts import build_sampling_prompt
from .uncertainty import AnswerSamples, cluster_answers

SUITE_NAMES = ("e2e-2hop", "wqa-exemplars", "qualitative-table7", "asu-distractor")


# ---------------------------------------------------------------------------
# Synthetic clustering-hypothesis corpora
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    num_questions: int
    relevant_per_question: int = 4
    surfaced_fraction: float = 0.5
    distractors_per_question: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_questions < 1:
            raise SunarError("infeasible spec: need at least one question")
        if not (0.0 < self.surfaced_fraction <= 1.0):
            raise SunarError("infeasible spec: surfaced_fraction must be in (0, 1]")
        if self.relevant_per_question < 1:
            raise SunarError("infeasible spec: need at least one relevant document")
        if self.surfaced_fraction < 1.0 and self.relevant_per_question < 2:
            raise SunarError(
                "infeasible spec: hidden relevants are undiscoverable with fewer than 2 relevant docs"
            )
        if self.distractors_per_question < 0:
            raise SunarError("infeasible spec: negative distractor count")


@dataclass(frozen=True)
class SyntheticQuestion:
    qid: str
    text: str
    answers: tuple[str, ...]


@dataclass(frozen=True)
class GeneratedCorpus:
    corpus: Corpus
    qrels: Qrels
    questions: tuple[SyntheticQuestion, ...]
    store: EmbeddingStore
    surfaced: dict[str, tuple[str, ...]]
    hidden: dict[str, tuple[str, ...]]


def _noise(rng: np.random.Generator, dim: int, scale: float = 0.01) -> np.ndarray:
    vector = rng.standard_normal(dim)
    norm = np.linalg.norm(vector)
    if norm == 0:
        return np.zeros(dim)
    return vector / norm * scale * rng.uniform(0.5, 1.0)


def generate_corpus(spec: SyntheticSpec) -> GeneratedCorpus:
    rng = np.random.default_rng(spec.seed)
    dim = max(4, 2 * spec.num_questions)
    surfaced_count = int(round(spec.relevant_per_question * spec.surfaced_fraction))
    surfaced_count = max(1, min(surfaced_count, spec.relevant_per_question))
    if spec.surfaced_fraction < 1.0:
        surfaced_count = min(surfaced_count, spec.relevant_per_question - 1)

    documents: list[Document] = []
    vectors: dict[str, np.ndarray] = {}
    judgments: dict[tuple[str, str], int] = {}
    questions: list[SyntheticQuestion] = []
    surfaced_ids: dict[str, tuple[str, ...]] = {}
    hidden_ids: dict[str, tuple[str, ...]] = {}
    doc_counter = 0

    for q in range(spec.num_questions):
        qid = f"q{q:03d}"
        terms = [f"topic{q}term{j}" for j in range(3)]
        answer = f"answer{q}"
        relevant_axis = np.zeros(dim)
        relevant_axis[(2 * q) % dim] = 1.0
        distractor_axis = np.zeros(dim)
        distractor_axis[(2 * q + 1) % dim] = 1.0

        questions.append(
            SyntheticQuestion(qid=qid, text=f"which passage discusses {' '.join(terms)}", answers=(answer,))
        )

        surfaced: list[str] = []
        hidden: list[str] = []
        for i in range(spec.relevant_per_question):
            is_surfaced = i < surfaced_count
            doc_id = f"{qid}{'s' if is_surfaced else 'h'}{i:02d}"
            filler = " ".join(f"fill{doc_counter}w{j}" for j in range(3))
            doc_counter += 1
            text = f"{' '.join(terms)} {answer} {filler}" if is_surfaced else f"{answer} {filler}"
            documents.append(Document(doc_id=doc_id, text=text))
            vectors[doc_id] = relevant_axis + _noise(rng, dim)
            judgments[(qid, doc_id)] = 1
            (surfaced if is_surfaced else hidden).append(doc_id)
        surfaced_ids[qid] = tuple(surfaced)
        hidden_ids[qid] = tuple(hidden)

        for j in range(spec.distractors_per_question):
            doc_id = f"{qid}d{j:02d}"
            filler = " ".join(f"fill{doc_counter}w{i}" for i in range(4))
            doc_counter += 1
            documents.append(Document(doc_id=doc_id, text=f"{terms[0]} {filler}"))
            vectors[doc_id] = distractor_axis + _noise(rng, dim)

        relevant_vectors = [vectors[doc_id] for doc_id in surfaced + hidden]
        for a in range(len(relevant_vectors)):
            for b in range(a + 1, len(relevant_vectors)):
                if _cosine(relevant_vectors[a], relevant_vectors[b]) < 0.95:
                    raise SunarError("infeasible spec: relevant cluster spread exceeds the 0.95 bound")
        for j in range(spec.distractors_per_question):
            distractor_vector = vectors[f"{qid}d{j:02d}"]
            for rel_vector in relevant_vectors:
                if _cosine(distractor_vector, rel_vector) > 0.2:
                    raise SunarError("infeasible spec: distractor landed too close to the relevant cluster")

    corpus = Corpus(tuple(documents))
    store = EmbeddingStore(dim=dim, vectors={k: tuple(float(x) for x in v) for k, v in vectors.items()})
    return GeneratedCorpus(
        corpus=corpus,
        qrels=Qrels(judgments=judgments),
        questions=tuple(questions),
        store=store,
        surfaced=surfaced_ids,
        hidden=hidden_ids,
    )


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def make_relevance_scorer(
    generated: GeneratedCorpus,
    relevant_logit: float = 2.0,
    other_logit: float = -2.0,
) -> ScriptedCrossScorer:
    """Scripted cross-scorer that knows which documents answer which question."""
    scorer = ScriptedCrossScorer()
    for question in generated.questions:
        relevant = generated.qrels.relevant_for(question.qid)
        for doc in generated.corpus:
            logit = relevant_logit if doc.doc_id in relevant else other_logit
            scorer.add(question.text, doc.text, logit)
    return scorer


# ---------------------------------------------------------------------------
# Rule-driven clients used to record fixture suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HopScript:
    sub_question: str
    gold_doc_ids: tuple[str, ...]
    answer: str
    wrong_answer: str


@dataclass(frozen=True)
class QuestionScript:
    qid: str
    question: str
    answer: str
    wrong_final: str
    hops: tuple[HopScript, ...]


class _RuleLlm:
    """Deterministic stand-in for the language model during fixture builds.

    Behaves the way the scenario intends a model to behave: follow-ups come
    from the script, intermediate answers are correct only when the hop's
    gold document sits in the top-3 evidence, sampled answers are consistent
    only when the gold document is present at all, and the meta pass answers
    correctly iff every hop's gold document made it into the pooled evidence.
    """

    def __init__(self, scripts: list[QuestionScript], corpus: Corpus) -> None:
        self._by_question = {script.question: script for script in scripts}
        self._by_sub_question: dict[str, HopScript] = {}
        for script in scripts:
            for hop in script.hops:
                self._by_sub_question[hop.sub_question] = hop
        self._texts = {doc.doc_id: doc.text for doc in corpus}

    def generate(self, request: ChatRequest) -> list[str]:
        prompt = request.messages[-1][1]
        if ASK_MARKER in prompt:
            return [self._decomposition(prompt)] * request.n
        if prompt.startswith("Read the evidence passages"):
            return self._samples(prompt, request.n)
        if prompt.startswith("Answer the question using"):
            return [self._intermediate(prompt)] * request.n
        if prompt.startswith("You are given a question"):
            return [self._meta(prompt)] * request.n
        raise SunarError(f"rule client cannot interpret prompt: {prompt[:80]!r}")

    def _decomposition(self, prompt: str) -> str:
        question_pos = prompt.rfind("Question: ")
        question = prompt[question_pos + len("Question: "):].split("\n", 1)[0].strip()
        script = self._by_question[question]
        tail = prompt[question_pos:]
        done = tail.count(INTERMEDIATE_MARKER)
        if done < len(script.hops):
            prefix = " Yes.\n" if done == 0 else ""
            return f"{prefix}{FOLLOW_UP_MARKER} {script.hops[done].sub_question}"
        answered = [
            line[len(INTERMEDIATE_MARKER):].strip()
            for line in tail.splitlines()
            if line.startswith(INTERMEDIATE_MARKER)
        ]
        expected = [hop.answer for hop in script.hops]
        final = script.answer if answered == expected else script.wrong_final
        return f"{FINAL_MARKER} {final}"

    def _evidence_entries(self, prompt: str) -> list[str]:
        section = prompt.split("Evidence:\n", 1)[1]
        section = section.split("\n\nQuestion:", 1)[0]
        return [line for line in section.splitlines() if line.strip()]

    def _hop_for(self, prompt: str) -> HopScript:
        sub_question = prompt.rsplit("Question: ", 1)[1].split("\n", 1)[0].strip()
        return self._by_sub_question[sub_question]

    def _intermediate(self, prompt: str) -> str:
        hop = self._hop_for(prompt)
        top3 = self._evidence_entries(prompt)[:3]
        texts = [self._texts[doc_id] for doc_id in hop.gold_doc_ids]
        if any(text in entry for text in texts for entry in top3):
            return hop.answer
        return hop.wrong_answer

    def _samples(self, prompt: str, n: int) -> list[str]:
        hop = self._hop_for(prompt)
        entries = self._evidence_entries(prompt)
        texts = [self._texts[doc_id] for doc_id in hop.gold_doc_ids]
        if any(text in entry for text in texts for entry in entries):
            return [hop.answer] * n
        variants = [hop.wrong_answer, "no consistent answer", "unknown"]
        return list(islice(cycle(variants), n))

    def _meta(self, prompt: str) -> str:
        question = prompt.split("Question: ", 1)[1].split("\n", 1)[0].strip()
        script = self._by_question[question]
        evidence = prompt.split("Evidence:\n", 1)[1]
        all_present = all(
            any(self._texts[doc_id] in evidence for doc_id in hop.gold_doc_ids)
            for hop in script.hops
        )
        final = script.answer if all_present else script.wrong_final
        return f"Key segments reviewed.\n{FINAL_MARKER} {final}"


def _scorer_table(
    scripts: list[QuestionScript],
    corpus: Corpus,
    logits: dict[str, dict[str, float]],
    default_logit: float = -3.5,
) -> dict[tuple[str, str], float]:
    table: dict[tuple[str, str], float] = {}
    for script in scripts:
        for hop in script.hops:
            per_doc = logits.get(hop.sub_question, {})
            for doc in corpus:
                table[(hop.sub_question, doc.text)] = per_doc.get(doc.doc_id, default_logit)
    return table


# ---------------------------------------------------------------------------
# Fixture suites
# ---------------------------------------------------------------------------


def build_fixture_suite(name: str, output_dir: str | Path) -> dict[str, Path]:
    """Write a named suite's files; returns a map of artifact name to path."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if name == "e2e-2hop":
        return _build_pipeline_suite(output_dir, *_e2e_scenario(), graph_k=5, configs=_E2E_CONFIGS)
    if name == "wqa-exemplars":
        return _build_pipeline_suite(output_dir, *_wqa_scenario(), graph_k=2, configs=_WQA_CONFIGS)
    if name == "qualitative-table7":
        return _build_pipeline_suite(output_dir, *_table7_scenario(), graph_k=3, configs=_TABLE7_CONFIGS)
    if name == "asu-distractor":
        return _build_asu_distractor_suite(output_dir)
    raise SunarError(f"unknown fixture suite {name!r}; expected one of {SUITE_NAMES}")


_E2E_CONFIGS = (
    {"asu_enabled": True, "mer_enabled": True, "l": 10},
    {"asu_enabled": False, "mer_enabled": False, "l": 10},
    {"asu_enabled": True, "mer_enabled": True, "l": 5},
)
_WQA_CONFIGS = ({"asu_enabled": False, "mer_enabled": False, "l": 10},)
_TABLE7_CONFIGS = ({"asu_enabled": False, "mer_enabled": True, "l": 10},)


def _e2e_scenario() -> tuple[list[QuestionScript], Corpus, dict[str, list[str]], dict[str, dict[str, float]], dict]:
    docs: list[Document] = []

    def add(doc_id: str, text: str) -> str:
        docs.append(Document(doc_id=doc_id, text=text))
        return doc_id

    scripts: list[QuestionScript] = []
    clusters: dict[str, list[str]] = {}
    logits: dict[str, dict[str, float]] = {}

    regular = [
        (
            "e2e1",
            "Where was the director of the film Crimson Harbor born?",
            "Arden Falls",
            "Who directed the film Crimson Harbor?",
            "The film Crimson Harbor premiered to festival acclaim and strong reviews.",
            "Lena Moss served as principal filmmaker on a maritime noir project, studio records confirm.",
            "Lena Moss",
            "an unnamed director",
            "Where was Lena Moss born?",
            "Lena Moss was raised in coastal country, early interviews note.",
            "Arden Falls township registry lists a celebrated filmmaker's birthplace entry.",
            "Arden Falls",
            "an unknown town",
        ),
        (
            "e2e2",
            "Who composed the score for the film directed by Omar Beck?",
            "Ira Quell",
            "Which film did Omar Beck direct?",
            "Omar Beck spoke about film craft during a long press tour.",
            "Silver Meridian came together under one uncompromising vision, production notes say.",
            "Silver Meridian",
            "an untitled feature",
            "Who composed the score for Silver Meridian?",
            "Silver Meridian's score drew praise in composer circles.",
            "Ira Quell wrote every cue of that maritime soundtrack, liner archives confirm.",
            "Ira Quell",
            "an unnamed musician",
        ),
        (
            "e2e3",
            "What is the capital of the country where Mount Vexen is located?",
            "Quillon",
            "In which country is Mount Vexen located?",
            "Mount Vexen rises above alpine meadows, travel guides say.",
            "Norvia counts a famous snow peak among its northern landmarks.",
            "Norvia",
            "an unnamed country",
            "What is the capital of Norvia?",
            "Norvia's capital district hosts the national assembly.",
            "Quillon serves as seat for Norvian government ministries and courts.",
            "Quillon",
            "an unlisted city",
        ),
        (
            "e2e4",
            "Which university did the author of the novel Glass Harvest attend?",
            "Halden University",
            "Who wrote the novel Glass Harvest?",
            "Glass Harvest topped novel charts the season it appeared.",
            "Petra Lind penned a celebrated rural saga, literary registries record.",
            "Petra Lind",
            "an unnamed author",
            "Which university did Petra Lind attend?",
            "Petra Lind studied writing and graduated with honors, alumni notes say.",
            "Halden campus enrollment ledgers list the saga novelist among graduates.",
            "Halden University",
            "an unlisted school",
        ),
    ]

    for qid, question, final, sq1, s1_text, g1_text, a1, w1, sq2, s2_text, g2_text, a2, w2 in regular:
        s1 = add(f"{qid}s1", s1_text)
        g1 = add(f"{qid}g1", g1_text)
        s2 = add(f"{qid}s2", s2_text)
        g2 = add(f"{qid}g2", g2_text)
        clusters[f"{qid}h1"] = [s1, g1]
        clusters[f"{qid}h2"] = [s2, g2]
        scripts.append(
            QuestionScript(
                qid=qid,
                question=question,
                answer=final,
                wrong_final="Unknown",
                hops=(
                    HopScript(sq1, (g1,), a1, w1),
                    HopScript(sq2, (g2,), a2, w2),
                ),
            )
        )
        logits[sq1] = {s1: 1.5, g1: 2.5}
        logits[sq2] = {s2: 1.5, g2: 2.5}

    # The designed distractor question: hop 2's first stage is flooded by ten
    # lexically-matching off-topic documents that outscore the gold document
    # on raw logits; only the uncertainty penalty can push them below it.
    q5 = "e2e5"
    q5_question = "Who did the screenwriter of the film Night Ledger play in the film Iron Orchard?"
    sq1 = "Who wrote the screenplay for the film Night Ledger?"
    sq2 = "Who did Dana Frost play in the film Iron Orchard?"
    s1 = add(f"{q5}s1", "Night Ledger drew film circuit attention for the screenplay's pacing.")
    g1 = add(f"{q5}g1", "Dana Frost drafted that noir script start to finish, guild records confirm.")
    s2 = add(f"{q5}s2", "Maren Cove film archive keeps a casting roster and production stills.")
    g2 = add(f"{q5}g2", "Victor Hale: credited role of a screenwriter turned actor, Maren Cove casting record seven.")
    numbers = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]
    distractors = [
        add(
            f"{q5}d{j:02d}",
            "Dana Frost is a fictional character in the television series Ember Chronicle, "
            f"portrayed by Corin Vale across season {numbers[j]}.",
        )
        for j in range(10)
    ]
    clusters[f"{q5}h1"] = [s1, g1]
    clusters[f"{q5}h2"] = [s2, g2]
    clusters[f"{q5}dist"] = list(distractors)
    scripts.append(
        QuestionScript(
            qid=q5,
            question=q5_question,
            answer="Victor Hale",
            wrong_final="Corin Vale",
            hops=(
                HopScript(sq1, (g1,), "Dana Frost", "an uncredited writer"),
                HopScript(sq2, (g2,), "Victor Hale", "Corin Vale"),
            ),
        )
    )
    logits[sq1] = {s1: 1.5, g1: 2.5}
    logits[sq2] = {**{d: 2.2 for d in distractors}, s2: 1.5, g2: 2.0}

    fillers = [
        add(f"fil{i:02d}", f"General film archive shelf {numbers[i]} holds the yearly records.")
        for i in range(10)
    ]
    clusters["fillers"] = fillers

    corpus = Corpus(tuple(docs))
    meta = {
        "expected_cover_em": {"asu_mer": 1.0, "plain": 0.8},
        "distractor_qid": q5,
    }
    return scripts, corpus, clusters, logits, meta


def _wqa_scenario() -> tuple[list[QuestionScript], Corpus, dict[str, list[str]], dict[str, dict[str, float]], dict]:
    docs = [
        Document("wqa-d1", "George Washington's mother was Mary Ball Washington, who raised him in Virginia."),
        Document("wqa-d2", "Mary Ball Washington was the daughter of Joseph Ball, an English colonist."),
        Document("wqa-d3", "Colonial Virginia farm records mention tobacco yields and land surveys."),
        Document("wqa-d4", "Eighteenth century correspondence archives cover many prominent families."),
    ]
    sq1 = "Who was the mother of George Washington?"
    sq2 = "Who was the father of Mary Ball Washington?"
    scripts = [
        QuestionScript(
            qid="wqa1",
            question="Who was the maternal grandfather of George Washington?",
            answer="Joseph Ball",
            wrong_final="Unknown",
            hops=(
                HopScript(sq1, ("wqa-d1",), "Mary Ball Washington", "an unnamed woman"),
                HopScript(sq2, ("wqa-d2",), "Joseph Ball", "an unnamed man"),
            ),
        )
    ]
    clusters = {"family": ["wqa-d1", "wqa-d2"], "fillers": ["wqa-d3", "wqa-d4"]}
    logits = {
        sq1: {"wqa-d1": 2.5, "wqa-d2": 1.0},
        sq2: {"wqa-d2": 2.5, "wqa-d1": 1.0},
    }
    return scripts, Corpus(tuple(docs)), clusters, logits, {}


def _table7_scenario() -> tuple[list[QuestionScript], Corpus, dict[str, list[str]], dict[str, dict[str, float]], dict]:
    docs = [
        Document(
            "t7-g1",
            "Damon and Ben Affleck wrote Good Will Hunting (1997), a screenplay that earned wide recognition.",
        ),
        Document(
            "t7-g2",
            "Benjamin Affleck-Boldt (born August 15, 1972) is an American actor. He later appeared in the "
            "independent coming-of-age comedy Dazed and Confused as Fred O'Bannion.",
        ),
    ]
    distractors = [
        Document(
            f"t7-d{j}",
            "Damon Salvatore is a fictional character in The Vampire Diaries. Damon begins working alongside "
            f"his younger brother Stefan Salvatore to resist greater threats, season {j}.",
        )
        for j in range(1, 7)
    ]
    fillers = [
        Document("t7-f1", "Nineties cinema retrospectives revisit ensemble casts and scripts."),
        Document("t7-f2", "Television fandom wikis catalog supernatural drama lore."),
    ]
    corpus = Corpus(tuple(docs + distractors + fillers))
    sq1 = "Who was the screenwriter for Good Will Hunting?"
    sq2 = "Who did Matt Damon play in Dazed and Confused?"
    scripts = [
        QuestionScript(
            qid="t7q1",
            question="Who did the screenwriter for Good Will Hunting play in Dazed and Confused?",
            answer="Fred O'Bannion",
            wrong_final="Damon Salvatore",
            hops=(
                HopScript(sq1, ("t7-g1",), "Matt Damon", "an unnamed writer"),
                HopScript(sq2, ("t7-g2",), "Fred O'Bannion", "Damon Salvatore"),
            ),
        )
    ]
    clusters = {
        "people": ["t7-g1", "t7-g2"],
        "series": [doc.doc_id for doc in distractors],
        "fillers": [doc.doc_id for doc in fillers],
    }
    logits = {
        sq1: {"t7-g1": 2.5, "t7-g2": 1.0},
        sq2: {**{doc.doc_id: 2.2 for doc in distractors}, "t7-g2": 2.0, "t7-g1": 1.0},
    }
    meta = {"expected_final": "Damon Salvatore", "expected_mer": "Fred O'Bannion"}
    return scripts, corpus, clusters, logits, meta


def _cluster_store(corpus: Corpus, clusters: dict[str, list[str]], seed: int = 7) -> EmbeddingStore:
    rng = np.random.default_rng(seed)
    dim = max(4, len(clusters))
    vectors: dict[str, tuple[float, ...]] = {}
    for axis, (_, members) in enumerate(sorted(clusters.items())):
        base = np.zeros(dim)
        base[axis % dim] = 1.0
        for doc_id in members:
            vectors[doc_id] = tuple(float(x) for x in base + _noise(rng, dim))
    missing = [doc.doc_id for doc in corpus if doc.doc_id not in vectors]
    if missing:
        raise SunarError(f"documents missing a cluster assignment: {missing}")
    return EmbeddingStore(dim=dim, vectors=vectors)


def _build_pipeline_suite(
    output_dir: Path,
    scripts: list[QuestionScript],
    corpus: Corpus,
    clusters: dict[str, list[str]],
    logits: dict[str, dict[str, float]],
    meta: dict,
    graph_k: int,
    configs: tuple[dict, ...],
) -> dict[str, Path]:
    store = _cluster_store(corpus, clusters)
    graph = build_graph(store, k=graph_k)
    index = build_term_index(corpus)
    documents = corpus.by_id()

    # Every hop's gold document must be invisible to first-stage retrieval in
    # the flooded scenario and always resolvable through the graph.
    for script in scripts:
        for hop in script.hops:
            first_stage = set(sparse_retrieve(index, hop.sub_question, 100).ids())
            for gold in hop.gold_doc_ids:
                if "e2e" in script.qid and gold in first_stage:
                    raise SunarError(
                        f"suite invariant broken: gold {gold} lexically reachable for {hop.sub_question!r}"
                    )

    table = _scorer_table(scripts, corpus, logits)
    scorer = ScriptedCrossScorer({fingerprint_pair(q, t): v for (q, t), v in table.items()})
    rule_llm = RecordingLlm(_RuleLlm(scripts, corpus))
    rule_nli = RecordingEntailment(ExactMatchEntailment())

    results: dict[str, dict[str, str]] = {}
    for overrides in configs:
        config = PipelineConfig(
            l=overrides["l"],
            asu_enabled=overrides["asu_enabled"],
            mer_enabled=overrides["mer_enabled"],
            nar=NarConfig(b=10, c=100, neighbor_limit=10),
        )
        resources = PipelineResources(
            index=index, graph=graph, documents=documents, llm=rule_llm, scorer=scorer, nli=rule_nli
        )
        key = f"asu={config.asu_enabled},mer={config.mer_enabled},l={config.l}"
        answers: dict[str, str] = {}
        for script in scripts:
            path = answer_question(script.question, resources, config)
            answers[script.qid] = path.reported_answer
        results[key] = answers

    if "expected_cover_em" in meta:
        by_qid = {script.qid: script.answer for script in scripts}
        full = results["asu=True,mer=True,l=10"]
        plain = results["asu=False,mer=False,l=10"]
        full_em = sum(cover_em(full[qid], gold) for qid, gold in by_qid.items()) / len(by_qid)
        plain_em = sum(cover_em(plain[qid], gold) for qid, gold in by_qid.items()) / len(by_qid)
        if full_em != meta["expected_cover_em"]["asu_mer"] or plain_em != meta["expected_cover_em"]["plain"]:
            raise SunarError(
                f"suite self-check failed: cover-EM full={full_em} plain={plain_em}, "
                f"expected {meta['expected_cover_em']}"
            )

    paths = {
        "corpus": output_dir / "corpus.jsonl",
        "qrels": output_dir / "qrels.txt",
        "questions": output_dir / "questions.jsonl",
        "embeddings": output_dir / "embeddings.json",
        "graph": output_dir / "graph.txt",
        "llm": output_dir / "llm.jsonl",
        "nli": output_dir / "nli.jsonl",
        "scorer": output_dir / "scorer.jsonl",
        "config": output_dir / "config.yaml",
        "meta": output_dir / "meta.json",
    }
    write_corpus(corpus, paths["corpus"])
    judgments = {
        (script.qid, gold): 1 for script in scripts for hop in script.hops for gold in hop.gold_doc_ids
    }
    save_qrels(Qrels(judgments=judgments), paths["qrels"])
    with paths["questions"].open("w", encoding="utf-8") as handle:
        for script in scripts:
            handle.write(
                json.dumps({"qid": script.qid, "question": script.question, "answer": script.answer}) + "\n"
            )
    save_store(store, paths["embeddings"])
    save_graph(graph, paths["graph"])
    write_fixture_file(paths["llm"], rule_llm.fixture_records())
    write_fixture_file(paths["nli"], rule_nli.fixture_records())
    write_fixture_file(paths["scorer"], scorer_fixture_records(table))
    config_payload = {
        "paths": {
            "corpus": "corpus.jsonl",
            "graph": "graph.txt",
            "embeddings": "embeddings.json",
            "fixtures_dir": ".",
            "output_dir": "out",
        },
        "first_stage_k": 100,
        "graph_k": graph_k,
        "nar": {"b": 10, "c": 100, "neighbor_limit": 10},
        "pipeline": {
            "l": 10,
            "max_hops": 6,
            "asu_enabled": True,
            "mer_enabled": True,
            "m": 5,
            "temperature": 0.7,
            "exemplars": "wqa",
        },
        "clients": {"mode": "scripted"},
    }
    paths["config"].write_text(yaml.safe_dump(config_payload, sort_keys=True), encoding="utf-8")
    paths["meta"].write_text(json.dumps({**meta, "results": results}, indent=2, sort_keys=True), encoding="utf-8")
    return paths


def _build_asu_distractor_suite(output_dir: Path) -> dict[str, Path]:
    sub_question = "Where is the annual kite festival held?"
    on_topic = [
        Document(f"on{i}", f"Ceder Bay hosts the annual kite festival each spring, civic calendar {i} notes.")
        for i in range(1, 4)
    ]
    off_topic = [
        Document(f"off{i}", f"Metal alloy tensile tables list industry standards, volume {i}.")
        for i in range(1, 4)
    ]
    corpus = Corpus(tuple(off_topic + on_topic))

    table = {(sub_question, doc.text): 1.0 for doc in corpus}
    llm_records: dict[str, list[str]] = {}
    nli = RecordingEntailment(ExactMatchEntailment())

    consistent = ["Ceder Bay"] * 5
    inconsistent = list(islice(cycle(["volume nine", "the standards table", "unknown"]), 5))
    for docs, answers in ((on_topic, consistent), (off_topic, inconsistent)):
        ordered = sorted(docs, key=lambda d: d.doc_id)
        prompt = build_sampling_prompt(sub_question, ordered)
        request = ChatRequest.user(prompt, n=5, temperature=0.7)
        llm_records[fingerprint_request(request)] = answers
        clustering = cluster_answers(nli, AnswerSamples(sub_question=sub_question, answers=tuple(answers)))
        expected = 1 if answers == consistent else 3
        if clustering.s != expected:
            raise SunarError(f"suite self-check failed: s={clustering.s}, expected {expected}")

    paths = {
        "corpus": output_dir / "corpus.jsonl",
        "llm": output_dir / "llm.jsonl",
        "nli": output_dir / "nli.jsonl",
        "scorer": output_dir / "scorer.jsonl",
        "meta": output_dir / "meta.json",
    }
    write_corpus(corpus, paths["corpus"])
    write_fixture_file(
        paths["llm"], [{"fingerprint": fp, "completions": c} for fp, c in sorted(llm_records.items())]
    )
    write_fixture_file(paths["nli"], nli.fixture_records())
    write_fixture_file(paths["scorer"], scorer_fixture_records(table))
    paths["meta"].write_text(
        json.dumps(
            {
                "sub_question": sub_question,
                "on_topic": [doc.doc_id for doc in on_topic],
                "off_topic": [doc.doc_id for doc in off_topic],
                "m": 5,
                "temperature": 0.7,
            },
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    return paths
