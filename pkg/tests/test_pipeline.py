import pytest

from sunar.clients import (
    ChatRequest,
    ScriptedCrossScorer,
    ScriptedEntailmentClient,
    ScriptedLlmClient,
    fingerprint_request,
)
from sunar.corpus import Corpus, Document, ingest_corpus
from sunar.errors import DecompositionParseError, NarError
from sunar.graph import NeighborhoodGraph, load_graph
from sunar.index import build_term_index
from sunar.nar import NarConfig, run_nar
from sunar.pipeline import (
    ASK_MARKER,
    FinalAnswer,
    FollowUp,
    PipelineConfig,
    PipelineResources,
    ReasoningPath,
    answer_question,
    answer_sub_question,
    decompose_step,
    merge_evidence,
    meta_reason,
)
from sunar.prompts import build_answer_prompt, build_meta_prompt, exemplar_block
from sunar.ranking import Origin, RankedList, ScoredDoc


def llm_for(prompt, completion, n=1, temperature=0.0):
    request = ChatRequest.user(prompt, n=n, temperature=temperature)
    return ScriptedLlmClient({fingerprint_request(request): [completion] * n})


class TestDecomposeStep:
    def test_follow_up_parsed(self):
        llm = llm_for("transcript", "Follow up: Who founded Versus?\n")
        assert decompose_step(llm, "transcript") == FollowUp("Who founded Versus?")

    def test_final_answer_parsed(self):
        llm = llm_for("transcript", "[Final Answer]: Shot.")
        assert decompose_step(llm, "transcript") == FinalAnswer("Shot.")

    def test_no_marker_is_an_error(self):
        llm = llm_for("transcript", "I have nothing to add.")
        with pytest.raises(DecompositionParseError, match="unparseable"):
            decompose_step(llm, "transcript")

    def test_generation_cut_at_intermediate_marker(self):
        completion = (
            "Yes.\nFollow up: first?\nIntermediate Answer: hallucinated\nFollow up: second?"
        )
        llm = llm_for("transcript", completion)
        assert decompose_step(llm, "transcript") == FollowUp("first?")

    def test_earlier_marker_wins(self):
        llm = llm_for("t", "[Final Answer]: done\nFollow up: too late?")
        assert decompose_step(llm, "t") == FinalAnswer("done")


class TestAnswerSubQuestion:
    def test_scripted_passthrough(self):
        evidence = [Document("d1", "some text")]
        prompt = build_answer_prompt("sub?", evidence)
        llm = llm_for(prompt, "  the answer  ")
        assert answer_sub_question(llm, "sub?", evidence) == "the answer"

    def test_empty_evidence_fails_before_llm(self):
        with pytest.raises(NarError):
            answer_sub_question(ScriptedLlmClient({}), "sub?", [])


class TestMergeEvidence:
    def make(self, pairs, batch=1):
        return RankedList(
            tuple(ScoredDoc(d, s, Origin.FIRST_STAGE, batch_index=batch) for d, s in pairs)
        )

    def test_max_score_merge_dedupes_and_truncates(self):
        first = self.make([("a", 0.9), ("b", 0.5), ("c", 0.4)])
        second = self.make([("b", 0.8), ("d", 0.7)])
        merged = merge_evidence([first, second], 3)
        assert merged.ids() == ["a", "b", "d"]
        assert merged[1].score == 0.8

    def test_merge_against_brute_force(self):
        import random

        rng = random.Random(3)
        lists = []
        for _ in range(4):
            ids = rng.sample([f"d{i}" for i in range(12)], k=rng.randint(1, 10))
            lists.append(self.make([(d, round(rng.random(), 6)) for d in ids]))
        merged = merge_evidence(lists, 5)
        best = {}
        for ranked in lists:
            for entry in ranked:
                best[entry.doc_id] = max(best.get(entry.doc_id, -1.0), entry.score)
        expected = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))[:5]
        assert [(e.doc_id, e.score) for e in merged] == expected

    def test_bounded_by_l(self):
        first = self.make([(f"d{i}", 1.0 - i / 100) for i in range(20)])
        assert len(merge_evidence([first], 10)) == 10


class TestMetaReason:
    def path(self):
        return ReasoningPath(question="Q?", steps=(), final_answer="fallback answer")

    def test_missing_marker_falls_back(self):
        docs = [Document("d", "text")]
        prompt = build_meta_prompt("Q?", "", docs)
        llm = llm_for(prompt, "no marker here")
        assert meta_reason(llm, "Q?", self.path(), docs) is None

    def test_client_failure_falls_back(self):
        docs = [Document("d", "text")]
        assert meta_reason(ScriptedLlmClient({}), "Q?", self.path(), docs) is None

    def test_marker_parsed(self):
        docs = [Document("d", "text")]
        prompt = build_meta_prompt("Q?", "", docs)
        llm = llm_for(prompt, "Key segments...\n[Final Answer]: Fred O'Bannion")
        assert meta_reason(llm, "Q?", self.path(), docs) == "Fred O'Bannion"


def suite_resources(suite):
    corpus = ingest_corpus(suite["corpus"])
    return PipelineResources(
        index=build_term_index(corpus),
        graph=load_graph(suite["graph"]),
        documents=corpus.by_id(),
        llm=ScriptedLlmClient(path=suite["llm"]),
        scorer=ScriptedCrossScorer(path=suite["scorer"]),
        nli=ScriptedEntailmentClient(path=suite["nli"]),
    )


class TestAnswerQuestionScripted:
    def test_washington_transcript(self, wqa_suite):
        resources = suite_resources(wqa_suite)
        config = PipelineConfig(asu_enabled=False, mer_enabled=False)
        path = answer_question("Who was the maternal grandfather of George Washington?", resources, config)
        assert [step.sub_question for step in path.steps] == [
            "Who was the mother of George Washington?",
            "Who was the father of Mary Ball Washington?",
        ]
        assert path.steps[0].intermediate_answer == "Mary Ball Washington"
        assert path.final_answer == "Joseph Ball"
        assert path.reported_answer == "Joseph Ball"

    def test_transcript_monotone_and_complete(self, wqa_suite):
        resources = suite_resources(wqa_suite)
        config = PipelineConfig(asu_enabled=False, mer_enabled=False)
        path = answer_question("Who was the maternal grandfather of George Washington?", resources, config)
        tail = path.transcript[path.transcript.rfind("Question:"):]
        assert tail.count("Follow up:") == len(path.steps)
        assert tail.count("Intermediate Answer:") == len(path.steps)
        assert tail.count("[Final Answer]:") == 1

    def test_immediate_final_no_steps(self):
        question = "What is one plus one?"
        transcript = f"{exemplar_block('wqa')}\nQuestion: {question}\n{ASK_MARKER}"
        llm = llm_for(transcript, " No.\n[Final Answer]: two")
        corpus = Corpus((Document("d1", "filler"),))
        resources = PipelineResources(
            index=build_term_index(corpus),
            graph=NeighborhoodGraph(k=1, adjacency={"d1": ()}),
            documents=corpus.by_id(),
            llm=llm,
            scorer=ScriptedCrossScorer({}),
            nli=None,
        )
        config = PipelineConfig(asu_enabled=False, mer_enabled=False)
        path = answer_question(question, resources, config)
        assert path.steps == ()
        assert path.final_answer == "two"
        assert path.error is None

    def test_hop_cap_sets_error_flag(self):
        class EndlessFollowUps:
            def generate(self, request):
                prompt = request.messages[-1][1]
                if prompt.startswith("Answer the question using"):
                    return ["an intermediate answer"] * request.n
                return ["Follow up: what about thing?"] * request.n

        corpus = Corpus((Document("d1", "about thing details"),))
        scorer = ScriptedCrossScorer({})
        scorer.add("what about thing?", "about thing details", 0.5)
        resources = PipelineResources(
            index=build_term_index(corpus),
            graph=NeighborhoodGraph(k=1, adjacency={"d1": ()}),
            documents=corpus.by_id(),
            llm=EndlessFollowUps(),
            scorer=scorer,
            nli=None,
        )
        config = PipelineConfig(asu_enabled=False, mer_enabled=False, max_hops=3)
        path = answer_question("loop forever?", resources, config)
        assert len(path.steps) == 3
        assert path.final_answer == ""
        assert path.error is not None and "hop cap" in path.error

    def test_table7_mer_correction(self, table7_suite):
        resources = suite_resources(table7_suite)
        config = PipelineConfig(asu_enabled=False, mer_enabled=True)
        path = answer_question(
            "Who did the screenwriter for Good Will Hunting play in Dazed and Confused?",
            resources,
            config,
        )
        assert path.final_answer == "Damon Salvatore"
        assert path.mer_answer == "Fred O'Bannion"
        assert path.reported_answer == "Fred O'Bannion"

    def test_evidence_bounded_by_l(self, e2e_suite):
        resources = suite_resources(e2e_suite)
        config = PipelineConfig(asu_enabled=True, mer_enabled=True, l=5)
        path = answer_question(
            "Where was the director of the film Crimson Harbor born?", resources, config
        )
        assert path.steps and all(len(step.evidence) <= 5 for step in path.steps)

    def test_ablation_reproduces_vanilla_rerank(self, wqa_suite):
        resources = suite_resources(wqa_suite)
        config = PipelineConfig(asu_enabled=False, mer_enabled=False)
        path = answer_question("Who was the maternal grandfather of George Washington?", resources, config)
        from sunar.index import sparse_retrieve

        for step in path.steps:
            initial = sparse_retrieve(resources.index, step.sub_question, config.first_stage_k)
            vanilla, _ = run_nar(
                step.sub_question,
                initial,
                resources.graph,
                resources.scorer,
                resources.documents,
                config.nar,
            )
            assert [(e.doc_id, e.score) for e in step.ranked] == [
                (e.doc_id, e.score) for e in vanilla
            ]
