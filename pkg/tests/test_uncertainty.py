import random

import pytest
from hypothesis import given, strategies as st

from sunar.clients import (
    ChatRequest,
    ExactMatchEntailment,
    ScriptedEntailmentClient,
    ScriptedLlmClient,
    fingerprint_request,
)
from sunar.corpus import Document
from sunar.errors import ClientError, EntailmentJudgmentError
from sunar.prompts import build_sampling_prompt
from sunar.ranking import Origin, ScoredDoc
from sunar.uncertainty import (
    AnswerSamples,
    asu_feedback_hook,
    cluster_answers,
    rescore_batch,
    sample_answers,
)


def scripted_llm_for(sub_question, evidence, completions, m, temperature=0.7):
    prompt = build_sampling_prompt(sub_question, evidence)
    request = ChatRequest.user(prompt, n=m, temperature=temperature)
    return ScriptedLlmClient({fingerprint_request(request): completions})


EVIDENCE = [Document("e1", "the capital of France is Paris")]


class TestSampleAnswers:
    def test_scripted_passthrough(self):
        llm = scripted_llm_for("capital?", EVIDENCE, ["Paris", "Paris", "Paris"], m=3)
        samples = sample_answers(llm, "capital?", EVIDENCE, m=3, temperature=0.7)
        assert samples.answers == ("Paris", "Paris", "Paris")

    def test_m_one_forces_single_set(self):
        llm = scripted_llm_for("capital?", EVIDENCE, ["Paris"], m=1)
        samples = sample_answers(llm, "capital?", EVIDENCE, m=1, temperature=0.0)
        clustering = cluster_answers(ExactMatchEntailment(), samples)
        assert clustering.s == 1

    def test_default_m_five_fixture_order(self):
        completions = ["a1", "a2", "a3", "a4", "a5"]
        llm = scripted_llm_for("q", EVIDENCE, completions, m=5)
        samples = sample_answers(llm, "q", EVIDENCE, m=5, temperature=0.7)
        assert list(samples.answers) == completions

    def test_empty_evidence_rejected(self):
        with pytest.raises(ClientError):
            sample_answers(ScriptedLlmClient({}), "q", [], m=3, temperature=0.7)

    def test_m_zero_rejected(self):
        with pytest.raises(ClientError):
            sample_answers(ScriptedLlmClient({}), "q", EVIDENCE, m=0, temperature=0.7)


class TestClusterAnswers:
    def test_identical_strings_one_set(self):
        samples = AnswerSamples("q", ("Paris", "Paris", "Paris"))
        clustering = cluster_answers(ExactMatchEntailment(), samples)
        assert clustering.s == 1
        assert clustering.sets == ((0, 1, 2),)

    def test_all_distinct_all_rejected(self):
        samples = AnswerSamples("q", ("A", "B", "C"))
        clustering = cluster_answers(ExactMatchEntailment(), samples)
        assert clustering.s == 3

    def test_scripted_paraphrase_merges_and_makes_four_judgments(self):
        calls = []

        class CountingNli:
            def __init__(self):
                self.inner = ScriptedEntailmentClient({})
                self.inner.add("Paris", "the capital Paris", True)
                self.inner.add("the capital Paris", "Paris", True)
                self.inner.add("Paris", "London", False)
                self.inner.add("London", "Paris", False)

            def entail(self, premise, hypothesis):
                calls.append((premise, hypothesis))
                return self.inner.entail(premise, hypothesis)

        samples = AnswerSamples("q", ("Paris", "the capital Paris", "London"))
        clustering = cluster_answers(CountingNli(), samples)
        assert clustering.sets == ((0, 1), (2,))
        assert clustering.s == 2
        assert len(calls) == 4  # both directions for each of the two comparisons

    def test_empty_answers_form_their_own_set(self):
        samples = AnswerSamples("q", ("", "Paris", ""))
        clustering = cluster_answers(ExactMatchEntailment(), samples)
        assert clustering.sets == ((0, 2), (1,))

    def test_failure_mid_clustering_reports_pair(self):
        class Exploding:
            def entail(self, premise, hypothesis):
                raise ClientError("backend down")

        samples = AnswerSamples("q", ("alpha", "beta"))
        with pytest.raises(EntailmentJudgmentError, match="alpha"):
            cluster_answers(Exploding(), samples)

    def test_partition_properties_on_random_oracles(self):
        rng = random.Random(17)
        for _ in range(100):
            m = rng.randint(1, 8)
            answers = tuple(f"ans{rng.randint(0, 4)}" for _ in range(m))
            distinct = sorted(set(answers))
            verdicts = {}
            client = ScriptedEntailmentClient(verdicts)
            for a in distinct:
                for b in distinct:
                    if a != b:
                        symmetric = rng.random() < 0.4
                        client.add(a, b, symmetric)
                        client.add(b, a, symmetric)
            clustering = cluster_answers(client, AnswerSamples("q", answers))
            flat = sorted(i for group in clustering.sets for i in group)
            assert flat == list(range(m))
            assert 1 <= clustering.s <= m
            again = cluster_answers(client, AnswerSamples("q", answers))
            assert again == clustering


class TestRescoreBatch:
    def batch(self, scores):
        return [
            ScoredDoc(f"d{i}", score, Origin.FIRST_STAGE, batch_index=1)
            for i, score in enumerate(scores)
        ]

    def test_divide_by_three(self):
        rescored = rescore_batch(self.batch([0.9, 0.6]), 3)
        assert [s.score for s in rescored] == [pytest.approx(0.3), pytest.approx(0.2)]

    def test_identity_divisor(self):
        batch = self.batch([0.4, 0.2])
        assert [s.score for s in rescore_batch(batch, 1)] == [0.4, 0.2]

    def test_divides_logistic_scores(self):
        import math

        raw = [1 / (1 + math.exp(-2.0)), 1 / (1 + math.exp(2.0))]
        rescored = rescore_batch(self.batch(raw), 2)
        assert rescored[0].score == pytest.approx(0.4404, abs=1e-4)
        assert rescored[1].score == pytest.approx(0.0596, abs=1e-4)

    def test_zero_s_rejected(self):
        with pytest.raises(ClientError):
            rescore_batch(self.batch([0.5]), 0)

    def test_untransformed_scores_rejected(self):
        with pytest.raises(ClientError):
            rescore_batch(self.batch([1.5]), 2)

    @given(
        st.lists(st.floats(min_value=1e-6, max_value=1 - 1e-6), min_size=1, max_size=10),
        st.integers(min_value=1, max_value=12),
    )
    def test_argsort_invariant(self, scores, s):
        batch = self.batch(scores)
        rescored = rescore_batch(batch, s)
        original_order = sorted(range(len(batch)), key=lambda i: (-batch[i].score, batch[i].doc_id))
        new_order = sorted(range(len(rescored)), key=lambda i: (-rescored[i].score, rescored[i].doc_id))
        assert original_order == new_order


class TestFeedbackHook:
    def hook_batch(self):
        docs = [Document("d1", "on topic text"), Document("d2", "more on topic")]
        batch = [
            ScoredDoc("d1", 0.8, Origin.FIRST_STAGE, batch_index=1),
            ScoredDoc("d2", 0.4, Origin.FIRST_STAGE, batch_index=1),
        ]
        return batch, docs

    def test_identical_answers_leave_scores_unchanged(self):
        batch, docs = self.hook_batch()
        llm = scripted_llm_for("q", docs, ["same", "same", "same"], m=3)
        hook = asu_feedback_hook(llm, ExactMatchEntailment(), m=3, temperature=0.7)
        scores, s = hook("q", batch, docs)
        assert s == 1
        assert scores == [0.8, 0.4]

    def test_all_distinct_divides_by_m(self):
        batch, docs = self.hook_batch()
        llm = scripted_llm_for("q", docs, ["a", "b", "c", "d", "e"], m=5)
        hook = asu_feedback_hook(llm, ExactMatchEntailment(), m=5, temperature=0.7)
        scores, s = hook("q", batch, docs)
        assert s == 5
        assert scores == [pytest.approx(0.8 / 5), pytest.approx(0.4 / 5)]

    def test_evidence_passed_in_ranked_order(self):
        docs = [Document("low", "low doc"), Document("high", "high doc")]
        batch = [
            ScoredDoc("low", 0.2, Origin.FIRST_STAGE, batch_index=1),
            ScoredDoc("high", 0.9, Origin.FIRST_STAGE, batch_index=1),
        ]
        ranked_docs = [docs[1], docs[0]]  # by descending score
        llm = scripted_llm_for("q", ranked_docs, ["x", "x", "x"], m=3)
        hook = asu_feedback_hook(llm, ExactMatchEntailment(), m=3, temperature=0.7)
        scores, s = hook("q", batch, docs)
        assert s == 1

    def test_stage_errors_are_labelled(self):
        batch, docs = self.hook_batch()
        hook = asu_feedback_hook(ScriptedLlmClient({}), ExactMatchEntailment(), m=3, temperature=0.7)
        with pytest.raises(ClientError, match="sampling stage"):
            hook("q", batch, docs)
