import json

import pytest
from click.testing import CliRunner

from sunar.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, args, **kw):
    result = runner.invoke(main, args, catch_exceptions=False, **kw)
    return result


class TestBuildCommands:
    def test_index_empty_corpus_exits_2(self, runner, tmp_path):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("", encoding="utf-8")
        result = runner.invoke(main, ["index", "--corpus", str(corpus), "--output", str(tmp_path / "i.json")])
        assert result.exit_code == 2
        assert "empty corpus" in result.output

    def test_index_embed_graph_chain(self, runner, tmp_path, e2e_suite):
        index_out = tmp_path / "index.json"
        result = invoke(runner, ["index", "--corpus", str(e2e_suite["corpus"]), "--output", str(index_out)])
        assert result.exit_code == 0 and index_out.exists()

        emb_out = tmp_path / "emb.json"
        result = invoke(
            runner,
            ["embed", "--corpus", str(e2e_suite["corpus"]), "--output", str(emb_out), "--dim", "8",
             "--mode", "hash"],
        )
        assert result.exit_code == 0 and emb_out.exists()

        graph_out = tmp_path / "graph.txt"
        result = invoke(
            runner,
            ["graph", "--embeddings", str(emb_out), "--output", str(graph_out), "--k", "5"],
        )
        assert result.exit_code == 0
        assert graph_out.read_text().splitlines()[0] == "SUNAR-GRAPH v1 k=5"

    def test_embed_hash_mode_is_reproducible(self, runner, tmp_path, e2e_suite):
        import hashlib

        outputs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            invoke(
                runner,
                ["embed", "--corpus", str(e2e_suite["corpus"]), "--output", str(out), "--dim", "8",
                 "--mode", "hash"],
            )
            outputs.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert outputs[0] == outputs[1]


class TestQueryCommands:
    def test_retrieve_prints_ranked_rows(self, runner, e2e_suite):
        result = invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "retrieve", "--query", "Dana Frost television", "--k", "3"],
        )
        assert result.exit_code == 0
        rows = [line for line in result.output.splitlines() if line.strip()]
        assert len(rows) == 3
        assert rows[0].startswith("1\t")

    def test_ask_prints_answer(self, runner, e2e_suite):
        result = invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "ask", "--question",
             "What is the capital of the country where Mount Vexen is located?"],
        )
        assert result.exit_code == 0
        assert "Quillon" in result.output

    def test_ask_missing_graph_names_build_command(self, runner, tmp_path, e2e_suite):
        config = tmp_path / "config.yaml"
        config.write_text(
            f"paths:\n  corpus: {e2e_suite['corpus']}\n  graph: {tmp_path / 'nope.txt'}\n"
            f"  fixtures_dir: {e2e_suite['corpus'].parent}\n",
            encoding="utf-8",
        )
        result = runner.invoke(
            main, ["--config", str(config), "ask", "--question", "anything"]
        )
        assert result.exit_code == 2
        assert "sunar graph" in result.output

    def test_ask_trace_emits_alternating_pools(self, runner, tmp_path, e2e_suite):
        trace_dir = tmp_path / "traces"
        result = invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "ask", "--question",
             "Where was the director of the film Crimson Harbor born?", "--trace", str(trace_dir)],
        )
        assert result.exit_code == 0
        trace_files = sorted(trace_dir.glob("hop*.trace.jsonl"))
        assert len(trace_files) == 2
        pools = [json.loads(line)["pool"] for line in trace_files[0].read_text().splitlines()]
        assert pools[0] == "R"
        assert "N" in pools

        summary = invoke(runner, ["trace", str(trace_files[0])])
        assert summary.exit_code == 0
        assert "pools: R," in summary.output

    def test_run_writes_outputs_and_reports_cover_em(self, runner, tmp_path, e2e_suite):
        out_dir = tmp_path / "out"
        result = invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "run",
             "--questions", str(e2e_suite["questions"]),
             "--qrels", str(e2e_suite["qrels"]),
             "--output-dir", str(out_dir)],
        )
        assert result.exit_code == 0
        assert "cover-EM 1.0000" in result.output
        assert (out_dir / "answers.jsonl").exists()
        assert (out_dir / "subquestions.run").exists()
        report = json.loads((out_dir / "report.json").read_text())
        assert report["metrics"]["cover_em"]["mean"] == 1.0
        first_run_line = (out_dir / "subquestions.run").read_text().splitlines()[0]
        assert first_run_line.split()[0].count(".") == 1  # qid formed as <qid>.<hop>

    def test_run_ablation_drops_distractor_question(self, runner, tmp_path, e2e_suite):
        out_dir = tmp_path / "plain"
        result = invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "run",
             "--questions", str(e2e_suite["questions"]),
             "--output-dir", str(out_dir), "--no-asu", "--no-mer"],
        )
        assert result.exit_code == 0
        assert "cover-EM 0.8000" in result.output

    def test_run_l_flag_changes_only_context_truncation(self, runner, tmp_path, e2e_suite):
        outputs = {}
        for l in (5, 10):
            out_dir = tmp_path / f"l{l}"
            result = invoke(
                runner,
                ["--config", str(e2e_suite["config"]), "run",
                 "--questions", str(e2e_suite["questions"]),
                 "--output-dir", str(out_dir), "--l", str(l)],
            )
            assert result.exit_code == 0
            outputs[l] = out_dir
        run5 = (outputs[5] / "subquestions.run").read_bytes()
        run10 = (outputs[10] / "subquestions.run").read_bytes()
        assert run5 == run10  # retrieval unchanged
        answers5 = [json.loads(line) for line in (outputs[5] / "answers.jsonl").read_text().splitlines()]
        answers10 = [json.loads(line) for line in (outputs[10] / "answers.jsonl").read_text().splitlines()]
        assert all(len(step["evidence"]) <= 5 for a in answers5 for step in a["steps"])
        assert any(len(step["evidence"]) > 5 for a in answers10 for step in a["steps"])
        assert [a["answer"] for a in answers5] == [a["answer"] for a in answers10]


class TestPartialFailures:
    def test_run_exit_code_1_when_a_question_hard_fails(self, runner, tmp_path, e2e_suite):
        questions = tmp_path / "questions.jsonl"
        lines = e2e_suite["questions"].read_text().splitlines()
        lines.append(json.dumps({"qid": "bad1", "question": "A question with no fixtures?", "answer": "x"}))
        questions.write_text("\n".join(lines) + "\n", encoding="utf-8")
        out_dir = tmp_path / "out"
        result = runner.invoke(
            main,
            ["--config", str(e2e_suite["config"]), "run",
             "--questions", str(questions), "--output-dir", str(out_dir)],
        )
        assert result.exit_code == 1
        assert "bad1" in result.output
        answers = [json.loads(line) for line in (out_dir / "answers.jsonl").read_text().splitlines()]
        assert len(answers) == 6  # the failing question is still recorded
        failed = [a for a in answers if a["qid"] == "bad1"]
        assert failed[0]["error"]


class TestScriptedEmbedder:
    def test_embed_scripted_mode_reproducible(self, runner, tmp_path, e2e_suite):
        import hashlib

        from sunar.clients import fingerprint_text, write_fixture_file
        from sunar.corpus import ingest_corpus

        corpus = ingest_corpus(e2e_suite["corpus"])
        fixtures_dir = tmp_path / "fixtures"
        fixtures_dir.mkdir()
        records = [
            {"fingerprint": fingerprint_text(doc.text), "vector": [float(i % 3), 1.0]}
            for i, doc in enumerate(corpus)
        ]
        write_fixture_file(fixtures_dir / "embedder.jsonl", records)
        config = tmp_path / "config.yaml"
        config.write_text(
            f"paths:\n  fixtures_dir: {fixtures_dir}\nembed_dim: 2\n", encoding="utf-8"
        )
        digests = []
        for name in ("one.json", "two.json"):
            out = tmp_path / name
            result = invoke(
                runner,
                ["--config", str(config), "embed", "--corpus", str(e2e_suite["corpus"]),
                 "--output", str(out), "--mode", "scripted"],
            )
            assert result.exit_code == 0
            digests.append(hashlib.sha256(out.read_bytes()).hexdigest())
        assert digests[0] == digests[1]


class TestEvalCommand:
    def test_eval_k_columns(self, runner, tmp_path):
        run_path = tmp_path / "run.txt"
        run_path.write_text("q1 Q0 d1 1 2.000000 t\nq1 Q0 d2 2 1.000000 t\n", encoding="utf-8")
        qrels_path = tmp_path / "qrels.txt"
        qrels_path.write_text("q1 0 d2 1\n", encoding="utf-8")
        result = invoke(
            runner,
            ["eval", "--run", str(run_path), "--qrels", str(qrels_path), "--k", "1", "--k", "10"],
        )
        assert result.exit_code == 0
        report = json.loads(result.output[result.output.index("{"):])
        assert report["metrics"]["recall@1"]["mean"] == 0.0
        assert report["metrics"]["recall@10"]["mean"] == 1.0

    def test_eval_empty_run_warns_and_zeroes(self, runner, tmp_path):
        run_path = tmp_path / "run.txt"
        run_path.write_text("", encoding="utf-8")
        qrels_path = tmp_path / "qrels.txt"
        qrels_path.write_text("q1 0 d2 1\n", encoding="utf-8")
        result = invoke(runner, ["eval", "--run", str(run_path), "--qrels", str(qrels_path), "--k", "10"])
        assert result.exit_code == 0
        assert "warning" in result.output
        report = json.loads(result.output[result.output.index("{"):])
        assert report["metrics"]["recall@10"]["mean"] == 0.0

    def test_eval_with_answers_reports_cover_em(self, runner, tmp_path, e2e_suite):
        out_dir = tmp_path / "out"
        invoke(
            runner,
            ["--config", str(e2e_suite["config"]), "run",
             "--questions", str(e2e_suite["questions"]), "--output-dir", str(out_dir)],
        )
        # hop-level qrels: judgments keyed by "<qid>.<hop>" for the run file
        hop_qrels = tmp_path / "hop_qrels.txt"
        lines = []
        for line in e2e_suite["qrels"].read_text().splitlines():
            qid, zero, doc_id, grade = line.split()
            for hop in (1, 2):
                lines.append(f"{qid}.{hop} {zero} {doc_id} {grade}")
        hop_qrels.write_text("\n".join(lines) + "\n", encoding="utf-8")
        result = invoke(
            runner,
            ["eval", "--run", str(out_dir / "subquestions.run"), "--qrels", str(hop_qrels),
             "--k", "10",
             "--answers", str(out_dir / "answers.jsonl"),
             "--questions", str(e2e_suite["questions"])],
        )
        assert result.exit_code == 0
        report = json.loads(result.output[result.output.index("{"):])
        assert report["metrics"]["cover_em"]["mean"] == 1.0
        assert report["metrics"]["recall@10"]["mean"] > 0.0

    def test_eval_malformed_run_exits_2(self, runner, tmp_path):
        run_path = tmp_path / "run.txt"
        run_path.write_text("garbage\n", encoding="utf-8")
        qrels_path = tmp_path / "qrels.txt"
        qrels_path.write_text("q1 0 d2 1\n", encoding="utf-8")
        result = runner.invoke(main, ["eval", "--run", str(run_path), "--qrels", str(qrels_path)])
        assert result.exit_code == 2
        assert ":1:" in result.output


class TestFixturesCommand:
    def test_builds_named_suite(self, runner, tmp_path):
        result = invoke(runner, ["fixtures", "--suite", "wqa-exemplars", "--output-dir", str(tmp_path / "s")])
        assert result.exit_code == 0
        assert (tmp_path / "s" / "llm.jsonl").exists()
