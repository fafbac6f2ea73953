"""Operator command line: build artifacts, run pipelines, evaluate, inspect.

Exit codes: 0 success, 1 partial per-question failures, 2 configuration or
IO error. Every command is pure with respect to its declared inputs and
outputs. The heavy lifting lives in the engine layer; commands stay thin.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .config import ClientsConfig, SunarConfig, load_config, override, override_section
from .corpus import ingest_corpus
from .embeddings import embed_corpus, load_store, save_store
from .engine import SunarEngine, answers_report, build_embedder, load_questions, run_rows
from .errors import SunarError
from .evaluation import cover_em, load_qrels, load_run, metrics_report, write_run
from .graph import build_graph, save_graph
from .index import build_term_index, save_index
from .testkit import SUITE_NAMES, build_fixture_suite

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def handle_errors(func):
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except SunarError as exc:
            _fail(str(exc))

    return wrapper


def _load(config_path: str | None) -> SunarConfig:
    if config_path is None:
        return SunarConfig()
    return load_config(config_path)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="YAML config file.")
@click.pass_context
def main(ctx: click.Context, config_path: str | None) -> None:
    """Neighborhood-aware retrieval and multi-hop question answering."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


def _config(ctx: click.Context) -> SunarConfig:
    return _load(ctx.obj.get("config_path"))


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(), required=True)
@click.option("--output", "output_path", type=click.Path(), required=True)
@handle_errors
def index(corpus_path: str, output_path: str) -> None:
    """Build the lexical inverted index."""
    corpus = ingest_corpus(corpus_path)
    save_index(build_term_index(corpus), output_path)
    click.echo(f"indexed {len(corpus)} documents -> {output_path}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(), required=True)
@click.option("--output", "output_path", type=click.Path(), required=True)
@click.option("--dim", type=int, default=None, help="Embedding dimension.")
@click.option("--mode", type=click.Choice(["hash", "scripted", "http"]), default=None)
@click.pass_context
@handle_errors
def embed(ctx: click.Context, corpus_path: str, output_path: str, dim: int | None, mode: str | None) -> None:
    """Embed the corpus into a dense vector store."""
    config = _config(ctx)
    config = override(config, embed_dim=dim)
    if mode is not None:
        config = replace(config, clients=replace(config.clients, embedder=mode))
    corpus = ingest_corpus(corpus_path)
    store = embed_corpus(corpus, build_embedder(config), config.embed_dim)
    save_store(store, output_path)
    click.echo(f"embedded {len(store)} documents at dim {store.dim} -> {output_path}")


@main.command()
@click.option("--embeddings", "embeddings_path", type=click.Path(), required=True)
@click.option("--output", "output_path", type=click.Path(), required=True)
@click.option("--k", type=int, default=None, help="Neighbors per node (default 100).")
@click.pass_context
@handle_errors
def graph(ctx: click.Context, embeddings_path: str, output_path: str, k: int | None) -> None:
    """Build the document neighborhood graph."""
    config = _config(ctx)
    store = load_store(embeddings_path)
    built = build_graph(store, k=k or config.graph_k)
    save_graph(built, output_path)
    click.echo(f"graph over {len(built)} nodes, {built.edge_count()} edges -> {output_path}")


@main.command()
@click.option("--query", required=True)
@click.option("--k", type=int, default=None)
@click.option("--rerank", is_flag=True, default=False, help="Apply budgeted graph re-ranking.")
@click.option("--output", "output_path", type=click.Path(), default=None, help="Write a run file.")
@click.pass_context
@handle_errors
def retrieve(ctx: click.Context, query: str, k: int | None, rerank: bool, output_path: str | None) -> None:
    """First-stage retrieval (optionally re-ranked) for one query."""
    engine = SunarEngine.from_config(_config(ctx))
    if rerank:
        ranked, _ = engine.rerank(query)
        ranked = ranked.top(k or engine.config.first_stage_k)
    else:
        ranked = engine.retrieve(query, k)
    for rank, entry in enumerate(ranked, start=1):
        click.echo(f"{rank}\t{entry.doc_id}\t{entry.score:.6f}\t{entry.origin.value}")
    if output_path:
        write_run(output_path, {"q1": [(e.doc_id, e.score) for e in ranked]}, tag="sunar")


@main.command()
@click.option("--questions", "questions_path", type=click.Path(), required=True)
@click.option("--qrels", "qrels_path", type=click.Path(), default=None)
@click.option("--output-dir", type=click.Path(), default=None)
@click.option("--asu/--no-asu", "asu_enabled", default=None)
@click.option("--mer/--no-mer", "mer_enabled", default=None)
@click.option("--l", "context_l", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.pass_context
@handle_errors
def run(
    ctx: click.Context,
    questions_path: str,
    qrels_path: str | None,
    output_dir: str | None,
    asu_enabled: bool | None,
    mer_enabled: bool | None,
    context_l: int | None,
    workers: int | None,
) -> None:
    """Answer a question file; write answers, run file, and metrics report."""
    config = _config(ctx)
    config = override(config, workers=workers)
    engine = SunarEngine.from_config(config)
    questions = load_questions(questions_path)
    qrels = load_qrels(qrels_path) if qrels_path else None

    results = engine.run_questions(
        questions,
        workers=config.workers,
        asu_enabled=asu_enabled,
        mer_enabled=mer_enabled,
        l=context_l,
    )

    out_dir = Path(output_dir or config.paths.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    answers_path = out_dir / "answers.jsonl"
    with answers_path.open("w", encoding="utf-8") as handle:
        for result in results:
            handle.write(json.dumps(result.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    write_run(out_dir / "subquestions.run", run_rows(results), tag="sunar")
    report = answers_report(results, questions, qrels)
    (out_dir / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")

    cover = report["metrics"].get("cover_em", {}).get("mean")
    if cover is not None:
        click.echo(f"cover-EM {cover:.4f} over {len(results)} questions")
    if report["failed_qids"]:
        click.echo(f"failed questions: {', '.join(report['failed_qids'])}", err=True)
        sys.exit(EXIT_PARTIAL)


@main.command()
@click.option("--question", required=True)
@click.option("--asu/--no-asu", "asu_enabled", default=None)
@click.option("--mer/--no-mer", "mer_enabled", default=None)
@click.option("--trace", "trace_dir", type=click.Path(), default=None, help="Write per-hop trace JSONL here.")
@click.pass_context
@handle_errors
def ask(
    ctx: click.Context,
    question: str,
    asu_enabled: bool | None,
    mer_enabled: bool | None,
    trace_dir: str | None,
) -> None:
    """Answer one question and print the final answer."""
    engine = SunarEngine.from_config(_config(ctx))
    path = engine.answer(question, asu_enabled=asu_enabled, mer_enabled=mer_enabled)
    for step in path.steps:
        click.echo(f"hop {step.index}: {step.sub_question} -> {step.intermediate_answer}")
    click.echo(path.reported_answer)
    if trace_dir:
        target = Path(trace_dir)
        target.mkdir(parents=True, exist_ok=True)
        for step in path.steps:
            lines = [json.dumps(item, sort_keys=True) for item in step.trace.to_dicts()]
            (target / f"hop{step.index}.trace.jsonl").write_text(
                "\n".join(lines) + "\n", encoding="utf-8"
            )
    if path.error:
        sys.exit(EXIT_PARTIAL)


@main.command(name="eval")
@click.option("--run", "run_path", type=click.Path(), required=True)
@click.option("--qrels", "qrels_path", type=click.Path(), required=True)
@click.option("--k", "ks", type=int, multiple=True, default=(10,))
@click.option("--answers", "answers_path", type=click.Path(), default=None)
@click.option("--questions", "questions_path", type=click.Path(), default=None)
@click.option("--output", "output_path", type=click.Path(), default=None)
@handle_errors
def eval_cmd(
    run_path: str,
    qrels_path: str,
    ks: tuple[int, ...],
    answers_path: str | None,
    questions_path: str | None,
    output_path: str | None,
) -> None:
    """Score a run file (and optionally answers) against qrels."""
    run_data = load_run(run_path)
    qrels = load_qrels(qrels_path)
    if not run_data:
        click.echo("warning: empty run file; all metrics are zero", err=True)
    cover = None
    if answers_path and questions_path:
        gold = {q.qid: q.answer for q in load_questions(questions_path) if q.answer is not None}
        cover = {}
        with Path(answers_path).open("r", encoding="utf-8") as handle:
            for line in handle:
                if not line.strip():
                    continue
                record = json.loads(line)
                qid = record.get("qid")
                if qid in gold:
                    cover[qid] = cover_em(record.get("answer", ""), gold[qid])
    report = metrics_report(run_data, qrels, list(ks), cover_em_values=cover)
    text = json.dumps(report, indent=2, sort_keys=True)
    if output_path:
        Path(output_path).write_text(text, encoding="utf-8")
    click.echo(text)


@main.command()
@click.argument("trace_path", type=click.Path())
@handle_errors
def trace(trace_path: str) -> None:
    """Summarize a trace file written by `ask --trace`."""
    path = Path(trace_path)
    if not path.exists():
        _fail(f"trace file not found: {trace_path}")
    pools = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        item = json.loads(line)
        pools.append(item["pool"])
        s_text = f" s={item['s']}" if item.get("s") is not None else ""
        click.echo(
            f"iteration {item['iteration']}: pool={item['pool']} (scheduled {item['scheduled_pool']}) "
            f"batch={len(item['doc_ids'])}{s_text}"
        )
    click.echo(f"pools: {','.join(pools)}")


@main.command()
@click.option("--suite", type=click.Choice(SUITE_NAMES), required=True)
@click.option("--output-dir", type=click.Path(), required=True)
@handle_errors
def fixtures(suite: str, output_dir: str) -> None:
    """Generate a named scripted fixture suite."""
    paths = build_fixture_suite(suite, output_dir)
    for name, path in sorted(paths.items()):
        click.echo(f"{name}: {path}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.pass_context
@handle_errors
def serve(ctx: click.Context, host: str, port: int) -> None:
    """Run the HTTP service over the configured artifacts."""
    import uvicorn

    from .service import create_app

    app = create_app(config=_config(ctx))
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
