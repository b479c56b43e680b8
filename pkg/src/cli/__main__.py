"""
CLI entry point for the FG-RAG query-focused summarization engine.
Usage: python -m src.cli index --corpus ./docs --out ./idx --mock-seed 7
       python -m src.cli query --index ./idx --q "What are the main themes?" --mock-seed 7
       python -m src.cli stats --index ./idx
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional

from src.adapters.chunker import chunk_corpus, dump_chunks
from src.adapters.text_corpus_adapter import build_corpus_digest, load_corpus
from src.adapters.tokenizers import get_tokenizer
from src.cli.run_config import RunConfig, load_env_file, load_run_config, with_mock_seed
from src.db.index_store import IndexManifest, index_stats, load_index, manifest_timestamp, save_index
from src.embeddings.embeddings_factory import EmbeddingsFactory
from src.llm.base_provider import DecodingOptions
from src.llm.gateway import LLMGateway
from src.llm.provider_factory import ProviderFactory
from src.llm.usage import TokenUsageReport
from src.query.fine_grained_summarizer import FineGrainedSummarizer
from src.search.entity_expansion import dump_subgraph, retrieve_subgraph
from src.setup.graph_index_builder import GraphIndexBuilder
from src.validation.multihop_scoring import load_gold_items, load_predictions, score_multihop
from src.validation.qfs_judge import judge_answer_sets, win_rates_from_judgments, write_win_rate_outputs
from src.validation.query_generation import generate_qfs_queries, read_queries, write_queries

logger = logging.getLogger("src.cli")

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(name)s - %(message)s'


def configure_logging(level: str) -> None:
    logging.basicConfig(level=getattr(logging, level.upper(), logging.INFO), format=LOG_FORMAT, stream=sys.stderr, force=True)


def create_gateway(cfg: RunConfig, tokenizer_id: Optional[str] = None, embedding_dim: Optional[int] = None) -> LLMGateway:
    """Build the gateway for the configured backends."""
    backend = cfg.backend
    tokenizer = get_tokenizer(tokenizer_id or cfg.chunking.tokenizer_id)
    provider = ProviderFactory.create(
        provider=backend.provider,
        seed=cfg.seed,
        endpoint=backend.endpoint,
        model=backend.model,
        tokenizer=tokenizer,
    )
    embedder = EmbeddingsFactory.create(
        provider=backend.embeddings_provider,
        seed=cfg.seed,
        dimension=embedding_dim or backend.embedding_dim,
        endpoint=backend.embedding_endpoint,
        model=backend.embedding_model,
    )
    return LLMGateway(
        provider,
        embedder,
        tokenizer=tokenizer,
        max_retries=backend.max_retries,
        backoff_seconds=backend.backoff_seconds,
        token_budget=backend.token_budget,
        max_in_flight=backend.max_in_flight,
        expected_embedding_dim=embedding_dim or embedder.dimension,
        default_decoding=DecodingOptions(temperature=backend.temperature, max_tokens=backend.max_tokens, seed=cfg.seed),
    )


def _require(value: Optional[str], flag: str) -> str:
    if not value:
        raise ValueError(f"{flag} is required (flag or config file)")
    return value


def _print_json(data: Dict[str, Any]) -> None:
    print(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False))


def _write_json(path: Path, data: Dict[str, Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")


def _read_jsonl(path: str) -> List[Dict[str, Any]]:
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def index_command(args, cfg: RunConfig) -> int:
    """Build and save an index."""
    corpus_dir = _require(cfg.corpus.dir, "--corpus")
    index_dir = _require(cfg.index.dir, "--out")
    gateway = create_gateway(cfg)

    documents = load_corpus(corpus_dir)
    if args.dump_chunks:
        dump_chunks(chunk_corpus(documents, cfg.chunking, get_tokenizer(cfg.chunking.tokenizer_id)), args.dump_chunks)

    builder = GraphIndexBuilder(gateway, cfg.chunking, cfg.extraction.gleaning_passes)
    result = builder.build(documents)

    manifest = IndexManifest(
        tokenizer_id=cfg.chunking.tokenizer_id,
        embedding_dim=gateway.expected_embedding_dim,
        created_at=manifest_timestamp(deterministic=cfg.backend.is_mock),
        config=cfg.to_dict(),
        template_checksums=gateway.template_checksums(),
        indexing_usage=gateway.usage_report().to_dict(),
    )
    manifest = save_index(result.graph, result.store, manifest, index_dir)

    _print_json({
        "status": "ok",
        "index": index_dir,
        "digest": manifest.digest,
        "entities": manifest.entity_count,
        "relationships": manifest.relationship_count,
        "chunks": result.stats["chunks"],
        "failed_chunks": [f.to_dict() for f in result.failures],
        "usage": gateway.usage_report().headline(),
    })
    return 0


def _load(cfg: RunConfig):
    index_dir = _require(cfg.index.dir, "--index")
    graph, store, manifest = load_index(index_dir)
    gateway = create_gateway(cfg, tokenizer_id=manifest.tokenizer_id, embedding_dim=manifest.embedding_dim)
    return graph, store, manifest, gateway


def query_command(args, cfg: RunConfig) -> int:
    """Answer one query: markdown on stdout, JSON document at --json-out."""
    graph, store, manifest, gateway = _load(cfg)
    summarizer = FineGrainedSummarizer(gateway, graph, store, cfg.retrieval, cfg.summarizer)
    answer = summarizer.answer_query(args.q)

    document = answer.to_dict()
    document["usage_report"] = gateway.usage_report().to_dict()
    document["index_digest"] = manifest.digest
    document["config"] = cfg.to_dict()
    _write_json(Path(args.json_out), document)

    print(answer.to_markdown())
    return 0


def batch_query_command(args, cfg: RunConfig) -> int:
    """Answer every query of a query file; one JSON line per answer."""
    graph, store, manifest, gateway = _load(cfg)
    summarizer_cfg = replace(cfg.summarizer, answer_style=args.answer_style) if args.answer_style else cfg.summarizer
    summarizer = FineGrainedSummarizer(gateway, graph, store, cfg.retrieval, summarizer_cfg)
    system = args.system or cfg.evaluation.system_name

    queries = read_queries(args.queries)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8") as f:
        for query_id, text in queries:
            answer = summarizer.answer_query(text)
            f.write(json.dumps({
                "query_id": query_id,
                "system": system,
                "query": text,
                "text": answer.text,
                "usage": answer.usage.to_dict(),
            }, ensure_ascii=False, sort_keys=True) + "\n")

    _print_json({
        "status": "ok",
        "answers": len(queries),
        "out": str(out),
        "system": system,
        "usage": gateway.usage_report().headline(),
        "config": cfg.to_dict(),
    })
    return 0


def _answer_set(path: str):
    records = _read_jsonl(path)
    if not records:
        raise ValueError(f"Answer file {path} is empty")
    systems = {r.get("system") for r in records}
    system = records[0].get("system") or Path(path).stem
    if len(systems) > 1:
        raise ValueError(f"Answer file {path} mixes systems: {', '.join(sorted(map(str, systems)))}")
    answers = {str(r["query_id"]): r["text"] for r in records}
    queries = {str(r["query_id"]): r.get("query", "") for r in records}
    return system, answers, queries


def eval_qfs_command(args, cfg: RunConfig) -> int:
    """Judge two systems' answers pairwise and write win-rate outputs."""
    system_a, answers_a, queries_a = _answer_set(args.answers_a)
    system_b, answers_b, _ = _answer_set(args.answers_b)
    if system_a == system_b:
        system_a, system_b = f"{system_a}-a", f"{system_b}-b"

    queries = read_queries(args.queries) if args.queries else list(queries_a.items())
    gateway = create_gateway(cfg)
    judgments = judge_answer_sets(queries, answers_a, answers_b, gateway, system_a, system_b)
    table = win_rates_from_judgments(judgments, (system_a, system_b))
    paths = write_win_rate_outputs(table, judgments, args.out)

    print(table.to_markdown())
    logger.info(f"Win rates written to {paths['csv']}; evaluation tokens: {gateway.usage.total().total_tokens}")
    return 0


def eval_multihop_command(args, cfg: RunConfig) -> int:
    score = score_multihop(load_predictions(args.predictions), load_gold_items(args.gold))
    report = {"status": "ok", **score.to_dict()}
    if args.out:
        _write_json(Path(args.out), report)
    _print_json(report)
    return 0


def stats_command(args, cfg: RunConfig) -> int:
    """Print graph, store and usage statistics of an index."""
    index_dir = _require(cfg.index.dir, "--index")
    graph, store, manifest = load_index(index_dir)
    stats = index_stats(graph, store, manifest)

    headline = {"indexing_tokens": 0, "query_tokens": 0}
    if manifest.indexing_usage:
        headline["indexing_tokens"] = TokenUsageReport.from_dict(manifest.indexing_usage).indexing_tokens
    if args.answers:
        answer = json.loads(Path(args.answers).read_text(encoding="utf-8"))
        if "usage_report" in answer:
            headline["query_tokens"] = TokenUsageReport.from_dict(answer["usage_report"]).query_tokens
        else:
            headline["query_tokens"] = int(answer.get("usage", {}).get("total_tokens", 0))
    stats["headline"] = headline
    _print_json(stats)
    return 0


def dump_subgraph_command(args, cfg: RunConfig) -> int:
    """Write the retrieval subgraph of one query entity as JSON lines."""
    graph, store, manifest, gateway = _load(cfg)
    sg = retrieve_subgraph(args.entity, cfg.retrieval, store, graph, gateway)
    if args.out == "-":
        count = dump_subgraph(sg, graph, sys.stdout)
    else:
        count = dump_subgraph(sg, graph, args.out)
    logger.info(f"Dumped {count} subgraph records for '{args.entity}'")
    return 0


def generate_queries_command(args, cfg: RunConfig) -> int:
    corpus_dir = _require(cfg.corpus.dir, "--corpus")
    evaluation = cfg.evaluation
    digest = build_corpus_digest(load_corpus(corpus_dir), evaluation.digest_chars)
    gateway = create_gateway(cfg)
    result = generate_qfs_queries(digest, gateway, evaluation.num_users, evaluation.num_tasks, evaluation.num_queries)
    write_queries(result.queries, args.out)
    _print_json({"status": "ok", "out": args.out, **result.to_dict()})
    return 0


COMMANDS = {
    "index": index_command,
    "query": query_command,
    "batch-query": batch_query_command,
    "eval-qfs": eval_qfs_command,
    "eval-multihop": eval_multihop_command,
    "stats": stats_command,
    "dump-subgraph": dump_subgraph_command,
    "generate-queries": generate_queries_command,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file (see config/fg_rag_config.yaml)")
    common.add_argument("--show-config", action="store_true", help="Print the effective config (JSON, stderr)")
    common.add_argument("--mock-seed", type=int, help="Use the mock LLM and embedder with this seed")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="Logging level")

    parser = argparse.ArgumentParser(prog="python -m src.cli", description="FG-RAG query-focused summarization CLI")
    subparsers = parser.add_subparsers(dest="command", required=True, help="Command to execute")

    index_parser = subparsers.add_parser("index", parents=[common], help="Build an index from a corpus directory")
    index_parser.add_argument("--corpus", help="Corpus directory")
    index_parser.add_argument("--out", help="Index directory to write")
    index_parser.add_argument("--chunk-size", type=int, help="Chunk size in tokens")
    index_parser.add_argument("--overlap", type=int, help="Chunk overlap in tokens")
    index_parser.add_argument("--gleaning-passes", type=int, help="Extra extraction passes per chunk")
    index_parser.add_argument("--dump-chunks", help="Also write the chunks as JSON lines to this file")

    for name, help_text in (("query", "Answer one query"), ("batch-query", "Answer a file of queries"), ("dump-subgraph", "Dump the retrieval subgraph of an entity")):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--index", help="Index directory")
        sub.add_argument("--top-n-weak", type=int, help="Weak-context matches per query entity")
        sub.add_argument("--top-n-strong", type=int, help="Strong-context matches per weak entity")
        sub.add_argument("--bfs-depth", type=int, help="BFS depth around seed entities")
        sub.add_argument("--max-descriptions", type=int, help="Description cap per subgraph")
        sub.add_argument("--no-expansion", action="store_true", help="Use direct matches only")
        if name == "query":
            sub.add_argument("--q", required=True, help="Query text")
            sub.add_argument("--json-out", default="answer.json", help="Where to write the answer JSON")
        elif name == "batch-query":
            sub.add_argument("--queries", required=True, help="Query file (JSON lines)")
            sub.add_argument("--out", required=True, help="Answer file to write (JSON lines)")
            sub.add_argument("--system", help="System name recorded with each answer")
            sub.add_argument("--answer-style", choices=["report", "short"], help="Answer style")
        else:
            sub.add_argument("--entity", required=True, help="Query entity")
            sub.add_argument("--out", default="-", help="Output file, '-' for stdout")

    qfs_parser = subparsers.add_parser("eval-qfs", parents=[common], help="Pairwise-judge two answer files")
    qfs_parser.add_argument("--answers-a", required=True, help="Answers of system A (JSON lines)")
    qfs_parser.add_argument("--answers-b", required=True, help="Answers of system B (JSON lines)")
    qfs_parser.add_argument("--queries", help="Query file; defaults to the queries recorded in --answers-a")
    qfs_parser.add_argument("--out", required=True, help="Output directory")

    mh_parser = subparsers.add_parser("eval-multihop", parents=[common], help="Score multi-hop predictions")
    mh_parser.add_argument("--gold", required=True, help="Gold items (JSON lines)")
    mh_parser.add_argument("--predictions", required=True, help="Predictions (JSON lines)")
    mh_parser.add_argument("--out", help="Optional JSON report path")

    stats_parser = subparsers.add_parser("stats", parents=[common], help="Print index statistics")
    stats_parser.add_argument("--index", help="Index directory")
    stats_parser.add_argument("--answers", help="Answer JSON whose query tokens are reported")

    gen_parser = subparsers.add_parser("generate-queries", parents=[common], help="Generate QFS queries for a corpus")
    gen_parser.add_argument("--corpus", help="Corpus directory")
    gen_parser.add_argument("--out", required=True, help="Query file to write (JSON lines)")

    return parser


def flag_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Nested config mapping from the parsed flags; unset flags are None."""
    get = lambda name: getattr(args, name, None)
    corpus = get("corpus")
    index = get("index") if args.command != "index" else get("out")
    return {
        "corpus": {"dir": corpus},
        "index": {"dir": index},
        "chunking": {"chunk_size": get("chunk_size"), "overlap_tokens": get("overlap")},
        "extraction": {"gleaning_passes": get("gleaning_passes")},
        "retrieval": {
            "top_n_weak": get("top_n_weak"),
            "top_n_strong_per_seed": get("top_n_strong"),
            "bfs_depth": get("bfs_depth"),
            "max_descriptions": get("max_descriptions"),
            "expansion_enabled": False if get("no_expansion") else None,
        },
        "logging": {"level": get("log_level")},
    }


def run_command(argv: Optional[List[str]] = None) -> int:
    """
    Parse argv and run one command.

    Returns:
        0 on success, 1 after a structured error on stderr (argparse exits 2 on bad flags)
    """
    args = build_parser().parse_args(argv)
    load_env_file()

    try:
        cfg = load_run_config(args.config, flag_overrides(args))
        if args.mock_seed is not None:
            cfg = with_mock_seed(cfg, args.mock_seed)
        configure_logging(cfg.logging.level)
        if args.show_config:
            print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True), file=sys.stderr)

        start_time = time.time()
        status = COMMANDS[args.command](args, cfg)
        logger.info(f"{args.command} finished in {time.time() - start_time:.2f}s")
        return status
    except Exception as e:
        logger.debug("Command failed", exc_info=True)
        error_report = {
            "status": "fail",
            "error_type": type(e).__name__,
            "message": str(e),
        }
        print(json.dumps(error_report), file=sys.stderr)
        return 1


def main():
    """Main entry point."""
    sys.exit(run_command())


if __name__ == "__main__":
    main()
