"""Command-line entry point chaining the pipeline stages:
clean -> score/judge -> tier -> sample -> augment -> rollout -> pair ->
export -> serve.

Every run writes a manifest next to its primary output recording input
content hashes, seeds, and the package version, so identical manifests imply
byte-identical outputs (stubs included).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

from . import __version__
from .cleaning import ByteTokenCounter, GENERIC_SYSTEM_PROMPT, clean_pipeline
from .curation import TieredQuery, assign_tiers, stratified_sample
from .judge import HttpJudgeClient, judge_all, pairwise_judge, summarize_tools
from .metrics import score_algorithmic
from .model import (
    Query,
    Trajectory,
    ValidationError,
    read_records,
    read_tool_catalog,
    read_trajectories,
    write_records,
    write_trajectories,
)
from .pool import (
    HashingEmbeddingClient,
    ToolPool,
    build_pool,
    embed_catalog,
)
from .preference import PreferencePair, build_pairs
from .rollout import RolloutConfig, load_fixture_catalog, run_rollout
from .stubs import ImmediateAnswerModel, SingleToolModel, StubJudgeClient
from .trainprep import (
    compute_mask,
    export_preference_file,
    export_sft_file,
)

log = logging.getLogger("trajkit")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path: str, command: str, args: argparse.Namespace, inputs: Sequence[str]) -> None:
    manifest = {
        "command": command,
        "version": __version__,
        "seed": getattr(args, "seed", None),
        "args": {
            k: v for k, v in sorted(vars(args).items())
            if k not in ("func", "config") and not callable(v)
        },
        "inputs": {p: _sha256(Path(p)) for p in sorted(inputs) if Path(p).exists()},
    }
    Path(f"{out_path}.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _trajectories_by_query(path: str) -> dict[str, Trajectory]:
    return {t.query_id: t for t in read_trajectories(path)}


# -- subcommands -------------------------------------------------------------

def cmd_clean(args: argparse.Namespace) -> int:
    generic = (
        Path(args.generic_prompt).read_text(encoding="utf-8")
        if args.generic_prompt
        else GENERIC_SYSTEM_PROMPT
    )
    raw = list(read_records(args.inp))
    cleaned, report = clean_pipeline(
        raw, generic_prompt=generic, token_limit=args.token_limit
    )
    write_trajectories(args.out, cleaned)
    Path(args.report).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    write_manifest(args.out, "clean", args, [args.inp])
    log.info("cleaned %d -> %d retained", report.input_count, report.retained)
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    goldens = _trajectories_by_query(args.golden)
    records = []
    for cand in read_trajectories(args.candidates):
        golden = goldens.get(cand.query_id)
        if golden is None:
            log.warning("no golden for query %s; skipped", cand.query_id)
            continue
        records.append(score_algorithmic(cand, golden).to_dict())
    write_records(args.out, records)
    write_manifest(args.out, "score", args, [args.candidates, args.golden])
    return 0


def _make_judge_client(args: argparse.Namespace):
    if args.judge_url:
        return HttpJudgeClient(args.judge_url, args.judge_model or "judge")
    return StubJudgeClient(score=args.stub_score, verdict=args.stub_verdict)


def cmd_judge(args: argparse.Namespace) -> int:
    from .judge import judge_metric
    from .model import JUDGED_METRICS

    queries = {q.id: q for q in (Query.from_dict(r) for r in read_records(args.queries))}
    goldens = _trajectories_by_query(args.golden)
    client = _make_judge_client(args)
    subset = None if args.metrics == "all" else args.metrics.split(",")
    if subset and (bad := sorted(set(subset) - set(JUDGED_METRICS))):
        raise ValidationError(f"unknown judged metrics: {bad}")
    records = []
    for cand in read_trajectories(args.candidates):
        q, golden = queries.get(cand.query_id), goldens.get(cand.query_id)
        if q is None or golden is None:
            log.warning("query %s missing query/golden record; skipped", cand.query_id)
            continue
        if subset is None:
            records.append(judge_all(q, cand, golden, client).to_dict())
        else:
            base = score_algorithmic(cand, golden, query_id=q.id).to_dict()
            for m in subset:
                result = judge_metric(m, q, cand, golden, client)
                base[m] = result.score
            records.append(base)
    write_records(args.out, records)
    write_manifest(args.out, "judge", args, [args.candidates, args.golden, args.queries])
    return 0


def cmd_tier(args: argparse.Namespace) -> int:
    scores = {r["query_id"]: float(r["score"]) for r in read_records(args.scores)}
    tiers = assign_tiers(scores)
    write_records(
        args.out,
        ({"query_id": qid, "tier": tiers[qid], "score": scores[qid]} for qid in sorted(tiers)),
    )
    write_manifest(args.out, "tier", args, [args.scores])
    return 0


def cmd_sample(args: argparse.Namespace) -> int:
    pool = [
        TieredQuery(r["query_id"], r["tier"], r["outcome"])
        for r in read_records(args.tiers)
    ]
    selected = stratified_sample(pool, args.n, args.seed, args.success_frac)
    write_records(args.out, ({"query_id": qid} for qid in selected))
    write_manifest(args.out, "sample", args, [args.tiers])
    return 0


def cmd_augment(args: argparse.Namespace) -> int:
    catalog = read_tool_catalog(args.catalog)
    client = HashingEmbeddingClient(dim=args.embed_dim)
    vectors = embed_catalog(catalog, client, cache_path=args.cache)
    pools = []
    for t in read_trajectories(args.examples):
        from .model import extract_tool_sequence

        called = {name for name, _ in extract_tool_sequence(t)}
        pools.append(
            build_pool(
                called,
                catalog,
                vectors,
                seed=args.seed,
                example_id=t.query_id,
                pool_size=args.pool_size,
                similar_frac=args.similar_frac,
            ).to_dict()
        )
    write_records(args.out, pools)
    write_manifest(args.out, "augment", args, [args.examples, args.catalog])
    return 0


def cmd_rollout(args: argparse.Namespace) -> int:
    queries = [Query.from_dict(r) for r in read_records(args.queries)]
    pools = {p["example_id"]: ToolPool.from_dict(p) for p in read_records(args.pools)}
    catalog = {s.name: s for s in read_tool_catalog(args.catalog)} if args.catalog else {}
    executor = load_fixture_catalog(args.fixtures)
    model = SingleToolModel() if args.model == "single-tool" else ImmediateAnswerModel()
    cfg = RolloutConfig(max_turns=args.max_turns, top_p=args.top_p)
    out = []
    for q in queries:
        pool = pools.get(q.id)
        names = pool.tools if pool else ()
        from .model import ToolSpec

        tools = [catalog.get(n, ToolSpec(name=n)) for n in names]
        out.append(run_rollout(q, tools, model, executor, cfg))
    write_trajectories(args.out, out)
    write_manifest(args.out, "rollout", args, [args.queries, args.pools, args.fixtures])
    return 0


def cmd_pair(args: argparse.Namespace) -> int:
    queries = {q.id: q for q in (Query.from_dict(r) for r in read_records(args.queries))}
    refs = _trajectories_by_query(args.refs)
    rollouts = _trajectories_by_query(args.rollouts)
    catalog = read_tool_catalog(args.catalog) if args.catalog else []
    tool_summary = summarize_tools(catalog)
    client = _make_judge_client(args)
    verdicts = {}
    for qid in sorted(refs):
        if qid not in rollouts or qid not in queries:
            continue
        verdicts[qid] = pairwise_judge(
            queries[qid], refs[qid], rollouts[qid], tool_summary, client, args.seed
        )
    pairs, report = build_pairs(refs, rollouts, verdicts)
    write_records(args.out, (p.to_dict() for p in pairs))
    log.info("pairing report: %s", report.to_dict())
    write_manifest(args.out, "pair", args, [args.refs, args.rollouts, args.queries])
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    counter = ByteTokenCounter()
    if args.split == "sft":
        if not args.pools:
            raise ValidationError("--pools is required for --split sft")
        trajectories = _trajectories_by_query(args.inp)
        pools = {p["example_id"]: ToolPool.from_dict(p) for p in read_records(args.pools)}
        masks = {
            eid: compute_mask(t, counter, example_id=eid, split="sft")
            for eid, t in trajectories.items()
        }
        export_sft_file(trajectories, pools, masks, args.out)
        write_manifest(args.out, "export", args, [args.inp, args.pools])
    else:
        pairs = [PreferencePair.from_dict(r) for r in read_records(args.inp)]
        chosen_masks = {
            p.query_id: compute_mask(p.chosen, counter, p.query_id, split="preference")
            for p in pairs
        }
        rejected_masks = {
            p.query_id: compute_mask(p.rejected, counter, p.query_id, split="preference")
            for p in pairs
        }
        export_preference_file(pairs, chosen_masks, rejected_masks, args.out)
        write_manifest(args.out, "export", args, [args.inp])
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import Store, create_app

    host, _, port = args.addr.rpartition(":")
    app = create_app(Store(args.data))
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trajkit")
    parser.add_argument("--config", help="JSON config file supplying flag defaults")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("clean", help="clean and filter a raw trajectory corpus")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--token-limit", type=int, default=16384)
    p.add_argument("--generic-prompt", help="file holding the generic system prompt")
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("score", help="compute the algorithmic metrics")
    p.add_argument("--candidates", required=True)
    p.add_argument("--golden", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("judge", help="score the judged metrics")
    p.add_argument("--metrics", default="all")
    p.add_argument("--candidates", required=True)
    p.add_argument("--golden", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--judge-url", help="OpenAI-compatible endpoint; omit to use the stub")
    p.add_argument("--judge-model")
    p.add_argument("--stub-score", type=int, default=5)
    p.add_argument("--stub-verdict", default="A is better")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("tier", help="assign difficulty tiers by tercile cutoffs")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tier)

    p = sub.add_parser("sample", help="outcome-stratified evaluation sampling")
    p.add_argument("--tiers", required=True)
    p.add_argument("--n", type=int, default=800)
    p.add_argument("--success-frac", type=float, default=0.55)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("augment", help="build 30-tool candidate pools")
    p.add_argument("--examples", required=True)
    p.add_argument("--catalog", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pool-size", type=int, default=30)
    p.add_argument("--similar-frac", type=float, default=0.5)
    p.add_argument("--cache")
    p.add_argument("--embed-dim", type=int, default=64)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("rollout", help="generate trajectories with a stub model")
    p.add_argument("--queries", required=True)
    p.add_argument("--pools", required=True)
    p.add_argument("--fixtures", required=True)
    p.add_argument("--catalog")
    p.add_argument("--max-turns", type=int, default=7)
    p.add_argument("--top-p", type=float, default=0.9)
    p.add_argument("--model", choices=("immediate", "single-tool"), default="single-tool")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rollout)

    p = sub.add_parser("pair", help="judge and filter preference pairs")
    p.add_argument("--refs", required=True)
    p.add_argument("--rollouts", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--catalog")
    p.add_argument("--out", required=True)
    p.add_argument("--judge-url")
    p.add_argument("--judge-model")
    p.add_argument("--stub-score", type=int, default=5)
    p.add_argument("--stub-verdict", default="A is better")
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("export", help="emit mask-annotated training files")
    p.add_argument("--split", choices=("sft", "pref"), required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--pools")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--data", required=True)
    p.set_defaults(func=cmd_serve)

    return parser


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not args.config:
        return
    cfg: dict[str, Any] = json.loads(Path(args.config).read_text(encoding="utf-8"))
    section = cfg.get(args.command or "", {})
    for key, value in {**cfg.get("global", {}), **section}.items():
        attr = key.replace("-", "_")
        if getattr(args, attr, None) in (None, parser.get_default(attr)):
            setattr(args, attr, value)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO))
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 2
    _apply_config(args, parser)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        report = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(report, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
