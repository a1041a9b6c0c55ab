#!/usr/bin/env python3
"""Run the full offline pipeline end to end against a synthetic corpus.

Chains the CLI stages with stub models so no external services are needed:
clean -> score -> judge (stub) -> tier -> sample -> augment -> rollout ->
pair -> export. Outputs land in --work-dir; rerunning with the same seed
reproduces every file byte for byte.
"""
import argparse
import json
import subprocess
import sys
from pathlib import Path

from trajkit.cli import main as trajkit_main


def run(stage: str, argv: list[str]) -> None:
    print(f"--- {stage}: trajkit {' '.join(argv)}")
    rc = trajkit_main(argv)
    if rc != 0:
        raise SystemExit(f"stage {stage!r} failed with exit code {rc}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--work-dir", default="demo")
    parser.add_argument("--n-queries", type=int, default=120)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    work = Path(args.work_dir)
    data = work / "data"
    subprocess.run(
        [sys.executable, str(Path(__file__).with_name("make_synthetic_corpus.py")),
         "--out-dir", str(data), "--n-queries", str(args.n_queries),
         "--seed", str(args.seed)],
        check=True,
    )

    seed = ["--seed", str(args.seed)]
    clean = work / "clean.jsonl"
    run("clean", seed + ["clean", "--in", str(data / "raw_corpus.jsonl"),
                         "--out", str(clean), "--report", str(work / "clean_report.json")])

    scores = work / "algorithmic.jsonl"
    run("score", seed + ["score", "--candidates", str(clean), "--golden", str(clean),
                         "--out", str(scores)])

    reports = work / "reports.jsonl"
    run("judge", seed + ["judge", "--candidates", str(clean), "--golden", str(clean),
                         "--queries", str(data / "queries.jsonl"),
                         "--out", str(reports), "--stub-score", "4"])

    # difficulty scores: reuse the judged overall as a stand-in signal
    difficulty = work / "difficulty.jsonl"
    with open(difficulty, "w", encoding="utf-8") as fh:
        for line in open(reports, encoding="utf-8"):
            rec = json.loads(line)
            fh.write(json.dumps({"query_id": rec["query_id"],
                                 "score": rec["overall"] or 0.0}) + "\n")

    tiers = work / "tiers.jsonl"
    run("tier", seed + ["tier", "--scores", str(difficulty), "--out", str(tiers)])

    # attach outcomes for stratified sampling
    outcomes = {json.loads(l)["id"]: json.loads(l).get("outcome_flag", "failed")
                for l in open(data / "queries.jsonl", encoding="utf-8")}
    tiered = work / "tiered_outcomes.jsonl"
    with open(tiered, "w", encoding="utf-8") as fh:
        for line in open(tiers, encoding="utf-8"):
            rec = json.loads(line)
            rec["outcome"] = outcomes.get(rec["query_id"], "failed")
            fh.write(json.dumps(rec) + "\n")

    n_sample = max(3, (args.n_queries // 10) // 3 * 3)
    run("sample", seed + ["sample", "--tiers", str(tiered), "--n", str(n_sample),
                          "--out", str(work / "sample.jsonl")])

    pools = work / "pools.jsonl"
    run("augment", seed + ["augment", "--examples", str(clean),
                           "--catalog", str(data / "catalog.json"),
                           "--out", str(pools), "--cache", str(work / "embeddings.jsonl")])

    rollouts = work / "rollouts.jsonl"
    run("rollout", seed + ["rollout", "--queries", str(data / "queries.jsonl"),
                           "--pools", str(pools),
                           "--fixtures", str(data / "fixtures.jsonl"),
                           "--catalog", str(data / "catalog.json"),
                           "--out", str(rollouts)])

    pairs = work / "pairs.jsonl"
    run("pair", seed + ["pair", "--refs", str(clean), "--rollouts", str(rollouts),
                        "--queries", str(data / "queries.jsonl"),
                        "--catalog", str(data / "catalog.json"), "--out", str(pairs)])

    run("export sft", seed + ["export", "--split", "sft", "--in", str(clean),
                              "--pools", str(pools), "--out", str(work / "sft.jsonl")])
    run("export pref", seed + ["export", "--split", "pref", "--in", str(pairs),
                               "--out", str(work / "preference.jsonl")])

    print(f"\npipeline complete; outputs in {work}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
