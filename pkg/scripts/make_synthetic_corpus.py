#!/usr/bin/env python3
"""Generate a synthetic raw corpus for exercising the pipeline offline.

Writes four files into --out-dir:
  raw_corpus.jsonl   messy multi-turn trajectories (ghost calls, inline
                     reasoning, empty/error tool responses, odd prompts)
  queries.jsonl      the matching query records with reference answers
  catalog.json       a tool catalog of financial-data endpoints
  fixtures.jsonl     deterministic tool responses for offline rollouts
"""
import argparse
import json
import random
from pathlib import Path

from trajkit.model import Message, Query, ToolCall, Trajectory, dump_record

TOOL_FAMILIES = [
    ("income_statement", "fetches annual and quarterly income statements"),
    ("balance_sheet", "fetches balance sheet line items"),
    ("cash_flow", "fetches cash flow statements"),
    ("price_history", "returns daily closing prices for a ticker"),
    ("ratios", "computes standard financial ratios"),
    ("peer_list", "lists comparable companies in the same sector"),
    ("fx_rates", "returns foreign exchange rates"),
    ("earnings_calendar", "upcoming and past earnings dates"),
    ("insider_trades", "recent insider transactions"),
    ("dividends", "dividend history and yield"),
]

QUERY_TEMPLATES = [
    "What was the revenue of {t} in fiscal year {y}?",
    "Calculate the revenue growth of {t} between {y} and the next year.",
    "Compare the gross margin of {t} with its peers. What is the ratio?",
    "What is the average closing price of {t} over {y}? Compute the CAGR since then.",
    "How much did {t} pay in dividends during {y}?",
]

TICKERS = ["AAPL", "MSFT", "NVDA", "JPM", "XOM", "KO", "TM", "SAP"]


def make_catalog(n_tools: int) -> list[dict]:
    tools = []
    for i in range(n_tools):
        base, desc = TOOL_FAMILIES[i % len(TOOL_FAMILIES)]
        suffix = "" if i < len(TOOL_FAMILIES) else f"_v{i // len(TOOL_FAMILIES)}"
        tools.append({"name": f"{base}{suffix}", "description": f"{desc} (variant {i})"})
    return tools


def make_trajectory(rng: random.Random, qid: str, tools: list[dict]) -> Trajectory:
    msgs = []
    if rng.random() < 0.7:
        msgs.append(Message(role="system", content=f"You are agent build {rng.randint(1, 99)}."))
    msgs.append(Message(role="user", content=f"placeholder question for {qid}"))
    if rng.random() < 0.25:
        msgs.append(Message(role="assistant",
                            content="<function_calls>lookup()</function_calls>"))
    for k in range(rng.randint(1, 5)):
        tool = rng.choice(tools)
        call = ToolCall(id=f"{qid}-c{k}", name=tool["name"],
                        arguments=json.dumps({"ticker": rng.choice(TICKERS)}))
        content = "Let me pull that data." if rng.random() < 0.5 else ""
        msgs.append(Message(role="assistant", content=content, tool_calls=(call,)))
        roll = rng.random()
        if roll < 0.15:
            response = "[]"
        elif roll < 0.25:
            response = "Error: upstream timeout"
        else:
            response = json.dumps({"value": round(rng.uniform(1, 500), 2)})
        msgs.append(Message(role="tool", content=response, tool_call_id=call.id))
    msgs.append(Message(role="assistant", content=f"The answer is {rng.randint(1, 500)}."))
    return Trajectory(query_id=qid, messages=tuple(msgs), source_model="synthetic")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data")
    parser.add_argument("--n-queries", type=int, default=300)
    parser.add_argument("--n-tools", type=int, default=60)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tools = make_catalog(args.n_tools)
    (out / "catalog.json").write_text(json.dumps({"tools": tools}, indent=2) + "\n")

    queries, raw, fixtures = [], [], []
    for i in range(args.n_queries):
        qid = f"q{i:04d}"
        text = rng.choice(QUERY_TEMPLATES).format(t=rng.choice(TICKERS), y=rng.randint(2018, 2024))
        queries.append(
            Query(id=qid, text=text, category="reasoning_qa",
                  reference_answer=str(rng.randint(1, 500)),
                  outcome_flag=rng.choice(("successful", "failed"))).to_dict()
        )
        raw.append(make_trajectory(rng, qid, tools).to_dict())
    for tool in tools:
        for ticker in TICKERS:
            fixtures.append({
                "tool": tool["name"],
                "args": {"ticker": ticker},
                "response": json.dumps({"value": round(rng.uniform(1, 500), 2)}),
            })

    for name, records in (("queries.jsonl", queries), ("raw_corpus.jsonl", raw),
                          ("fixtures.jsonl", fixtures)):
        with open(out / name, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(dump_record(rec) + "\n")
    print(f"wrote {args.n_queries} queries, {len(raw)} raw trajectories, "
          f"{len(tools)} tools, {len(fixtures)} fixtures to {out}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
