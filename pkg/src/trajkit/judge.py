"""LLM-judge plumbing: the six Likert-scored metrics, golden-candidate
selection, pairwise verdicts with slot randomization, and agreement stats.

The judge itself is pluggable behind JudgeClient; prompt templates live in
trajkit/prompts/ and are rendered with the query, candidate, and (where the
template calls for it) the golden trajectory or reference answer.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from typing import Any, Mapping, Optional, Protocol, Sequence, Union

from .metrics import aggregate_overall, score_algorithmic
from .model import (
    JUDGED_METRICS,
    MetricReport,
    Query,
    Trajectory,
    ValidationError,
    extract_tool_sequence,
)

VERDICT_A = "A is better"
VERDICT_B = "B is better"
VERDICT_TIE = "same quality"
VERDICTS = (VERDICT_A, VERDICT_B, VERDICT_TIE)

PAIRWISE_SCHEMA = {
    "type": "object",
    "properties": {
        "verdict": {"type": "string", "enum": list(VERDICTS)},
        "reasoning": {"type": "string"},
    },
    "required": ["verdict", "reasoning"],
}

# Metrics whose prompts reference the golden trajectory or reference answer.
METRICS_WITH_GOLDEN = ("logical_progression", "answer_quality")
METRICS_WITH_REFERENCE = ("pass_rate", "answer_quality")


class JudgeFormatError(RuntimeError):
    """Judge output could not be parsed; carries the raw response."""

    def __init__(self, message: str, raw: Any = None):
        super().__init__(message)
        self.raw = raw


class JudgeClient(Protocol):
    max_concurrency: int

    def complete(
        self, prompt: str, output_schema: Optional[Mapping[str, Any]] = None
    ) -> Union[str, Mapping[str, Any]]: ...


class HttpJudgeClient:
    """Minimal client for an OpenAI-compatible chat completions endpoint.

    Credentials come from the environment (JUDGE_API_KEY); temperature is
    fixed at 0. Retries with exponential backoff.
    """

    def __init__(
        self,
        base_url: str,
        model: str,
        api_key_env: str = "JUDGE_API_KEY",
        max_concurrency: int = 8,
        attempts: int = 3,
        backoff: float = 1.0,
        timeout: float = 120.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.max_concurrency = max_concurrency
        self.attempts = attempts
        self.backoff = backoff
        self.timeout = timeout

    def complete(
        self, prompt: str, output_schema: Optional[Mapping[str, Any]] = None
    ) -> str:
        import httpx

        key = os.environ.get(self.api_key_env, "")
        payload: dict[str, Any] = {
            "model": self.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        }
        if output_schema is not None:
            payload["response_format"] = {
                "type": "json_schema",
                "json_schema": {"name": "judgment", "schema": dict(output_schema)},
            }
        last: Optional[Exception] = None
        for attempt in range(self.attempts):
            try:
                resp = httpx.post(
                    f"{self.base_url}/chat/completions",
                    json=payload,
                    headers={"Authorization": f"Bearer {key}"},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                return resp.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # noqa: BLE001 - retried, re-raised below
                last = exc
                time.sleep(self.backoff * 2**attempt)
        raise JudgeFormatError(f"judge request failed after {self.attempts} attempts: {last}")


@dataclass(frozen=True)
class LikertResult:
    metric: str
    score: int
    rationale: str = ""

    def __post_init__(self) -> None:
        if self.metric not in JUDGED_METRICS:
            raise ValidationError(f"unknown judged metric {self.metric!r}")
        if self.score not in (1, 2, 3, 4, 5):
            raise ValidationError(f"Likert score must be in 1..5, got {self.score!r}")


@dataclass(frozen=True)
class PairVerdict:
    """A pairwise judgment plus the slot randomization that produced it."""

    verdict: str  # raw slot-level verdict: one of VERDICTS
    reasoning: str
    a_was_chosen_slot: bool

    def __post_init__(self) -> None:
        if self.verdict not in VERDICTS:
            raise ValidationError(f"verdict must be one of {VERDICTS}, got {self.verdict!r}")

    @property
    def outcome(self) -> str:
        """Verdict mapped back through the slot assignment:
        chosen_better / rejected_better / tie."""
        if self.verdict == VERDICT_TIE:
            return "tie"
        a_wins = self.verdict == VERDICT_A
        chosen_wins = a_wins == self.a_was_chosen_slot
        return "chosen_better" if chosen_wins else "rejected_better"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "reasoning": self.reasoning,
            "a_was_chosen_slot": self.a_was_chosen_slot,
            "outcome": self.outcome,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "PairVerdict":
        return cls(
            verdict=d["verdict"],
            reasoning=d.get("reasoning", ""),
            a_was_chosen_slot=bool(d["a_was_chosen_slot"]),
        )


def load_prompt(name: str) -> str:
    return resources.files("trajkit.prompts").joinpath(f"{name}.txt").read_text("utf-8")


def render_trajectory_text(t: Trajectory, include_system: bool = False) -> str:
    """Human-readable multi-turn rendering used inside judge prompts."""
    lines: list[str] = []
    for m in t.messages:
        if m.role == "system" and not include_system:
            continue
        if m.role == "assistant":
            if m.reasoning_content:
                lines.append(f"[assistant reasoning] {m.reasoning_content}")
            if m.tool_calls:
                for c in m.tool_calls:
                    lines.append(f"[assistant tool call] {c.name}({c.arguments})")
            if m.content:
                lines.append(f"[assistant] {m.content}")
        elif m.role == "tool":
            lines.append(f"[tool response] {m.content}")
        else:
            lines.append(f"[{m.role}] {m.content}")
    return "\n".join(lines)


_INT_RE = re.compile(r"-?\d+")


def parse_likert_score(response: Union[str, Mapping[str, Any]]) -> tuple[int, str]:
    """Extract (score, rationale) from a judge response.

    Accepts a structured document with a `score` field, or free text where
    the first integer in 1..5 wins.

    Raises:
        JudgeFormatError: no in-range integer found.
    """
    if isinstance(response, Mapping):
        raw = response.get("score")
        rationale = str(response.get("rationale", response.get("reasoning", "")))
        try:
            score = int(raw)  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise JudgeFormatError(f"structured response lacks integer score: {response!r}", response)
        if score not in (1, 2, 3, 4, 5):
            raise JudgeFormatError(f"score {score} outside 1..5", response)
        return score, rationale
    for m in _INT_RE.finditer(str(response)):
        v = int(m.group())
        if 1 <= v <= 5:
            return v, str(response)
    raise JudgeFormatError(f"no score in 1..5 found in judge output: {response!r}", response)


def render_metric_prompt(
    metric: str,
    query: Query,
    candidate: Trajectory,
    golden: Optional[Trajectory] = None,
) -> str:
    template = load_prompt(metric)
    needs_golden = metric in METRICS_WITH_GOLDEN
    if needs_golden and golden is None:
        raise ValidationError(f"metric {metric} requires a golden trajectory")
    return template.format(
        query=query.text,
        candidate=render_trajectory_text(candidate),
        golden=render_trajectory_text(golden) if golden is not None else "",
        reference_answer=query.reference_answer or "",
        final_answer=candidate.final_answer,
    )


def judge_metric(
    metric: str,
    query: Query,
    candidate: Trajectory,
    golden: Optional[Trajectory],
    client: JudgeClient,
) -> LikertResult:
    prompt = render_metric_prompt(metric, query, candidate, golden)
    response = client.complete(prompt)
    score, rationale = parse_likert_score(response)
    return LikertResult(metric=metric, score=score, rationale=rationale)


def judge_all(
    query: Query,
    candidate: Trajectory,
    golden: Trajectory,
    client: JudgeClient,
) -> MetricReport:
    """Score all nine metrics for one candidate. Judge calls run concurrently
    up to the client's max_concurrency, keyed by metric so completion order
    never affects the result. A single-metric failure flags the report
    incomplete (no imputation); overall is computed only for complete reports."""
    base = score_algorithmic(candidate, golden, query_id=query.id)
    scores: dict[str, float] = {}
    rationales: dict[str, str] = {}
    failed: list[str] = []

    workers = max(1, min(getattr(client, "max_concurrency", 1) or 1, len(JUDGED_METRICS)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            m: pool.submit(judge_metric, m, query, candidate, golden, client)
            for m in JUDGED_METRICS
        }
        for m, fut in futures.items():
            try:
                result = fut.result()
                scores[m] = float(result.score)
                rationales[m] = result.rationale
            except (JudgeFormatError, ValidationError):
                failed.append(m)

    report = MetricReport(
        query_id=base.query_id,
        source_model=base.source_model,
        tool_call_f1=base.tool_call_f1,
        step_efficiency=base.step_efficiency,
        redundancy=base.redundancy,
        judge_rationales=rationales,
        failed_metrics=tuple(sorted(failed)),
        **{m: scores.get(m) for m in JUDGED_METRICS},
    )
    if report.failed_metrics:
        return report
    return MetricReport(
        **{**report.__dict__, "overall": aggregate_overall(report)}
    )


def _candidate_summary(i: int, t: Trajectory) -> str:
    unique_tools = len({name for name, _ in extract_tool_sequence(t)})
    return (
        f"Candidate {i + 1} (turns: {t.turn_count}, unique tools: {unique_tools}):\n"
        f"{render_trajectory_text(t)}"
    )


def select_golden(
    query: Query, candidates: Sequence[Trajectory], client: JudgeClient
) -> int:
    """Index of the judge-chosen best candidate. A single candidate is
    returned without a judge call."""
    if not candidates:
        raise ValidationError("select_golden requires at least one candidate")
    if len(candidates) == 1:
        return 0
    blocks = "\n\n".join(_candidate_summary(i, t) for i, t in enumerate(candidates))
    prompt = load_prompt("selection").format(query=query.text, candidates=blocks)
    response = client.complete(prompt)
    if isinstance(response, Mapping):
        try:
            idx = int(response.get("best"))  # type: ignore[arg-type]
        except (TypeError, ValueError):
            raise JudgeFormatError(f"no candidate index in {response!r}", response)
    else:
        m = _INT_RE.search(str(response))
        if m is None:
            raise JudgeFormatError(f"no candidate index in judge output: {response!r}", response)
        idx = int(m.group())
    if not 1 <= idx <= len(candidates):
        raise JudgeFormatError(
            f"judge named candidate {idx}, but only {len(candidates)} exist", response
        )
    return idx - 1


def derive_pair_seed(corpus_seed: int, query_id: str) -> int:
    """Stable per-(query, pair) randomization seed so re-runs reproduce the
    same slot assignments."""
    digest = hashlib.sha256(f"{corpus_seed}:{query_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def summarize_tools(tools: Sequence) -> str:
    """Name + description lines for the Available Tools prompt slot."""
    return "\n".join(f"{t.name}: {t.description}" for t in tools)


def pairwise_judge(
    query: Query,
    chosen: Trajectory,
    rejected: Trajectory,
    tool_summary: str,
    client: JudgeClient,
    rng_seed: int = 0,
) -> PairVerdict:
    """Compare chosen vs rejected with randomized A/B slot assignment.

    The slot draw comes from a seed derived from (rng_seed, query.id); the
    returned verdict records the assignment so callers can read the outcome
    in chosen-vs-rejected terms.
    """
    rng = random.Random(derive_pair_seed(rng_seed, query.id))
    a_was_chosen = rng.random() < 0.5
    slot_a, slot_b = (chosen, rejected) if a_was_chosen else (rejected, chosen)
    prompt = load_prompt("pairwise").format(
        user_query=query.text,
        tool_summary=tool_summary,
        trajectory_a=render_trajectory_text(slot_a),
        trajectory_b=render_trajectory_text(slot_b),
    )
    response = client.complete(prompt, output_schema=PAIRWISE_SCHEMA)
    if isinstance(response, str):
        try:
            response = json.loads(response)
        except json.JSONDecodeError:
            raise JudgeFormatError(f"pairwise judge output is not structured: {response!r}", response)
    verdict = response.get("verdict")
    if verdict not in VERDICTS:
        raise JudgeFormatError(f"verdict {verdict!r} not among {VERDICTS}", response)
    return PairVerdict(
        verdict=verdict,
        reasoning=str(response.get("reasoning", "")),
        a_was_chosen_slot=a_was_chosen,
    )


def cohens_kappa(labels_a: Sequence, labels_b: Sequence) -> float:
    """Cohen's kappa between two equal-length label sequences."""
    if len(labels_a) != len(labels_b):
        raise ValidationError(
            f"label lists differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    if not labels_a:
        raise ValidationError("cannot compute kappa on empty label lists")
    n = len(labels_a)
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    labels = set(labels_a) | set(labels_b)
    p_e = sum(
        (sum(1 for a in labels_a if a == lab) / n)
        * (sum(1 for b in labels_b if b == lab) / n)
        for lab in labels
    )
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise ValidationError("degenerate marginals (p_e == 1) with disagreement")
    return (p_o - p_e) / (1 - p_e)
