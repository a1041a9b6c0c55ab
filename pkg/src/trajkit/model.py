"""Shared data model for queries, trajectories, tools, and metric reports.

All types are immutable after construction and safe to share across threads.
Trajectory corpora are stored as newline-delimited records, one trajectory
per line; the message field names (role / content / reasoning_content /
tool_calls / tool_call_id) are part of the on-disk contract.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Optional, Sequence, Union


class ValidationError(ValueError):
    """A structural or range constraint was violated."""


ROLES = ("system", "user", "assistant", "tool")
DIFFICULTY_TIERS = ("easy", "medium", "hard")
OUTCOME_FLAGS = ("successful", "failed")

# The three deterministically computed metrics, on a [0,1] scale.
ALGORITHMIC_METRICS = ("tool_call_f1", "step_efficiency", "redundancy")
# The six judged metrics, on a 1-5 Likert scale.
JUDGED_METRICS = (
    "pass_rate",
    "task_relevance",
    "logical_progression",
    "info_utilization",
    "progress_score",
    "answer_quality",
)
ALL_METRICS = ALGORITHMIC_METRICS + JUDGED_METRICS

# 34 task-category labels covering the financial-agent query space.
DEFAULT_CATEGORIES = (
    "reasoning_qa",
    "trading_market",
    "alt_assets_forex",
    "valuation_modeling",
    "company_profile",
    "income_statement_analysis",
    "balance_sheet_analysis",
    "cash_flow_analysis",
    "financial_ratios",
    "earnings_analysis",
    "earnings_calendar",
    "dividend_analysis",
    "stock_screening",
    "price_history",
    "technical_indicators",
    "market_indices",
    "sector_performance",
    "etf_analysis",
    "mutual_funds",
    "crypto_assets",
    "commodities",
    "macro_indicators",
    "economic_calendar",
    "analyst_ratings",
    "price_targets",
    "insider_trading",
    "institutional_holdings",
    "sec_filings",
    "news_sentiment",
    "ipo_activity",
    "mergers_acquisitions",
    "esg_analysis",
    "risk_assessment",
    "portfolio_analysis",
)


def canonicalize_arguments(raw: Union[str, bytes, Mapping[str, Any]]) -> str:
    """Canonicalize a key-value argument document to a deterministic string.

    Keys are sorted at every nesting level and insignificant whitespace is
    removed, so equal documents map to equal strings and the result is
    idempotent under re-canonicalization.

    Raises:
        ValidationError: the input does not parse; the message names the
            byte offset of the failure.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8")
    if isinstance(raw, str):
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(
                f"malformed argument document at byte offset {exc.pos}: {exc.msg}"
            ) from exc
    else:
        obj = raw
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


@dataclass(frozen=True)
class ToolCall:
    """A structured tool invocation emitted by an assistant message."""

    id: str
    name: str
    arguments: str  # canonical form; see canonicalize_arguments

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("tool call name must be nonempty")
        object.__setattr__(self, "arguments", canonicalize_arguments(self.arguments))

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ToolCall":
        return cls(
            id=str(d.get("id", "")),
            name=d["name"],
            arguments=canonicalize_arguments(d.get("arguments", {})),
        )


@dataclass(frozen=True)
class Message:
    role: str
    content: str = ""
    reasoning_content: Optional[str] = None
    tool_calls: Optional[tuple[ToolCall, ...]] = None
    tool_call_id: Optional[str] = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValidationError(f"unknown role {self.role!r}")
        if self.tool_calls is not None:
            object.__setattr__(self, "tool_calls", tuple(self.tool_calls))
            if self.tool_calls and self.role != "assistant":
                raise ValidationError("tool_calls only allowed on assistant messages")
            if not self.tool_calls:
                object.__setattr__(self, "tool_calls", None)
        if (self.tool_call_id is not None) != (self.role == "tool"):
            raise ValidationError("tool_call_id present iff role=tool")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"role": self.role, "content": self.content}
        if self.reasoning_content is not None:
            d["reasoning_content"] = self.reasoning_content
        if self.tool_calls:
            d["tool_calls"] = [c.to_dict() for c in self.tool_calls]
        if self.tool_call_id is not None:
            d["tool_call_id"] = self.tool_call_id
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Message":
        calls = d.get("tool_calls")
        return cls(
            role=d["role"],
            content=d.get("content") or "",
            reasoning_content=d.get("reasoning_content"),
            tool_calls=tuple(ToolCall.from_dict(c) for c in calls) if calls else None,
            tool_call_id=d.get("tool_call_id"),
        )


@dataclass(frozen=True)
class Trajectory:
    """One multi-turn record of an agent answering a single query.

    A "turn" is one assistant message; tool responses do not count.
    """

    query_id: str
    messages: tuple[Message, ...]
    source_model: str = ""
    error: Optional[str] = None  # set when a rollout aborted mid-flight

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))

    @property
    def turn_count(self) -> int:
        return sum(1 for m in self.messages if m.role == "assistant")

    @property
    def final_answer(self) -> str:
        """Content of the last assistant message carrying no tool calls."""
        for m in reversed(self.messages):
            if m.role == "assistant" and not m.tool_calls:
                return m.content
        return ""

    def validate(self) -> None:
        """Check structural invariants; raises ValidationError on violation."""
        non_system = [m for m in self.messages if m.role != "system"]
        if non_system and non_system[0].role != "user":
            raise ValidationError("first non-system message must have role=user")
        emitted: set[str] = set()
        for m in self.messages:
            if m.role == "assistant" and m.tool_calls:
                emitted.update(c.id for c in m.tool_calls)
            elif m.role == "tool":
                if m.tool_call_id not in emitted:
                    raise ValidationError(
                        f"tool message references unknown call id {m.tool_call_id!r}"
                    )

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "query_id": self.query_id,
            "source_model": self.source_model,
            "messages": [m.to_dict() for m in self.messages],
        }
        if self.error is not None:
            d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Trajectory":
        return cls(
            query_id=d["query_id"],
            messages=tuple(Message.from_dict(m) for m in d.get("messages", [])),
            source_model=d.get("source_model", ""),
            error=d.get("error"),
        )


def extract_tool_sequence(t: Trajectory) -> list[tuple[str, str]]:
    """Ordered (name, canonical arguments) pairs, one per structured ToolCall.

    Duplicates are preserved; plain-text ("ghost") calls are excluded because
    only the tool_calls field is consulted.
    """
    seq: list[tuple[str, str]] = []
    for m in t.messages:
        if m.role == "assistant" and m.tool_calls:
            seq.extend((c.name, c.arguments) for c in m.tool_calls)
    return seq


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    category: str
    reference_answer: Optional[str] = None
    difficulty_tier: Optional[str] = None
    outcome_flag: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("query id must be nonempty")
        if self.difficulty_tier is not None and self.difficulty_tier not in DIFFICULTY_TIERS:
            raise ValidationError(f"unknown difficulty tier {self.difficulty_tier!r}")
        if self.outcome_flag is not None and self.outcome_flag not in OUTCOME_FLAGS:
            raise ValidationError(f"unknown outcome flag {self.outcome_flag!r}")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"id": self.id, "text": self.text, "category": self.category}
        for k in ("reference_answer", "difficulty_tier", "outcome_flag"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "Query":
        return cls(
            id=d["id"],
            text=d.get("text", ""),
            category=d.get("category", ""),
            reference_answer=d.get("reference_answer"),
            difficulty_tier=d.get("difficulty_tier"),
            outcome_flag=d.get("outcome_flag"),
        )


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str = ""
    parameter_schema: Optional[Mapping[str, Any]] = None

    def __post_init__(self) -> None:
        if not self.name:
            raise ValidationError("tool name must be nonempty")

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"name": self.name, "description": self.description}
        if self.parameter_schema is not None:
            d["parameter_schema"] = dict(self.parameter_schema)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ToolSpec":
        return cls(
            name=d["name"],
            description=d.get("description", ""),
            parameter_schema=d.get("parameter_schema"),
        )


@dataclass(frozen=True)
class MetricReport:
    """Per-(candidate, golden, query) scores for the nine-metric rubric.

    Algorithmic fields live in [0,1]; judged fields are 1-5 Likert integers.
    A report is complete when all nine fields are present; incomplete reports
    carry the failed metric names and are excluded from corpus aggregates.
    """

    query_id: str = ""
    source_model: str = ""
    tool_call_f1: Optional[float] = None
    step_efficiency: Optional[float] = None
    redundancy: Optional[float] = None
    pass_rate: Optional[float] = None
    task_relevance: Optional[float] = None
    logical_progression: Optional[float] = None
    info_utilization: Optional[float] = None
    progress_score: Optional[float] = None
    answer_quality: Optional[float] = None
    overall: Optional[float] = None
    judge_rationales: Mapping[str, str] = field(default_factory=dict)
    failed_metrics: tuple[str, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.failed_metrics and all(
            getattr(self, m) is not None for m in ALL_METRICS
        )

    def metric_values(self) -> dict[str, Optional[float]]:
        return {m: getattr(self, m) for m in ALL_METRICS}

    def to_dict(self) -> dict:
        d: dict[str, Any] = {
            "query_id": self.query_id,
            "source_model": self.source_model,
            "overall": self.overall,
        }
        d.update(self.metric_values())
        if self.judge_rationales:
            d["judge_rationales"] = dict(self.judge_rationales)
        if self.failed_metrics:
            d["failed_metrics"] = list(self.failed_metrics)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MetricReport":
        return cls(
            query_id=d.get("query_id", ""),
            source_model=d.get("source_model", ""),
            overall=d.get("overall"),
            judge_rationales=d.get("judge_rationales", {}),
            failed_metrics=tuple(d.get("failed_metrics", ())),
            **{m: d.get(m) for m in ALL_METRICS},
        )


# --- newline-delimited record I/O -----------------------------------------

def dump_record(d: Mapping[str, Any]) -> str:
    return json.dumps(d, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def read_records(path: Union[str, Path]) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield json.loads(line)


def write_records(path: Union[str, Path], records: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dump_record(r) + "\n")


def read_trajectories(path: Union[str, Path]) -> list[Trajectory]:
    return [Trajectory.from_dict(r) for r in read_records(path)]


def write_trajectories(path: Union[str, Path], trajectories: Iterable[Trajectory]) -> None:
    write_records(path, (t.to_dict() for t in trajectories))


def read_tool_catalog(path: Union[str, Path]) -> list[ToolSpec]:
    """Read a tool catalog: either one JSON document with a `tools` list, or
    newline-delimited ToolSpec records."""
    text = Path(path).read_text(encoding="utf-8").strip()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "tools" in doc:
        specs = [ToolSpec.from_dict(t) for t in doc["tools"]]
        _check_unique_names(specs)
        return specs
    if isinstance(doc, list):
        specs = [ToolSpec.from_dict(t) for t in doc]
        _check_unique_names(specs)
        return specs
    specs = [ToolSpec.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]
    _check_unique_names(specs)
    return specs


def _check_unique_names(specs: Sequence[ToolSpec]) -> None:
    names = [s.name for s in specs]
    if len(names) != len(set(names)):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValidationError(f"duplicate tool names in catalog: {dupes}")
