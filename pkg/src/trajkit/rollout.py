"""Rollout loop driving a pluggable chat model against a tool executor.

A rollout alternates assistant turns and tool executions until the model
answers without tool calls or the turn cap is reached; at the cap the pending
calls are executed and one final answer turn is requested with tools
withheld. The fixture executor stands in for the live financial-data server.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence, Union

from .cleaning import GENERIC_SYSTEM_PROMPT
from .model import (
    Message,
    Query,
    ToolCall,
    ToolSpec,
    Trajectory,
    ValidationError,
    canonicalize_arguments,
)

FORCED_ANSWER_PROMPT = (
    "Please provide your final answer now based on the information gathered "
    "so far, without calling any more tools."
)


class ChatModel(Protocol):
    name: str

    def respond(
        self,
        messages: Sequence[Message],
        tool_specs: Sequence[ToolSpec],
        sampling: Mapping[str, float],
    ) -> Message: ...


class ToolExecutor(Protocol):
    def execute(self, call: ToolCall) -> Message: ...


@dataclass(frozen=True)
class RolloutConfig:
    max_turns: int = 7
    top_p: float = 0.9
    temperature: float = 1.0
    max_sequence_tokens: int = 16384

    def __post_init__(self) -> None:
        if self.max_turns < 1:
            raise ValidationError("max_turns must be >= 1")
        if not 0.0 < self.top_p <= 1.0:
            raise ValidationError("top_p must be in (0, 1]")


class FixtureExecutor:
    """Deterministic executor keyed by exact (tool name, canonical args):
    an args miss on a known tool returns "[]", an unknown tool returns an
    error-prefixed message."""

    def __init__(self, fixtures: Mapping[tuple[str, str], str]):
        self.fixtures = {
            (name, canonicalize_arguments(args)): response
            for (name, args), response in fixtures.items()
        }
        self.known_tools = {name for name, _ in self.fixtures}

    def execute(self, call: ToolCall) -> Message:
        key = (call.name, call.arguments)
        if key in self.fixtures:
            content = self.fixtures[key]
        elif call.name in self.known_tools:
            content = "[]"
        else:
            content = f"Error: unknown tool {call.name}"
        return Message(role="tool", content=content, tool_call_id=call.id)


def fixture_executor(
    fixtures: Mapping[tuple[str, str], str]
) -> FixtureExecutor:
    return FixtureExecutor(fixtures)


def load_fixture_catalog(path: Union[str, Path]) -> FixtureExecutor:
    """Fixture catalog file: newline-delimited {tool, args, response} records."""
    fixtures: dict[tuple[str, str], str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                key = (rec["tool"], canonicalize_arguments(rec.get("args", {})))
                fixtures[key] = rec["response"]
    return FixtureExecutor(fixtures)


def run_rollout(
    query: Query,
    tools: Sequence[ToolSpec],
    model: ChatModel,
    executor: ToolExecutor,
    config: RolloutConfig = RolloutConfig(),
    system_prompt: str = GENERIC_SYSTEM_PROMPT,
) -> Trajectory:
    """Generate one trajectory for a query over the given tool pool.

    Turn accounting: up to max_turns assistant messages. If the model is
    still calling tools going into the last allowed turn, its pending calls
    are executed and the final turn is a forced answer with no tools offered
    (tool calls it emits anyway are recorded but not executed). Model or
    protocol failures mark the trajectory failed with partial messages kept.
    """
    sampling = {"top_p": config.top_p, "temperature": config.temperature}
    messages: list[Message] = [
        Message(role="system", content=system_prompt),
        Message(role="user", content=query.text),
    ]
    error: Optional[str] = None
    for turn in range(config.max_turns):
        forced = turn == config.max_turns - 1
        offered: Sequence[ToolSpec] = () if forced and turn > 0 else tools
        if forced and turn > 0:
            messages.append(Message(role="user", content=FORCED_ANSWER_PROMPT))
        try:
            reply = model.respond(tuple(messages), offered, sampling)
        except Exception as exc:  # noqa: BLE001 - failure is a recorded outcome
            error = f"model failure at turn {turn + 1}: {exc}"
            break
        if reply.role != "assistant":
            error = f"model returned non-assistant role {reply.role!r} at turn {turn + 1}"
            break
        messages.append(reply)
        if not reply.tool_calls:
            break
        if forced:
            break  # cap reached; do not execute the final turn's calls
        for call in reply.tool_calls:
            try:
                response = executor.execute(call)
            except Exception as exc:  # noqa: BLE001
                response = Message(
                    role="tool",
                    content=f"Error: tool execution failed: {exc}",
                    tool_call_id=call.id,
                )
            if response.tool_call_id != call.id:
                error = f"executor returned mismatched tool_call_id for {call.id!r}"
                break
            messages.append(response)
        if error:
            break
    return Trajectory(
        query_id=query.id,
        messages=tuple(messages),
        source_model=getattr(model, "name", ""),
        error=error,
    )
