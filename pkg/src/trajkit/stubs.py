"""Deterministic stand-ins for the external model dependencies.

These make the whole pipeline runnable offline: a judge that answers with a
fixed Likert score and a fixed pairwise verdict, and chat models with
scripted tool-calling behavior.
"""
from __future__ import annotations

from typing import Any, Mapping, Optional, Sequence

from .model import Message, ToolCall, ToolSpec


class StubJudgeClient:
    """Judge returning a fixed Likert score for metric prompts and a fixed
    verdict for structured pairwise prompts."""

    def __init__(
        self,
        score: int = 5,
        verdict: str = "A is better",
        max_concurrency: int = 4,
    ):
        self.score = score
        self.verdict = verdict
        self.max_concurrency = max_concurrency
        self.calls = 0

    def complete(
        self, prompt: str, output_schema: Optional[Mapping[str, Any]] = None
    ):
        self.calls += 1
        if output_schema is not None:
            return {"verdict": self.verdict, "reasoning": "stub verdict"}
        return f"score: {self.score}"


class ImmediateAnswerModel:
    """Chat model that answers on the first turn without calling tools."""

    def __init__(self, answer: str = "Here is the answer.", name: str = "stub-immediate"):
        self.answer = answer
        self.name = name

    def respond(
        self,
        messages: Sequence[Message],
        tool_specs: Sequence[ToolSpec],
        sampling: Mapping[str, float],
    ) -> Message:
        return Message(role="assistant", content=self.answer)


class SingleToolModel:
    """Calls the first offered tool once with empty arguments, then answers
    using the tool response."""

    def __init__(self, name: str = "stub-single-tool"):
        self.name = name

    def respond(
        self,
        messages: Sequence[Message],
        tool_specs: Sequence[ToolSpec],
        sampling: Mapping[str, float],
    ) -> Message:
        already_called = any(
            m.role == "assistant" and m.tool_calls for m in messages
        )
        if tool_specs and not already_called:
            call = ToolCall(id="call-1", name=tool_specs[0].name, arguments="{}")
            return Message(role="assistant", content="Fetching data.", tool_calls=(call,))
        last_tool = next(
            (m.content for m in reversed(messages) if m.role == "tool"), ""
        )
        return Message(role="assistant", content=f"Based on the data: {last_tool}")


class AlwaysToolModel:
    """Calls a tool every turn; exercises the turn cap."""

    def __init__(self, tool_name: str = "", name: str = "stub-looping"):
        self.tool_name = tool_name
        self.name = name
        self._n = 0

    def respond(
        self,
        messages: Sequence[Message],
        tool_specs: Sequence[ToolSpec],
        sampling: Mapping[str, float],
    ) -> Message:
        self._n += 1
        name = self.tool_name or (tool_specs[0].name if tool_specs else "missing-tool")
        call = ToolCall(id=f"call-{self._n}", name=name, arguments=f'{{"n":{self._n}}}')
        return Message(role="assistant", content="", tool_calls=(call,))
