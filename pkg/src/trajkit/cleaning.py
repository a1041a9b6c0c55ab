"""Parse raw session logs into trajectories and normalize them for training.

Three per-record transformations (system-prompt replacement, ghost tool-call
removal, reasoning relocation) followed by three filters (all-empty tool
responses, token length, at-least-one-successful-invocation). The pipeline is
idempotent on its own output.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Any, Iterable, Mapping, Optional, Protocol, Union

from .model import Message, Trajectory, ValidationError

GENERIC_SYSTEM_PROMPT = (
    "You are a financial assistant operating in an interactive environment "
    "with access to external tools.\n\n"
    "Your goal is to answer user queries accurately and efficiently."
)

# Literal plain-text patterns marking a tool call that was captured as text
# but never executed. Matched literally, no XML parsing.
GHOST_PATTERNS = ("<function_calls>", "<function=")

# Tool-response contents considered effectively empty after whitespace trim.
EMPTY_RESPONSES = ("", "[]", "{}")

ERROR_PREFIX = "Error"

DEFAULT_TOKEN_LIMIT = 16384


class TokenCounter(Protocol):
    def count(self, text: str) -> int: ...


class ByteTokenCounter:
    """Default counter: ceil(utf-8 bytes / 4). Deterministic and monotone;
    stands in for model-specific chat-template tokenization."""

    def count(self, text: str) -> int:
        return math.ceil(len(text.encode("utf-8")) / 4)


def render_message(m: Message) -> str:
    """Deterministic text rendering of one message, used for token counting."""
    parts = [m.role, m.content]
    if m.reasoning_content:
        parts.append(m.reasoning_content)
    if m.tool_calls:
        parts.append(json.dumps([c.to_dict() for c in m.tool_calls], sort_keys=True))
    return "\n".join(p for p in parts if p)


def count_trajectory_tokens(
    t: Trajectory, counter: TokenCounter, extra_text: str = ""
) -> int:
    """Token count of a trajectory: sum of per-message counts plus any extra
    rendered context (e.g. the tool pool). Additive per message so that mask
    spans sum exactly to the whole."""
    total = sum(counter.count(render_message(m)) for m in t.messages)
    if extra_text:
        total += counter.count(extra_text)
    return total


@dataclass(frozen=True)
class CleaningReport:
    ghost_calls_removed: int = 0
    reasoning_relocations: int = 0
    system_prompts_replaced: int = 0
    dropped_all_empty: int = 0
    dropped_over_length: int = 0
    dropped_no_success: int = 0
    skipped_unparsable: int = 0
    retained: int = 0
    input_count: int = 0

    def to_dict(self) -> dict:
        return {
            "ghost_calls_removed": self.ghost_calls_removed,
            "reasoning_relocations": self.reasoning_relocations,
            "system_prompts_replaced": self.system_prompts_replaced,
            "dropped_all_empty": self.dropped_all_empty,
            "dropped_over_length": self.dropped_over_length,
            "dropped_no_success": self.dropped_no_success,
            "skipped_unparsable": self.skipped_unparsable,
            "retained": self.retained,
            "input_count": self.input_count,
        }


def replace_system_prompt(
    t: Trajectory, generic_prompt: str = GENERIC_SYSTEM_PROMPT
) -> tuple[Trajectory, int]:
    """Replace every system message's content with the generic prompt;
    prepend one if none exists. Returns (trajectory, messages changed)."""
    changed = 0
    msgs: list[Message] = []
    has_system = any(m.role == "system" for m in t.messages)
    if not has_system:
        msgs.append(Message(role="system", content=generic_prompt))
        changed += 1
    for m in t.messages:
        if m.role == "system" and m.content != generic_prompt:
            msgs.append(replace(m, content=generic_prompt))
            changed += 1
        else:
            msgs.append(m)
    return replace(t, messages=tuple(msgs)), changed


def is_ghost_message(m: Message, successor: Optional[Message]) -> bool:
    """An assistant message is a ghost tool call when it (a) has no
    structured tool_calls, (b) contains a literal ghost pattern, and (c) is
    not followed by a tool response."""
    return (
        m.role == "assistant"
        and not m.tool_calls
        and any(p in m.content for p in GHOST_PATTERNS)
        and (successor is None or successor.role != "tool")
    )


def remove_ghost_tool_calls(t: Trajectory) -> tuple[Trajectory, int]:
    kept: list[Message] = []
    removed = 0
    msgs = t.messages
    for i, m in enumerate(msgs):
        successor = msgs[i + 1] if i + 1 < len(msgs) else None
        if is_ghost_message(m, successor):
            removed += 1
        else:
            kept.append(m)
    return replace(t, messages=tuple(kept)), removed


def relocate_reasoning(t: Trajectory) -> tuple[Trajectory, int]:
    """Move assistant content into reasoning_content when the message also
    carries tool calls; appended after any existing reasoning_content."""
    moved = 0
    msgs: list[Message] = []
    for m in t.messages:
        if m.role == "assistant" and m.tool_calls and m.content:
            reasoning = (
                f"{m.reasoning_content}\n{m.content}" if m.reasoning_content else m.content
            )
            msgs.append(replace(m, content="", reasoning_content=reasoning))
            moved += 1
        else:
            msgs.append(m)
    return replace(t, messages=tuple(msgs)), moved


def is_empty_response(content: str) -> bool:
    return content.strip() in EMPTY_RESPONSES


def is_successful_response(content: str) -> bool:
    """A tool response counts as a successful invocation when it is
    non-empty and does not start with the literal error prefix."""
    stripped = content.strip()
    return stripped not in EMPTY_RESPONSES and not stripped.startswith(ERROR_PREFIX)


def filter_all_empty(t: Trajectory) -> bool:
    """True = keep. Drop only when the trajectory has at least one tool
    message and every tool response is effectively empty; a mix of empty and
    data-bearing responses is retained (failure-recovery behavior)."""
    tool_contents = [m.content for m in t.messages if m.role == "tool"]
    if not tool_contents:
        return True
    return not all(is_empty_response(c) for c in tool_contents)


def filter_token_length(
    t: Trajectory,
    counter: Optional[TokenCounter] = None,
    limit: int = DEFAULT_TOKEN_LIMIT,
    extra_text: str = "",
) -> bool:
    """True = keep. Drop strictly above the limit (a count equal to the
    limit is kept)."""
    counter = counter or ByteTokenCounter()
    return count_trajectory_tokens(t, counter, extra_text=extra_text) <= limit


def has_successful_invocation(t: Trajectory) -> bool:
    return any(
        m.role == "tool" and is_successful_response(m.content) for m in t.messages
    )


def clean_trajectory(
    t: Trajectory, generic_prompt: str = GENERIC_SYSTEM_PROMPT
) -> tuple[Trajectory, int, int, int]:
    """Apply the three transformations in order; returns the cleaned
    trajectory plus (system replacements, ghosts removed, relocations)."""
    t, n_sys = replace_system_prompt(t, generic_prompt)
    t, n_ghost = remove_ghost_tool_calls(t)
    t, n_moved = relocate_reasoning(t)
    return t, n_sys, n_ghost, n_moved


def clean_pipeline(
    raw: Iterable[Union[Trajectory, Mapping[str, Any]]],
    generic_prompt: str = GENERIC_SYSTEM_PROMPT,
    counter: Optional[TokenCounter] = None,
    token_limit: int = DEFAULT_TOKEN_LIMIT,
) -> tuple[list[Trajectory], CleaningReport]:
    """Clean and filter a corpus. Unparsable records are skipped and counted,
    never abort the run. Output order matches input order."""
    counter = counter or ByteTokenCounter()
    cleaned: list[Trajectory] = []
    n_sys = n_ghost = n_moved = 0
    dropped_empty = dropped_length = dropped_success = skipped = 0
    total = 0
    for rec in raw:
        total += 1
        try:
            t = rec if isinstance(rec, Trajectory) else Trajectory.from_dict(rec)
            t, s, g, m = clean_trajectory(t, generic_prompt)
        except (ValidationError, KeyError, TypeError, json.JSONDecodeError):
            skipped += 1
            continue
        n_sys += s
        n_ghost += g
        n_moved += m
        if not filter_all_empty(t):
            dropped_empty += 1
            continue
        if not filter_token_length(t, counter, token_limit):
            dropped_length += 1
            continue
        if not has_successful_invocation(t):
            dropped_success += 1
            continue
        cleaned.append(t)
    report = CleaningReport(
        ghost_calls_removed=n_ghost,
        reasoning_relocations=n_moved,
        system_prompts_replaced=n_sys,
        dropped_all_empty=dropped_empty,
        dropped_over_length=dropped_length,
        dropped_no_success=dropped_success,
        skipped_unparsable=skipped,
        retained=len(cleaned),
        input_count=total,
    )
    return cleaned, report
