import json

import pytest
from hypothesis import strategies as st

from trajkit.model import Message, Query, ToolCall, Trajectory


def tc(call_id: str, name: str, **args) -> ToolCall:
    return ToolCall(id=call_id, name=name, arguments=json.dumps(args))


def assistant_call(*calls: ToolCall, content: str = "", reasoning=None) -> Message:
    return Message(
        role="assistant", content=content, reasoning_content=reasoning, tool_calls=calls
    )


def tool_reply(call: ToolCall, content: str) -> Message:
    return Message(role="tool", content=content, tool_call_id=call.id)


def make_trajectory(*messages: Message, query_id="q1", source_model="m") -> Trajectory:
    base = [
        Message(role="system", content="sys"),
        Message(role="user", content="question?"),
    ]
    return Trajectory(query_id=query_id, messages=tuple(base) + messages, source_model=source_model)


def traj_from_calls(names, query_id="q1", args=None) -> Trajectory:
    """Trajectory making one tool call per name (with optional per-call args),
    then a final answer."""
    msgs = []
    for i, name in enumerate(names):
        call = ToolCall(
            id=f"c{i}",
            name=name,
            arguments=json.dumps(args[i] if args else {}),
        )
        msgs.append(assistant_call(call))
        msgs.append(tool_reply(call, f"data-{i}"))
    msgs.append(Message(role="assistant", content="final answer"))
    return make_trajectory(*msgs, query_id=query_id)


@pytest.fixture
def simple_query() -> Query:
    return Query(id="q1", text="What was the revenue?", category="reasoning_qa",
                 reference_answer="42")


# -- hypothesis strategies ---------------------------------------------------

_names = st.sampled_from([f"tool_{c}" for c in "abcdef"])
_args = st.dictionaries(
    st.sampled_from(["symbol", "limit", "period"]),
    st.one_of(st.integers(-5, 5), st.sampled_from(["AAPL", "MSFT", "q"])),
    max_size=2,
)


@st.composite
def trajectories(draw, max_turns=8):
    n_turns = draw(st.integers(0, max_turns))
    msgs = [
        Message(role="system", content="sys"),
        Message(role="user", content="question?"),
    ]
    counter = 0
    for _ in range(n_turns):
        n_calls = draw(st.integers(0, 2))
        calls = []
        for _ in range(n_calls):
            counter += 1
            calls.append(
                ToolCall(
                    id=f"c{counter}",
                    name=draw(_names),
                    arguments=json.dumps(draw(_args)),
                )
            )
        reasoning = draw(st.one_of(st.none(), st.sampled_from(["think", "plan"])))
        msgs.append(
            Message(
                role="assistant",
                content=draw(st.sampled_from(["", "working on it"])) if calls else "answer",
                reasoning_content=reasoning,
                tool_calls=tuple(calls) or None,
            )
        )
        for c in calls:
            msgs.append(
                Message(
                    role="tool",
                    content=draw(st.sampled_from(["data", "[]", "{}", "Error: boom", ""])),
                    tool_call_id=c.id,
                )
            )
    return Trajectory(query_id="q1", messages=tuple(msgs), source_model="hyp")
