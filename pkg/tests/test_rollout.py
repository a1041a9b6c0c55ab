import pytest

from trajkit.model import Message, Query, ToolCall, ToolSpec, ValidationError
from trajkit.rollout import (
    FORCED_ANSWER_PROMPT,
    FixtureExecutor,
    RolloutConfig,
    load_fixture_catalog,
    run_rollout,
)
from trajkit.stubs import AlwaysToolModel, ImmediateAnswerModel, SingleToolModel


@pytest.fixture
def query():
    return Query(id="q1", text="What was the revenue?", category="reasoning_qa")


@pytest.fixture
def tools():
    return [
        ToolSpec(name="income_statement", description="statements"),
        ToolSpec(name="price_history", description="prices"),
    ]


@pytest.fixture
def executor():
    return FixtureExecutor({("income_statement", "{}"): "revenue: 100"})


class TestFixtureExecutor:
    def test_exact_match(self, executor):
        msg = executor.execute(ToolCall(id="c1", name="income_statement", arguments="{}"))
        assert msg.content == "revenue: 100"
        assert msg.role == "tool"
        assert msg.tool_call_id == "c1"

    def test_args_canonicalized_for_lookup(self):
        ex = FixtureExecutor({("t", '{"b": 1, "a": 2}'): "hit"})
        call = ToolCall(id="c", name="t", arguments='{"a": 2, "b": 1}')
        assert ex.execute(call).content == "hit"

    def test_known_tool_unknown_args_returns_empty_list(self, executor):
        call = ToolCall(id="c", name="income_statement", arguments='{"year": 2023}')
        assert executor.execute(call).content == "[]"

    def test_unknown_tool_returns_error(self, executor):
        call = ToolCall(id="c", name="nope", arguments="{}")
        assert executor.execute(call).content == "Error: unknown tool nope"

    def test_load_fixture_catalog(self, tmp_path):
        path = tmp_path / "fixtures.jsonl"
        path.write_text(
            '{"tool": "t", "args": {"x": 1}, "response": "one"}\n'
            '{"tool": "t", "response": "empty-args"}\n'
        )
        ex = load_fixture_catalog(path)
        assert ex.execute(ToolCall(id="c", name="t", arguments='{"x": 1}')).content == "one"
        assert ex.execute(ToolCall(id="c", name="t", arguments="{}")).content == "empty-args"


class TestRolloutConfig:
    def test_defaults(self):
        cfg = RolloutConfig()
        assert cfg.max_turns == 7
        assert cfg.top_p == 0.9

    def test_invalid_rejected(self):
        with pytest.raises(ValidationError):
            RolloutConfig(max_turns=0)
        with pytest.raises(ValidationError):
            RolloutConfig(top_p=0.0)


class TestRunRollout:
    def test_immediate_answer_single_turn(self, query, tools, executor):
        t = run_rollout(query, tools, ImmediateAnswerModel(), executor)
        assert t.turn_count == 1
        assert t.final_answer == "Here is the answer."
        assert t.error is None
        assert t.messages[0].role == "system"
        assert t.messages[1].content == query.text

    def test_single_tool_flow(self, query, tools, executor):
        t = run_rollout(query, tools, SingleToolModel(), executor)
        assert t.turn_count == 2
        roles = [m.role for m in t.messages]
        assert roles == ["system", "user", "assistant", "tool", "assistant"]
        assert t.final_answer == "Based on the data: revenue: 100"
        assert t.source_model == "stub-single-tool"

    def test_turn_cap_with_always_calling_model(self, query, tools, executor):
        t = run_rollout(query, tools, AlwaysToolModel(), executor)
        assert t.turn_count == 7
        assert t.error is None
        # the forced final turn gets a nudge user message and no tools
        nudges = [m for m in t.messages if m.role == "user" and m.content == FORCED_ANSWER_PROMPT]
        assert len(nudges) == 1
        # calls from the final turn are recorded but never executed
        assert t.messages[-1].role == "assistant"
        assert t.messages[-1].tool_calls
        assert t.messages[-2].role == "user"

    def test_forced_turn_offers_no_tools(self, query, tools, executor):
        offered_per_turn = []

        class Recorder(AlwaysToolModel):
            def respond(self, messages, tool_specs, sampling):
                offered_per_turn.append(len(tool_specs))
                return super().respond(messages, tool_specs, sampling)

        run_rollout(query, tools, Recorder(tool_name="income_statement"), executor)
        assert offered_per_turn[:-1] == [2] * 6
        assert offered_per_turn[-1] == 0

    def test_max_turns_one_still_offers_tools(self, query, tools, executor):
        t = run_rollout(query, tools, SingleToolModel(), executor,
                        RolloutConfig(max_turns=1))
        assert t.turn_count == 1
        assert t.messages[-1].tool_calls
        assert all(m.content != FORCED_ANSWER_PROMPT for m in t.messages)

    def test_sampling_params_passed_through(self, query, tools, executor):
        seen = {}

        class Probe(ImmediateAnswerModel):
            def respond(self, messages, tool_specs, sampling):
                seen.update(sampling)
                return super().respond(messages, tool_specs, sampling)

        run_rollout(query, tools, Probe(), executor, RolloutConfig(top_p=0.7, temperature=0.2))
        assert seen == {"top_p": 0.7, "temperature": 0.2}

    def test_model_failure_recorded_with_partial_messages(self, query, tools, executor):
        class Boom:
            name = "boom"

            def respond(self, messages, tool_specs, sampling):
                raise RuntimeError("overloaded")

        t = run_rollout(query, tools, Boom(), executor)
        assert t.error is not None and "overloaded" in t.error
        assert t.turn_count == 0
        assert len(t.messages) == 2

    def test_executor_failure_becomes_error_tool_message(self, query, tools):
        class BadExecutor:
            def execute(self, call):
                raise OSError("connection reset")

        t = run_rollout(query, tools, SingleToolModel(), BadExecutor())
        tool_msgs = [m for m in t.messages if m.role == "tool"]
        assert len(tool_msgs) == 1
        assert tool_msgs[0].content.startswith("Error: tool execution failed")
        assert t.error is None

    def test_non_assistant_reply_flagged(self, query, tools, executor):
        class Wrong:
            name = "wrong"

            def respond(self, messages, tool_specs, sampling):
                return Message(role="user", content="huh")

        t = run_rollout(query, tools, Wrong(), executor)
        assert t.error is not None and "non-assistant" in t.error

    def test_mismatched_tool_call_id_flagged(self, query, tools):
        class Sloppy:
            def execute(self, call):
                return Message(role="tool", content="x", tool_call_id="other")

        t = run_rollout(query, tools, SingleToolModel(), Sloppy())
        assert t.error is not None and "tool_call_id" in t.error

    def test_trajectory_validates(self, query, tools, executor):
        for model in (ImmediateAnswerModel(), SingleToolModel(), AlwaysToolModel()):
            t = run_rollout(query, tools, model, executor)
            t.validate()
