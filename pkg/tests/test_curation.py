import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import make_trajectory, traj_from_calls
from trajkit.curation import (
    DifficultyScore,
    TieredQuery,
    aggregate_query_scores,
    assign_tiers,
    complexity_points,
    length_points,
    score_trajectory_difficulty,
    stratified_sample,
    trajectory_successful,
)
from trajkit.model import Message, Query, Trajectory, ValidationError


def q(text="What is it?", **kw):
    return Query(id=kw.pop("id", "q1"), text=text, category="reasoning_qa", **kw)


class TestDifficultyScore:
    def test_total_is_component_sum(self):
        s = DifficultyScore(1, 2, 5, 4)
        assert s.total == 12

    def test_component_ranges_enforced(self):
        with pytest.raises(ValidationError):
            DifficultyScore(2, 0, 0, 0)
        with pytest.raises(ValidationError):
            DifficultyScore(0, 4, 0, 0)

    def test_successful_short_simple(self):
        t = traj_from_calls(["a", "b"], args=[{"x": 1}, {"x": 2}])
        # 3 turns (2 call turns + answer) -> 0 length pts
        s = score_trajectory_difficulty(q("Show the revenue."), t)
        assert (s.outcome_pts, s.length_pts, s.diversity_pts, s.complexity_pts) == (0, 0, 2, 0)
        assert s.total == 2

    def test_failed_long_complex(self):
        # 8 turns: 7 call turns (5 unique tools) + answer, all error responses
        names = ["a", "b", "c", "d", "e", "a", "b"]
        t = traj_from_calls(names)
        t = Trajectory(
            query_id=t.query_id,
            messages=tuple(
                Message(role="tool", content="Error: failed", tool_call_id=m.tool_call_id)
                if m.role == "tool" else m
                for m in t.messages
            ),
        )
        text = (
            "First, what was the revenue of the company in fiscal year 2023 "
            "across all operating segments? Second, how did the gross margin "
            "evolve over the same period relative to its peers? Third, please "
            "calculate the compound growth implied by these figures."
        )
        assert len(text.split()) > 40
        s = score_trajectory_difficulty(q(text), t)
        assert (s.outcome_pts, s.length_pts, s.diversity_pts, s.complexity_pts) == (1, 2, 5, 4)
        assert s.total == 12

    def test_empty_trajectory_is_failed(self):
        t = Trajectory(query_id="q1", messages=())
        s = score_trajectory_difficulty(q(""), t)
        assert (s.outcome_pts, s.length_pts, s.diversity_pts, s.complexity_pts) == (1, 0, 0, 0)
        assert s.total == 1

    def test_adding_unique_tool_never_decreases_total(self):
        text = "What is the ratio?"
        base = score_trajectory_difficulty(q(text), traj_from_calls(["a", "b"]))
        more = score_trajectory_difficulty(q(text), traj_from_calls(["a", "b", "c"]))
        assert more.total >= base.total

    def test_adding_turns_never_decreases_total(self):
        text = "What is it?"
        for n in range(1, 14):
            s1 = score_trajectory_difficulty(q(text), traj_from_calls(["a"] * n))
            s2 = score_trajectory_difficulty(q(text), traj_from_calls(["a"] * (n + 1)))
            assert s2.total >= s1.total


class TestComplexityPoints:
    def test_single_part_short_no_keyword(self):
        assert complexity_points("What was the closing price?") == 0

    def test_keyword_adds_one(self):
        assert complexity_points("Calculate the closing price.") == 1

    def test_multi_part_question(self):
        assert complexity_points("What is X? What is Y? What is Z?") == 2

    def test_enumerators(self):
        assert complexity_points("Answer these: 1. revenue 2. margin 3. debt") == 2

    def test_length_bands(self):
        assert complexity_points(" ".join(["word"] * 41)) == 1
        assert complexity_points(" ".join(["word"] * 81)) == 2

    def test_keyword_case_insensitive(self):
        assert complexity_points("What is the CAGR here") == 1


class TestLengthPoints:
    @pytest.mark.parametrize(
        "turns,pts", [(0, 0), (3, 0), (4, 1), (6, 1), (7, 2), (10, 2), (11, 3), (25, 3)]
    )
    def test_bands(self, turns, pts):
        assert length_points(turns) == pts


class TestTrajectorySuccess:
    def test_outcome_flag_gates_when_reference_present(self):
        t = traj_from_calls(["a"])
        assert trajectory_successful(
            q(reference_answer="42", outcome_flag="successful"), t
        )
        assert not trajectory_successful(
            q(reference_answer="42", outcome_flag="failed"), t
        )

    def test_needs_successful_invocation(self):
        t = make_trajectory(Message(role="assistant", content="answer"))
        assert not trajectory_successful(q(), t)


class TestAssignTiers:
    def test_three_distinct_scores(self):
        tiers = assign_tiers({"a": 1.0, "b": 2.0, "c": 3.0})
        assert tiers == {"a": "easy", "b": "medium", "c": "hard"}

    def test_uniform_300_splits_in_thirds(self):
        scores = {f"q{i}": float(i) for i in range(300)}
        tiers = assign_tiers(scores)
        counts = {t: sum(1 for v in tiers.values() if v == t) for t in ("easy", "medium", "hard")}
        for n in counts.values():
            assert abs(n - 100) <= 1

    def test_all_identical_scores_all_easy(self):
        tiers = assign_tiers({f"q{i}": 5.0 for i in range(10)})
        assert set(tiers.values()) == {"easy"}

    def test_order_invariance(self):
        scores = {f"q{i}": float((i * 7) % 13) for i in range(30)}
        reordered = dict(reversed(list(scores.items())))
        assert assign_tiers(scores) == assign_tiers(reordered)

    def test_too_few_queries(self):
        with pytest.raises(ValidationError):
            assign_tiers({"a": 1.0, "b": 2.0})


class TestAggregateQueryScores:
    def test_mean_of_totals(self):
        scores = {
            "q1": [DifficultyScore(0, 0, 2, 0), DifficultyScore(1, 1, 3, 1)],
        }
        assert aggregate_query_scores(scores) == {"q1": 4.0}

    def test_empty_scores_rejected(self):
        with pytest.raises(ValidationError):
            aggregate_query_scores({"q1": []})


def _pool(n_per_stratum=60):
    pool = []
    for tier in ("easy", "medium", "hard"):
        for outcome in ("successful", "failed"):
            for i in range(n_per_stratum):
                pool.append(TieredQuery(f"{tier}-{outcome}-{i}", tier, outcome))
    return pool


class TestStratifiedSample:
    def test_tier_quota_split(self):
        selected = stratified_sample(_pool(), 60, seed=1)
        assert len(selected) == 60
        per_tier = {t: sum(1 for s in selected if s.startswith(t)) for t in ("easy", "medium", "hard")}
        assert per_tier == {"easy": 20, "medium": 20, "hard": 20}
        succ = sum(1 for s in selected if "-successful-" in s and s.startswith("easy"))
        assert succ == 11  # round(0.55 * 20)

    def test_seed_determinism(self):
        a = stratified_sample(_pool(), 90, seed=42)
        b = stratified_sample(_pool(), 90, seed=42)
        assert a == b

    def test_different_seeds_differ(self):
        a = stratified_sample(_pool(), 90, seed=1)
        b = stratified_sample(_pool(), 90, seed=2)
        assert a != b

    def test_selected_subset_of_pool(self):
        pool = _pool()
        ids = {p.query_id for p in pool}
        assert set(stratified_sample(pool, 120, seed=0)) <= ids

    def test_short_stratum_redistributes_with_warning(self, caplog):
        pool = [TieredQuery(f"e-s-{i}", "easy", "successful") for i in range(20)]
        pool += [TieredQuery(f"m-f-{i}", "medium", "failed") for i in range(20)]
        pool += [TieredQuery(f"h-s-{i}", "hard", "successful") for i in range(20)]
        import logging

        with caplog.at_level(logging.WARNING, logger="trajkit.curation"):
            selected = stratified_sample(pool, 30, seed=3)
        assert len(selected) == 30
        assert caplog.records

    def test_oversized_request_rejected(self):
        with pytest.raises(ValidationError):
            stratified_sample(_pool(1), 1000, seed=0)


@given(st.integers(0, 2**32 - 1))
def test_sample_size_always_met_when_strata_suffice(seed):
    selected = stratified_sample(_pool(30), 45, seed=seed)
    assert len(selected) == 45
    assert len(set(selected)) == 45
