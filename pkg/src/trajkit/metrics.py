"""Deterministic rubric metrics and the nine-metric aggregation rule.

Three algorithmic metrics (tool-call F1, step efficiency, redundancy) are
computed against a golden reference trajectory; the overall score is the mean
of all nine metrics after normalizing the six Likert-scale judged metrics by
dividing by 5.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .model import (
    ALGORITHMIC_METRICS,
    JUDGED_METRICS,
    MetricReport,
    Trajectory,
    ValidationError,
    extract_tool_sequence,
)

GOLDEN_STATUSES = ("candidate", "approved", "flagged")


@dataclass(frozen=True)
class GoldenLabel:
    """The reference trajectory for a query, tracked through expert review."""

    query_id: str
    trajectory: Trajectory
    status: str = "candidate"

    def __post_init__(self) -> None:
        if self.status not in GOLDEN_STATUSES:
            raise ValidationError(f"unknown golden status {self.status!r}")


def _f1(overlap: int, n_candidate: int, n_golden: int) -> float:
    if n_candidate == 0 and n_golden == 0:
        return 1.0
    if n_candidate == 0 or n_golden == 0:
        return 0.0
    precision = overlap / n_candidate
    recall = overlap / n_golden
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def tool_call_f1(candidate: Trajectory, golden: Trajectory) -> float:
    """Mean of set-level F1 (unique tool names) and bag-level F1 (name
    multisets over the full call sequence). Two empty sequences score 1.0;
    empty vs nonempty scores 0.0."""
    cand_names = [name for name, _ in extract_tool_sequence(candidate)]
    gold_names = [name for name, _ in extract_tool_sequence(golden)]

    cand_set, gold_set = set(cand_names), set(gold_names)
    set_f1 = _f1(len(cand_set & gold_set), len(cand_set), len(gold_set))

    cand_bag, gold_bag = Counter(cand_names), Counter(gold_names)
    overlap = sum((cand_bag & gold_bag).values())
    bag_f1 = _f1(overlap, sum(cand_bag.values()), sum(gold_bag.values()))

    return (set_f1 + bag_f1) / 2


def step_efficiency(candidate: Trajectory, golden: Trajectory) -> float:
    """min(T_golden / T_candidate, 1.0); a trajectory with no turns scores 0."""
    t_candidate = candidate.turn_count
    if t_candidate == 0:
        return 0.0
    return min(golden.turn_count / t_candidate, 1.0)


def redundancy_score(candidate: Trajectory) -> float:
    """1 - duplicates/total over (name, canonical arguments) identities; a
    call is a duplicate when the same identity occurred earlier. No calls at
    all scores 1.0 (vacuously no duplicates)."""
    seq = extract_tool_sequence(candidate)
    if not seq:
        return 1.0
    seen: set[tuple[str, str]] = set()
    dup = 0
    for entry in seq:
        if entry in seen:
            dup += 1
        else:
            seen.add(entry)
    return 1.0 - dup / len(seq)


def aggregate_overall(report: Union[MetricReport, Mapping[str, float]]) -> float:
    """Mean of the nine normalized metrics: the three algorithmic values as-is
    and the six Likert values each divided by 5.

    Raises:
        ValidationError: a field is missing or out of range.
    """
    values = report.metric_values() if isinstance(report, MetricReport) else dict(report)
    normalized: list[float] = []
    for m in ALGORITHMIC_METRICS:
        v = values.get(m)
        if v is None or not 0.0 <= v <= 1.0:
            raise ValidationError(f"{m} must be in [0,1], got {v!r}")
        normalized.append(float(v))
    for m in JUDGED_METRICS:
        v = values.get(m)
        if v is None or not 1.0 <= v <= 5.0:
            raise ValidationError(f"{m} must be in [1,5], got {v!r}")
        normalized.append(float(v) / 5.0)
    return sum(normalized) / len(normalized)


def score_algorithmic(
    candidate: Trajectory,
    golden: Trajectory,
    query_id: Optional[str] = None,
) -> MetricReport:
    """Fill the three algorithmic fields; judged fields are left unset for
    the judge module."""
    return MetricReport(
        query_id=query_id if query_id is not None else candidate.query_id,
        source_model=candidate.source_model,
        tool_call_f1=tool_call_f1(candidate, golden),
        step_efficiency=step_efficiency(candidate, golden),
        redundancy=redundancy_score(candidate),
    )
