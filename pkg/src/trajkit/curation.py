"""Difficulty scoring, percentile tiering, and outcome-stratified sampling.

Difficulty combines four signals: trajectory outcome (+1 for failed), turn
count (+0..+3), tool diversity (+1 per unique tool), and query complexity
(multi-part structure, length, computation keywords). Per-query scores are
averaged over the available trajectories, tiered at the lower/upper terciles
of the global distribution, and sampled 55/45 successful/failed per tier.
"""
from __future__ import annotations

import logging
import math
import random
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .cleaning import has_successful_invocation
from .model import Query, Trajectory, ValidationError, extract_tool_sequence

log = logging.getLogger(__name__)

COMPUTATION_KEYWORDS = (
    "calculate",
    "compute",
    "compare",
    "growth",
    "ratio",
    "percentage",
    "cagr",
    "average",
    "forecast",
)
_KEYWORD_RE = re.compile(
    r"\b(" + "|".join(COMPUTATION_KEYWORDS) + r")\b", re.IGNORECASE
)
# Enumerators that mark a multi-part query: "1." / "2)" / "(a)" / "(b)".
_ENUMERATOR_RE = re.compile(r"(?:^|\s)\(?\d+[.)]\s|\([a-z]\)")

DEFAULT_SUCCESS_FRACTION = 0.55


@dataclass(frozen=True)
class DifficultyScore:
    outcome_pts: int
    length_pts: int
    diversity_pts: int
    complexity_pts: int

    def __post_init__(self) -> None:
        if self.outcome_pts not in (0, 1):
            raise ValidationError("outcome_pts must be 0 or 1")
        if not 0 <= self.length_pts <= 3:
            raise ValidationError("length_pts must be in 0..3")
        if self.diversity_pts < 0 or self.complexity_pts < 0:
            raise ValidationError("point components must be nonnegative")

    @property
    def total(self) -> int:
        return self.outcome_pts + self.length_pts + self.diversity_pts + self.complexity_pts


def trajectory_successful(q: Query, t: Trajectory) -> bool:
    """A trajectory is successful when it contains at least one successful
    tool invocation and a nonempty final answer; when the query carries a
    reference answer and an outcome flag, the flag additionally gates
    final-answer correctness."""
    base = has_successful_invocation(t) and bool(t.final_answer.strip())
    if q.reference_answer is not None and q.outcome_flag is not None:
        return base and q.outcome_flag == "successful"
    return base


def length_points(turn_count: int) -> int:
    if turn_count <= 3:
        return 0
    if turn_count <= 6:
        return 1
    if turn_count <= 10:
        return 2
    return 3


def complexity_points(text: str) -> int:
    """Deterministic proxies for the three complexity signals: +1 per
    interrogative clause beyond the first, +1/+2 for queries over 40/80
    words, +1 if any computation keyword appears."""
    pts = 0
    question_parts = [s for s in text.split("?") if s.strip()]
    parts = max(len(question_parts) if "?" in text else 1, 1)
    parts = max(parts, len(_ENUMERATOR_RE.findall(text)) or 1)
    pts += parts - 1
    words = len(text.split())
    if words > 80:
        pts += 2
    elif words > 40:
        pts += 1
    if _KEYWORD_RE.search(text):
        pts += 1
    return pts


def score_trajectory_difficulty(q: Query, t: Trajectory) -> DifficultyScore:
    unique_tools = {name for name, _ in extract_tool_sequence(t)}
    return DifficultyScore(
        outcome_pts=0 if trajectory_successful(q, t) else 1,
        length_pts=length_points(t.turn_count),
        diversity_pts=len(unique_tools),
        complexity_pts=complexity_points(q.text),
    )


def aggregate_query_scores(
    per_trajectory: Mapping[str, Sequence[DifficultyScore]]
) -> dict[str, float]:
    """Per-query difficulty: arithmetic mean of the trajectory totals."""
    out: dict[str, float] = {}
    for qid, scores in per_trajectory.items():
        if not scores:
            raise ValidationError(f"query {qid} has no trajectory scores")
        out[qid] = sum(s.total for s in scores) / len(scores)
    return out


def _nearest_rank(sorted_vals: Sequence[float], fraction: float) -> float:
    """Inclusive nearest-rank percentile: the ceil(fraction*n)-th smallest."""
    n = len(sorted_vals)
    rank = max(1, math.ceil(fraction * n))
    return sorted_vals[min(rank, n) - 1]


def assign_tiers(scores: Mapping[str, float]) -> dict[str, str]:
    """Tier each query by tercile cutoffs over the global score distribution:
    score <= P33 -> easy, <= P66 -> medium, else hard. Order-invariant."""
    if len(scores) < 3:
        raise ValidationError("tier assignment needs at least 3 queries")
    vals = sorted(scores.values())
    p33 = _nearest_rank(vals, 1 / 3)
    p66 = _nearest_rank(vals, 2 / 3)
    tiers: dict[str, str] = {}
    for qid, s in scores.items():
        if s <= p33:
            tiers[qid] = "easy"
        elif s <= p66:
            tiers[qid] = "medium"
        else:
            tiers[qid] = "hard"
    return tiers


@dataclass(frozen=True)
class TieredQuery:
    query_id: str
    tier: str
    outcome: str  # "successful" | "failed"


def stratified_sample(
    pool: Iterable[TieredQuery],
    n_total: int,
    seed: int,
    success_frac: float = DEFAULT_SUCCESS_FRACTION,
) -> list[str]:
    """Select n_total query ids: per-tier quotas split n_total into thirds
    (remainder to hard), and within each tier round(success_frac * quota)
    successful queries plus the remainder failed, drawn without replacement
    with seeded randomness. Short strata trigger a warning and proportional
    redistribution, never a silent shortfall."""
    pool = list(pool)
    if n_total > len(pool):
        raise ValidationError(f"requested {n_total} ids from a pool of {len(pool)}")
    rng = random.Random(seed)

    by_stratum: dict[tuple[str, str], list[str]] = {}
    for q in pool:
        by_stratum.setdefault((q.tier, q.outcome), []).append(q.query_id)
    for ids in by_stratum.values():
        ids.sort()

    base = n_total // 3
    quotas = {"easy": base, "medium": base, "hard": n_total - 2 * base}

    selected: list[str] = []
    shortfall = 0
    for tier in ("easy", "medium", "hard"):
        n_tier = quotas[tier]
        n_succ = int(round(success_frac * n_tier))
        n_fail = n_tier - n_succ
        succ_ids = by_stratum.get((tier, "successful"), [])
        fail_ids = by_stratum.get((tier, "failed"), [])

        take_succ = min(n_succ, len(succ_ids))
        take_fail = min(n_fail, len(fail_ids))
        # redistribute within the tier when one outcome class runs short
        if take_succ < n_succ:
            extra = min(n_succ - take_succ, len(fail_ids) - take_fail)
            take_fail += extra
            log.warning("tier %s: %d successful short, drew failed instead", tier, extra)
        if take_fail < n_tier - take_succ:
            extra = min(n_tier - take_succ - take_fail, len(succ_ids) - take_succ)
            take_succ += extra
            if extra:
                log.warning("tier %s: %d failed short, drew successful instead", tier, extra)

        picked = rng.sample(succ_ids, take_succ) + rng.sample(fail_ids, take_fail)
        selected.extend(picked)
        shortfall += n_tier - len(picked)

    if shortfall:
        log.warning("redistributing %d slots across tiers", shortfall)
        remaining = sorted({q.query_id for q in pool} - set(selected))
        selected.extend(rng.sample(remaining, shortfall))
    return selected
