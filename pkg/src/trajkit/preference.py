"""Preference-dataset construction: corpus splitting, pairing reference
trajectories with model rollouts, and verdict-based filtering.

Only pairs where the pairwise judge prefers the reference (chosen) over the
rollout (rejected) are retained; ties and rollout wins are discarded with
counts reported.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, TypeVar

from .judge import PairVerdict
from .model import Trajectory, ValidationError
from .pool import ToolPool

T = TypeVar("T")


def split_corpus(
    examples: Sequence[T], frac_sft: float, seed: int
) -> tuple[list[T], list[T]]:
    """Deterministic seeded partition into (sft, preference) splits; the SFT
    split takes floor(frac_sft * n) examples."""
    if not 0.0 < frac_sft < 1.0:
        raise ValidationError(f"frac_sft must be in (0,1), got {frac_sft}")
    order = list(range(len(examples)))
    random.Random(seed).shuffle(order)
    n_sft = int(frac_sft * len(examples))
    sft_idx = set(order[:n_sft])
    sft = [ex for i, ex in enumerate(examples) if i in sft_idx]
    pref = [ex for i, ex in enumerate(examples) if i not in sft_idx]
    return sft, pref


@dataclass(frozen=True)
class PreferencePair:
    query_id: str
    chosen: Trajectory  # reference trajectory
    rejected: Trajectory  # model-generated rollout
    verdict: PairVerdict
    pool: Optional[ToolPool] = None

    def __post_init__(self) -> None:
        if self.chosen.query_id != self.rejected.query_id:
            raise ValidationError("chosen and rejected must share a query_id")
        if self.verdict.outcome != "chosen_better":
            raise ValidationError("retained pairs must have a chosen-better verdict")

    def to_dict(self) -> dict:
        d = {
            "query_id": self.query_id,
            "chosen_messages": [m.to_dict() for m in self.chosen.messages],
            "rejected_messages": [m.to_dict() for m in self.rejected.messages],
            "chosen_source_model": self.chosen.source_model,
            "rejected_source_model": self.rejected.source_model,
            "verdict": self.verdict.verdict,
            "reasoning": self.verdict.reasoning,
            "a_was_chosen_slot": self.verdict.a_was_chosen_slot,
        }
        if self.pool is not None:
            d["pool"] = self.pool.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "PreferencePair":
        from .model import Message

        qid = d["query_id"]
        return cls(
            query_id=qid,
            chosen=Trajectory(
                query_id=qid,
                messages=tuple(Message.from_dict(m) for m in d["chosen_messages"]),
                source_model=d.get("chosen_source_model", ""),
            ),
            rejected=Trajectory(
                query_id=qid,
                messages=tuple(Message.from_dict(m) for m in d["rejected_messages"]),
                source_model=d.get("rejected_source_model", ""),
            ),
            verdict=PairVerdict(
                verdict=d["verdict"],
                reasoning=d.get("reasoning", ""),
                a_was_chosen_slot=bool(d["a_was_chosen_slot"]),
            ),
            pool=ToolPool.from_dict(d["pool"]) if d.get("pool") else None,
        )


@dataclass(frozen=True)
class PairingReport:
    retained: int = 0
    ties: int = 0
    rejected_wins: int = 0
    skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "retained": self.retained,
            "ties": self.ties,
            "rejected_wins": self.rejected_wins,
            "skipped": self.skipped,
        }


def build_pairs(
    references: Mapping[str, Trajectory],
    rollouts: Mapping[str, Trajectory],
    verdicts: Mapping[str, PairVerdict],
    pools: Optional[Mapping[str, ToolPool]] = None,
) -> tuple[list[PreferencePair], PairingReport]:
    """Assemble preference pairs keyed by query_id. A query missing a rollout
    or verdict is skipped and counted; ties and rejected-wins are discarded."""
    pairs: list[PreferencePair] = []
    ties = rejected_wins = skipped = 0
    for qid in sorted(references):
        rollout = rollouts.get(qid)
        verdict = verdicts.get(qid)
        if rollout is None or verdict is None:
            skipped += 1
            continue
        if verdict.outcome == "tie":
            ties += 1
            continue
        if verdict.outcome == "rejected_better":
            rejected_wins += 1
            continue
        pairs.append(
            PreferencePair(
                query_id=qid,
                chosen=references[qid],
                rejected=rollout,
                verdict=verdict,
                pool=pools.get(qid) if pools else None,
            )
        )
    report = PairingReport(
        retained=len(pairs), ties=ties, rejected_wins=rejected_wins, skipped=skipped
    )
    return pairs, report
