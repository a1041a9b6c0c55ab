"""Loss-mask generation and reference loss arithmetic for masked SFT / DPO.

The mask keeps loss only on assistant-generated tokens (content, reasoning,
tool-call renderings); system, user, and tool-response tokens are
conditioning context and get z = 0. The loss functions here are the
reference arithmetic any trainer consuming the exported files must
reproduce; no gradients, no weights.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

from .cleaning import TokenCounter, render_message
from .model import Trajectory, ValidationError, dump_record, read_records
from .pool import ToolPool
from .preference import PreferencePair

SPLITS = ("sft", "preference")


@dataclass(frozen=True)
class MaskedExample:
    """A tokenized trajectory with per-token loss mask and span provenance."""

    example_id: str
    token_spans: tuple[tuple[int, int], ...]  # (message_index, token_count)
    mask: tuple[int, ...]
    split: str = "sft"

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValidationError(f"unknown split {self.split!r}")
        if sum(n for _, n in self.token_spans) != len(self.mask):
            raise ValidationError("span token counts must sum to the mask length")
        if any(z not in (0, 1) for z in self.mask):
            raise ValidationError("mask bits must be 0 or 1")

    def to_dict(self) -> dict:
        return {
            "example_id": self.example_id,
            "token_spans": [list(s) for s in self.token_spans],
            "mask": list(self.mask),
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MaskedExample":
        return cls(
            example_id=d["example_id"],
            token_spans=tuple((int(a), int(b)) for a, b in d["token_spans"]),
            mask=tuple(int(z) for z in d["mask"]),
            split=d.get("split", "sft"),
        )


@dataclass(frozen=True)
class LogProbTrace:
    """Per-token log-probabilities under a policy, optionally paired with a
    reference policy, aligned to a MaskedExample."""

    policy: tuple[float, ...]
    reference: Optional[tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "policy", tuple(self.policy))
        if self.reference is not None:
            object.__setattr__(self, "reference", tuple(self.reference))
            if len(self.reference) != len(self.policy):
                raise ValidationError("policy and reference lengths differ")


def compute_mask(
    t: Trajectory,
    counter: TokenCounter,
    example_id: str = "",
    split: str = "sft",
) -> MaskedExample:
    """Per-message token spans with z = 1 exactly on assistant spans."""
    spans: list[tuple[int, int]] = []
    mask: list[int] = []
    for i, m in enumerate(t.messages):
        n = counter.count(render_message(m))
        spans.append((i, n))
        mask.extend([1 if m.role == "assistant" else 0] * n)
    return MaskedExample(
        example_id=example_id or t.query_id,
        token_spans=tuple(spans),
        mask=tuple(mask),
        split=split,
    )


def _check_alignment(trace: LogProbTrace, ex: MaskedExample) -> None:
    if len(trace.policy) != len(ex.mask):
        raise ValidationError(
            f"trace length {len(trace.policy)} does not match mask length {len(ex.mask)}"
        )


def masked_sft_loss(trace: LogProbTrace, ex: MaskedExample) -> float:
    """Per-example masked negative log-likelihood: -sum_j z_j * logp_j.
    The corpus loss is the mean of these per-example sums."""
    _check_alignment(trace, ex)
    return -sum(z * lp for z, lp in zip(ex.mask, trace.policy))


def _softplus(x: float) -> float:
    # numerically stable log(1 + e^x)
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def masked_margin(trace: LogProbTrace, ex: MaskedExample) -> float:
    """Masked log-probability ratio sum: sum_j z_j (log pi_theta - log pi_ref)."""
    _check_alignment(trace, ex)
    if trace.reference is None:
        raise ValidationError("DPO margin requires a reference trace")
    return sum(
        z * (lp - lr) for z, lp, lr in zip(ex.mask, trace.policy, trace.reference)
    )


def dpo_loss_from_margin(margin: float, beta: float) -> float:
    """-log sigma(beta * margin), computed stably."""
    if beta < 0:
        raise ValidationError("beta must be >= 0")
    return _softplus(-beta * margin)


def masked_dpo_loss(
    chosen: LogProbTrace,
    rejected: LogProbTrace,
    chosen_mask: MaskedExample,
    rejected_mask: MaskedExample,
    beta: float,
) -> float:
    """-log sigma(beta * (delta_w - delta_l)) with per-sequence masked
    log-ratio sums; beta = 0 collapses to ln 2 for any inputs."""
    delta_w = masked_margin(chosen, chosen_mask)
    delta_l = masked_margin(rejected, rejected_mask)
    return dpo_loss_from_margin(delta_w - delta_l, beta)


def export_sft_file(
    trajectories: Mapping[str, Trajectory],
    pools: Mapping[str, ToolPool],
    masks: Mapping[str, MaskedExample],
    path: Union[str, Path],
) -> None:
    """One record per SFT example: trajectory + pool + mask spans. Output is
    byte-stable given identical inputs; dangling id references fail up front."""
    missing = sorted(
        [eid for eid in trajectories if eid not in pools]
        + [eid for eid in trajectories if eid not in masks]
    )
    if missing:
        raise ValidationError(f"dangling example ids (no pool or mask): {missing}")
    with open(path, "w", encoding="utf-8") as fh:
        for eid in sorted(trajectories):
            rec = {
                "example_id": eid,
                "trajectory": trajectories[eid].to_dict(),
                "pool": pools[eid].to_dict(),
                "mask": masks[eid].to_dict(),
            }
            fh.write(dump_record(rec) + "\n")


def export_preference_file(
    pairs: Sequence[PreferencePair],
    chosen_masks: Mapping[str, MaskedExample],
    rejected_masks: Mapping[str, MaskedExample],
    path: Union[str, Path],
) -> None:
    missing = sorted(
        {p.query_id for p in pairs if p.query_id not in chosen_masks}
        | {p.query_id for p in pairs if p.query_id not in rejected_masks}
    )
    if missing:
        raise ValidationError(f"dangling pair ids (no mask): {missing}")
    with open(path, "w", encoding="utf-8") as fh:
        for p in sorted(pairs, key=lambda p: p.query_id):
            rec = dict(p.to_dict())
            rec["chosen_mask"] = chosen_masks[p.query_id].to_dict()
            rec["rejected_mask"] = rejected_masks[p.query_id].to_dict()
            fh.write(dump_record(rec) + "\n")


def read_sft_file(path: Union[str, Path]) -> list[dict]:
    """Parse an exported SFT file back into structured records."""
    out = []
    for rec in read_records(path):
        out.append(
            {
                "example_id": rec["example_id"],
                "trajectory": Trajectory.from_dict(rec["trajectory"]),
                "pool": ToolPool.from_dict(rec["pool"]),
                "mask": MaskedExample.from_dict(rec["mask"]),
            }
        )
    return out
