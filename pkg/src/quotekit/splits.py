"""Group-aware train/test splitting and k-fold assignment.

Records that share a client_group (multi-phase deals with one client) are
always kept on the same side of every partition, so evaluation can never see
a sibling of a training record.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dataset import DealRecord


@dataclass(frozen=True)
class SplitPlan:
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    seed: int
    test_fraction: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": "split",
                "seed": self.seed,
                "test_fraction": self.test_fraction,
                "train_indices": list(self.train_indices),
                "test_indices": list(self.test_indices),
            },
            indent=2,
        )


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[int, ...], ...]

    @property
    def k(self) -> int:
        return len(self.folds)

    def to_json(self) -> str:
        return json.dumps(
            {"kind": "kfold", "k": self.k, "folds": [list(f) for f in self.folds]},
            indent=2,
        )


@dataclass(frozen=True)
class LeakageReport:
    ok: bool
    offending_groups: tuple[str, ...]


def load_plan(path: str | Path) -> SplitPlan | FoldPlan:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("kind") == "split":
        return SplitPlan(
            train_indices=tuple(payload["train_indices"]),
            test_indices=tuple(payload["test_indices"]),
            seed=payload["seed"],
            test_fraction=payload["test_fraction"],
        )
    if payload.get("kind") == "kfold":
        return FoldPlan(folds=tuple(tuple(f) for f in payload["folds"]))
    raise ValueError(f"unknown plan kind {payload.get('kind')!r} in {path}")


def _groups_in_order(records: Sequence[DealRecord]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, record in enumerate(records):
        groups.setdefault(record.client_group, []).append(i)
    return groups


def group_shuffle_split(
    records: Sequence[DealRecord], test_fraction: float, seed: int
) -> SplitPlan:
    """Shuffle groups with a seeded RNG and assign whole groups to the test side.

    Groups are moved until the test record count first reaches
    ceil(test_fraction * N); the group that crosses the target is kept only if
    the overshoot does not exceed the undershoot (groups are indivisible, so
    the exact fraction is generally unreachable).
    """
    if not 0 < test_fraction < 1:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    groups = _groups_in_order(records)
    if len(groups) < 2:
        raise ValueError("cannot split one group: need at least 2 distinct client groups")
    target = math.ceil(test_fraction * len(records))
    order = sorted(groups)
    random.Random(seed).shuffle(order)

    test_groups: list[str] = []
    count = 0
    for name in order:
        size = len(groups[name])
        if len(test_groups) == len(order) - 1:
            break  # never move the last remaining group; train must stay non-empty
        if count + size >= target:
            overshoot = count + size - target
            undershoot = target - count
            if overshoot <= undershoot or not test_groups:
                test_groups.append(name)
            break
        test_groups.append(name)
        count += size

    test_set = set(test_groups)
    test_indices = tuple(i for i, r in enumerate(records) if r.client_group in test_set)
    train_indices = tuple(i for i, r in enumerate(records) if r.client_group not in test_set)
    return SplitPlan(
        train_indices=train_indices,
        test_indices=test_indices,
        seed=seed,
        test_fraction=test_fraction,
    )


def group_kfold(records: Sequence[DealRecord], k: int) -> FoldPlan:
    """Assign groups to k folds, largest group first, each to the lightest fold.

    Deterministic: no RNG; ties in group size break on the group name, ties in
    fold load break on the lowest fold index.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    groups = _groups_in_order(records)
    if len(groups) < k:
        raise ValueError(f"need at least {k} distinct groups, found {len(groups)}")
    ordered = sorted(groups.items(), key=lambda item: (-len(item[1]), item[0]))
    fold_members: list[list[int]] = [[] for _ in range(k)]
    fold_sizes = [0] * k
    for _, indices in ordered:
        lightest = fold_sizes.index(min(fold_sizes))
        fold_members[lightest].extend(indices)
        fold_sizes[lightest] += len(indices)
    return FoldPlan(folds=tuple(tuple(sorted(members)) for members in fold_members))


def verify_no_leakage(
    plan: SplitPlan | FoldPlan, records: Sequence[DealRecord]
) -> LeakageReport:
    """Report every client_group whose records span more than one partition."""
    if isinstance(plan, SplitPlan):
        partitions = [plan.train_indices, plan.test_indices]
    else:
        partitions = list(plan.folds)
    n = len(records)
    group_partitions: dict[str, set[int]] = {}
    for part_id, indices in enumerate(partitions):
        for i in indices:
            if not 0 <= i < n:
                raise IndexError(f"plan index {i} out of range for dataset of {n}")
            group_partitions.setdefault(records[i].client_group, set()).add(part_id)
    offending = tuple(sorted(g for g, parts in group_partitions.items() if len(parts) > 1))
    return LeakageReport(ok=not offending, offending_groups=offending)
