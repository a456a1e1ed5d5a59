"""Cross-validation plans where each fold trains on a small partition of size n."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Fold:
    members: tuple[int, ...]  # partition members (pre-padding)
    padding: tuple[int, ...]  # fill-ins drawn from other partitions
    validation: tuple[int, ...]

    @property
    def training(self) -> tuple[int, ...]:
        return self.members + self.padding


@dataclass(frozen=True)
class CvPlan:
    n: int
    k: int
    folds: tuple[Fold, ...]


def make_cv_plan(size: int, n: int, seed: int) -> CvPlan:
    """Split ``range(size)`` into ``k = size // n`` training partitions.

    The shuffled order is cut into chunks of ``n``.  When ``size`` is not a
    multiple of ``n`` the last partition is the short leftover chunk, padded
    to ``n`` with draws from the other partitions; the chunk it displaces is
    used for validation only.  Each fold validates on everything outside its
    partition, padded duplicates excluded.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    k = size // n
    if k < 1 or size - n < 1:
        raise ValueError(f"n={n} leaves no validation data for {size} problems")
    rng = np.random.default_rng(seed)
    perm = [int(i) for i in rng.permutation(size)]
    parts = [tuple(perm[j * n:(j + 1) * n]) for j in range(k)]
    rest = perm[k * n:]
    pads: list[tuple[int, ...]] = [()] * k
    if rest:
        # with a single partition the displaced chunk is the only donor
        donors = parts[:-1] if k > 1 else parts
        others = [i for part in donors for i in part]
        fill = rng.choice(len(others), size=n - len(rest), replace=False)
        parts[k - 1] = tuple(rest)
        pads[k - 1] = tuple(others[int(i)] for i in sorted(fill))
    folds = []
    for members, pad in zip(parts, pads):
        excluded = set(members) | set(pad)
        folds.append(Fold(members, pad, tuple(i for i in range(size) if i not in excluded)))
    return CvPlan(n, k, tuple(folds))
