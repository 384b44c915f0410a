"""Smooth weighted round-robin dispatch across active variants.

Quotas arrive as real-valued rps; they are converted to integer weights by
rounding half up with a floor of one for any strictly positive quota (the
mapping is a documented choice of this implementation). Selection keeps a
running score per variant: every call adds each variant's weight to its
score, picks the highest score (ties by id ascending) and subtracts the
weight total from the winner. Scores are seeded with the weights when a
table is installed, which interleaves selections proportionally from the
very first call: weights {A: 2, B: 1} yield A, A, B, A, A, B, ...

Over any window of sum(weights) consecutive calls each variant is selected
exactly weight times.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Mapping

from .errors import InvalidTableError, NotConfiguredError


def integer_weights(quotas: Mapping[str, float]) -> dict[str, int]:
    """Documented quota-to-weight rule: round half up, floor 1 if positive."""
    weights: dict[str, int] = {}
    for vid, quota in quotas.items():
        if quota < 0:
            raise InvalidTableError(f"negative quota for {vid!r}")
        if quota > 0:
            weights[vid] = max(1, int(math.floor(quota + 0.5)))
    if not weights:
        raise InvalidTableError("table has no positive weight")
    return weights


@dataclass(frozen=True)
class QuotaTable:
    """Snapshot of the active table; epoch increases on every swap."""

    entries: tuple[tuple[str, float], ...]
    epoch: int


class Dispatcher:
    """Linearizable smooth-WRR selector with atomic table swaps."""

    def __init__(self):
        self._lock = threading.Lock()
        self._table: QuotaTable | None = None
        self._weights: dict[str, int] = {}
        self._order: list[str] = []
        self._scores: dict[str, int] = {}
        self._total = 0
        self._epoch = 0

    @property
    def table(self) -> QuotaTable | None:
        return self._table

    def set_quotas(self, quotas: Mapping[str, float]) -> QuotaTable:
        """Atomically replace the active table; selection state resets."""
        weights = integer_weights(quotas)
        with self._lock:
            self._epoch += 1
            self._table = QuotaTable(
                entries=tuple(sorted(quotas.items())), epoch=self._epoch
            )
            self._weights = weights
            self._order = sorted(weights)
            self._scores = dict(weights)
            self._total = sum(weights.values())
        return self._table

    def next_target(self) -> str:
        with self._lock:
            if self._table is None:
                raise NotConfiguredError("no quota table set")
            scores = self._scores
            for vid, w in self._weights.items():
                scores[vid] += w
            winner = self._order[0]
            best = scores[winner]
            for vid in self._order[1:]:
                if scores[vid] > best:
                    winner, best = vid, scores[vid]
            scores[winner] -= self._total
            return winner
