"""Per-stage complex operation counters."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field


@dataclass
class ComplexityCounters:
    mults: Counter = field(default_factory=Counter)
    adds: Counter = field(default_factory=Counter)

    def add(self, stage: str, mults: int, adds: int | None = None) -> None:
        self.mults[stage] += int(mults)
        self.adds[stage] += int(mults if adds is None else adds)

    def matmul(self, stage: str, m: int, k: int, n: int) -> None:
        """Account for an (m x k) @ (k x n) complex product."""
        self.add(stage, m * k * n, m * (k - 1) * n if k > 0 else 0)

    def merge(self, other: ComplexityCounters) -> ComplexityCounters:
        self.mults.update(other.mults)
        self.adds.update(other.adds)
        return self

    def total_mults(self, stage: str | None = None) -> int:
        return self.mults[stage] if stage else sum(self.mults.values())

    def total_adds(self, stage: str | None = None) -> int:
        return self.adds[stage] if stage else sum(self.adds.values())
