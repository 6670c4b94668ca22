"""Cumulative coverage bookkeeping over the phantom's vertex set.

Every vertex is counted at most once per episode (set semantics): marking
an already-visited vertex neither grows visible_count nor the coverage
ratio, which keeps coverage within [0, 100] and non-decreasing.
"""

from __future__ import annotations

import numpy as np


class CoverageTracker:
    """Per-vertex visited flags plus running coverage percentages."""

    def __init__(self, vertice_count: int):
        if vertice_count <= 0:
            raise ValueError("vertice_count must be positive")
        self.vertice_count = int(vertice_count)
        self.visited = np.zeros(self.vertice_count, dtype=bool)
        self.visible_count = 0
        self.current_coverage = 0.0
        self.previous_coverage = 0.0

    def reset(self) -> None:
        self.visited[:] = False
        self.visible_count = 0
        self.current_coverage = 0.0
        self.previous_coverage = 0.0

    def mark_and_diff(self, newly_seen) -> float:
        """Mark vertices visited and return the coverage gained (percent)."""
        idx = np.asarray(newly_seen, dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= self.vertice_count:
                raise IndexError("vertex index out of range")
            self.visited[idx] = True
            self.visible_count = int(self.visited.sum())
        self.current_coverage = 100.0 * self.visible_count / self.vertice_count
        diff = self.current_coverage - self.previous_coverage
        self.previous_coverage = self.current_coverage
        return diff

    def fresh_indices(self, indices) -> np.ndarray:
        """Subset of `indices` not yet visited (no state change)."""
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size == 0:
            return idx
        return idx[~self.visited[idx]]
