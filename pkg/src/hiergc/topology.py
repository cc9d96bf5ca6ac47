"""Master-edge-worker tree topology and straggler-tolerance types.

Indices are 1-based throughout the public API: edge nodes are i in 1..n and
workers are (i, j) with j in 1..m_i.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Topology:
    """A two-layer tree: n edge nodes, edge i serving m[i-1] workers."""

    n: int
    m: tuple[int, ...]

    def __init__(self, n: int, m):
        m = tuple(int(x) for x in m)
        if n < 1:
            raise ValueError(f"need at least one edge node, got n={n}")
        if len(m) != n:
            raise ValueError(f"m has {len(m)} entries for n={n} edge nodes")
        if any(x < 1 for x in m):
            raise ValueError(f"every edge needs at least one worker, got m={m}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "m", m)

    @property
    def total_workers(self) -> int:
        return sum(self.m)

    @property
    def m_min(self) -> int:
        return min(self.m)

    def workers(self):
        """Iterate worker identities (i, j), 1-based."""
        for i in range(1, self.n + 1):
            for j in range(1, self.m[i - 1] + 1):
                yield (i, j)


@dataclass(frozen=True)
class Tolerance:
    """Straggler counts to survive: s_e edge nodes, s_w workers per surviving edge."""

    s_e: int
    s_w: int

    def validate(self, topology: Topology) -> "Tolerance":
        if not 0 <= self.s_e < topology.n:
            raise ValueError(f"s_e={self.s_e} outside [0, {topology.n})")
        if not 0 <= self.s_w < topology.m_min:
            raise ValueError(f"s_w={self.s_w} outside [0, {topology.m_min})")
        return self
