"""Stochastic node profiles. All times in milliseconds, rates in 1/ms."""
from __future__ import annotations

from dataclasses import dataclass

from .topology import Topology


@dataclass(frozen=True)
class WorkerProfile:
    """Shifted-exponential compute plus geometric-retransmission links.

    c_ms: deterministic compute time per sub-dataset; gamma_per_ms: rate of the
    exponential compute jitter (math.inf disables it); tau_ms: one-way link
    delay to the edge node; p: per-transmission failure probability.
    """

    c_ms: float
    gamma_per_ms: float
    tau_ms: float
    p: float

    def __post_init__(self):
        if self.c_ms < 0 or self.tau_ms < 0:
            raise ValueError("times must be non-negative")
        if not self.gamma_per_ms > 0:
            raise ValueError("gamma must be positive")
        if not 0 <= self.p < 1:
            raise ValueError("failure probability must lie in [0, 1)")


@dataclass(frozen=True)
class EdgeProfile:
    """Edge-to-master link: one-way delay tau_ms, failure probability p."""

    tau_ms: float
    p: float

    def __post_init__(self):
        if self.tau_ms < 0:
            raise ValueError("tau must be non-negative")
        if not 0 <= self.p < 1:
            raise ValueError("failure probability must lie in [0, 1)")


@dataclass(frozen=True)
class SystemProfile:
    """Profiles for every node of a topology."""

    edges: tuple[EdgeProfile, ...]
    workers: tuple[tuple[WorkerProfile, ...], ...]

    def validate(self, topology: Topology) -> "SystemProfile":
        if len(self.edges) != topology.n:
            raise ValueError(f"{len(self.edges)} edge profiles for n={topology.n}")
        for i, (row, mi) in enumerate(zip(self.workers, topology.m), 1):
            if len(row) != mi:
                raise ValueError(f"edge {i}: {len(row)} worker profiles for m_{i}={mi}")
        return self

    @staticmethod
    def uniform(topology: Topology, worker: WorkerProfile, edge: EdgeProfile) -> "SystemProfile":
        return SystemProfile(
            edges=tuple(edge for _ in range(topology.n)),
            workers=tuple(tuple(worker for _ in range(mi)) for mi in topology.m),
        )
