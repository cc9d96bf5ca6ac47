"""Load/straggler trade-off bounds, as exact rationals.

All bounds are normalized per-worker loads D/K returned as `fractions.Fraction`
so that strict-inequality comparisons are exact. `LoadBound` is an alias; a
Fraction already exposes `numerator` and `denominator`.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import prod

from .topology import Tolerance, Topology

LoadBound = Fraction


@dataclass(frozen=True)
class LayerSpec:
    """Uniform multi-layer system: layer i fans out n_i-fold, tolerates s_i stragglers."""

    fanouts: tuple[int, ...]
    tolerances: tuple[int, ...]

    def __post_init__(self):
        if len(self.fanouts) != len(self.tolerances) or not self.fanouts:
            raise ValueError("fanouts and tolerances must be equal-length, non-empty")
        for layer, (n_i, s_i) in enumerate(zip(self.fanouts, self.tolerances), 1):
            if n_i < 1 or not 0 <= s_i < n_i:
                raise ValueError(f"layer {layer}: need 0 <= s={s_i} < fanout={n_i}")

    @property
    def L(self) -> int:
        return len(self.fanouts)

    @property
    def W(self) -> int:
        return prod(self.fanouts)


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    worst_subset: tuple[int, ...]
    worst_value: Fraction
    detail: str

    def __bool__(self) -> bool:
        return self.feasible


def hgc_min_load(topology: Topology, tolerance: Tolerance) -> LoadBound:
    """Minimum D/K for a two-layer scheme tolerating (s_e, s_w) stragglers."""
    tolerance.validate(topology)
    return Fraction((tolerance.s_e + 1) * (tolerance.s_w + 1), topology.total_workers)


def conventional_min_load(topology: Topology, tolerance: Tolerance) -> LoadBound:
    """Minimum D/K of a single-layer scheme facing the same straggler pattern.

    A straggling edge silences all of its workers, so the master-side code must
    tolerate the s_e largest worker groups plus s_w per surviving edge.
    """
    tolerance.validate(topology)
    s_max = sum(sorted(topology.m, reverse=True)[: tolerance.s_e])
    s_max += (topology.n - tolerance.s_e) * tolerance.s_w
    return Fraction(s_max + 1, topology.total_workers)


def multilayer_min_load(layers: LayerSpec) -> LoadBound:
    """Minimum D/K for an L-layer tree with uniform per-layer fanout."""
    return Fraction(prod(s + 1 for s in layers.tolerances), layers.W)


def check_feasibility(topology: Topology, tolerance: Tolerance) -> FeasibilityResult:
    """Whether every fastest-edge subset can collectively hold all sub-datasets.

    The binding subset is the n - s_e edges with the fewest workers; the ratio
    below is sum_{i in F} n_i / K and must reach 1.
    """
    tolerance.validate(topology)
    f_e = topology.n - tolerance.s_e
    order = sorted(range(topology.n), key=lambda i: (topology.m[i], i))
    worst = tuple(sorted(i + 1 for i in order[:f_e]))
    value = Fraction(
        sum(topology.m[i - 1] for i in worst) * (tolerance.s_e + 1),
        topology.total_workers,
    )
    feasible = value >= 1
    detail = (
        f"edges {worst} hold a fraction {value} of the required coverage"
        + ("" if feasible else " (< 1: not enough workers among survivors)")
    )
    return FeasibilityResult(feasible, worst, value, detail)
