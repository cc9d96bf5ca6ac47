"""Joint node and coding-scheme selection.

The proxy objective replaces every random component of the runtime model by
its mean: a worker costs B_(i,j) = c*D + 1/gamma + 2*tau_w/(1-p_w) +
tau_e/(1-p_e) and an edge upload costs A_i = tau_e/(1-p_e). For a tolerance
pair the cheapest selection keeps, per edge, the m_i - s_w cheapest workers,
and keeps the n - s_e edges with the smallest A_i + (m_i - s_w)-th smallest
B_(i,j); the greedy sweep over all tolerance pairs is exactly optimal for this
objective (certified here against a brute-force enumeration oracle).

`order_stat_gap_bound` and `theorem3_bound` bound the gap between the proxy
objective and the true expected runtime using only per-node means/variances.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoFeasibleToleranceError, NumericalError, TooLargeError
from .profiles import SystemProfile
from .runtime import sample_hierarchical_batch
from .topology import Tolerance, Topology

BRUTE_FORCE_GUARD = 10_000_000


@dataclass(frozen=True)
class SkippedCandidate:
    s_e: int
    s_w: int
    reason: str


@dataclass(frozen=True)
class Selection:
    """A tolerance pair plus the participating-node indicator vectors."""

    s_e: int
    s_w: int
    e: tuple[int, ...]
    w: tuple[tuple[int, ...], ...]
    objective: float
    D: int
    skipped: tuple[SkippedCandidate, ...] = ()
    evaluations: int = 0

    def selected_edges(self) -> tuple[int, ...]:
        return tuple(i + 1 for i, flag in enumerate(self.e) if flag)

    def selected_workers(self, i: int) -> tuple[int, ...]:
        return tuple(j + 1 for j, flag in enumerate(self.w[i - 1]) if flag)


@dataclass(frozen=True)
class GapBoundInputs:
    """Monte-Carlo moments of the per-edge and per-worker totals."""

    edge_means: tuple[float, ...]
    edge_variances: tuple[float, ...]
    worker_means: tuple[tuple[float, ...], ...]
    worker_variances: tuple[tuple[float, ...], ...]
    trials: int
    seed: int


def proxy_costs(topology: Topology, profile: SystemProfile, D: int):
    """Per-worker costs B_(i,j) and per-edge upload costs A_i (expected values)."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    profile.validate(topology)
    A = [e.tau_ms / (1.0 - e.p) for e in profile.edges]
    B = []
    for i in range(topology.n):
        row = []
        for w in profile.workers[i]:
            jitter = 0.0 if math.isinf(w.gamma_per_ms) else 1.0 / w.gamma_per_ms
            row.append(w.c_ms * D + jitter + 2.0 * w.tau_ms / (1.0 - w.p) + A[i])
        B.append(tuple(row))
    return tuple(B), tuple(A)


def _integer_load(topology: Topology, K: int, s_e: int, s_w: int):
    num = K * (s_e + 1) * (s_w + 1)
    M = topology.total_workers
    if num % M:
        return None, f"D = {num}/{M} is not an integer"
    return num // M, None


def _pair_objective(topology, B, A, s_e, s_w):
    """(value, per-edge values) of the greedy rule at one tolerance pair."""
    per_edge = []
    for i in range(topology.n):
        k = topology.m[i] - s_w
        kth = sorted(B[i])[k - 1]
        per_edge.append(A[i] + kth)
    value = sorted(per_edge)[topology.n - s_e - 1]
    return value, per_edge


def _selection_vectors(topology, B, A, s_e, s_w, per_edge):
    f_e = topology.n - s_e
    order = sorted(range(topology.n), key=lambda i: (per_edge[i], i))
    chosen = set(order[:f_e])
    e = tuple(1 if i in chosen else 0 for i in range(topology.n))
    w = []
    for i in range(topology.n):
        if i in chosen:
            k = topology.m[i] - s_w
            worder = sorted(range(topology.m[i]), key=lambda j: (B[i][j], j))
            keep = set(worder[:k])
            w.append(tuple(1 if j in keep else 0 for j in range(topology.m[i])))
        else:
            w.append(tuple(0 for _ in range(topology.m[i])))
    return e, tuple(w)


def solve(topology: Topology, profile: SystemProfile, K: int) -> Selection:
    """Sweep all tolerance pairs, greedy-select nodes; exact for the proxy objective.

    Pairs whose per-worker load is not an integer are skipped and reported.
    Ties break toward the lexicographically smaller (s_e, s_w), then smaller
    node indices.
    """
    profile.validate(topology)
    skipped: list[SkippedCandidate] = []
    evaluations = 0
    best = None
    for s_e in range(topology.n):
        for s_w in range(topology.m_min):
            D, reason = _integer_load(topology, K, s_e, s_w)
            if D is None:
                skipped.append(SkippedCandidate(s_e, s_w, reason))
                continue
            B, A = proxy_costs(topology, profile, D)
            evaluations += topology.total_workers + topology.n
            value, per_edge = _pair_objective(topology, B, A, s_e, s_w)
            evaluations += topology.n + 1  # order-statistic selections
            if best is None or value < best[0]:
                best = (value, s_e, s_w, D, per_edge, B, A)
    if best is None:
        raise NoFeasibleToleranceError(
            f"no tolerance pair yields an integer load for K={K} on {topology.total_workers} workers"
        )
    value, s_e, s_w, D, per_edge, B, A = best
    e, w = _selection_vectors(topology, B, A, s_e, s_w, per_edge)
    return Selection(s_e, s_w, e, w, value, D, tuple(skipped), evaluations)


def brute_force_count(topology: Topology, K: int) -> int:
    count = 0
    for s_e in range(topology.n):
        for s_w in range(topology.m_min):
            if _integer_load(topology, K, s_e, s_w)[0] is None:
                continue
            per_pair = math.comb(topology.n, topology.n - s_e)
            prod = 1
            for mi in topology.m:
                prod *= math.comb(mi, mi - s_w)
            count += per_pair * prod
    return count


def brute_force_solve(topology: Topology, profile: SystemProfile, K: int) -> Selection:
    """Enumerate every (tolerance, edge subset, worker subsets) selection.

    The objective of a concrete selection is the largest constraint lower
    bound: max over selected edges of A_i + max over its selected workers of
    B_(i,j). Used as an optimality oracle for `solve`.
    """
    profile.validate(topology)
    total = brute_force_count(topology, K)
    if total > BRUTE_FORCE_GUARD:
        raise TooLargeError(f"{total} candidate selections exceed the {BRUTE_FORCE_GUARD} guard")
    skipped: list[SkippedCandidate] = []
    evaluations = 0
    best = None
    for s_e in range(topology.n):
        for s_w in range(topology.m_min):
            D, reason = _integer_load(topology, K, s_e, s_w)
            if D is None:
                skipped.append(SkippedCandidate(s_e, s_w, reason))
                continue
            B, A = proxy_costs(topology, profile, D)
            worker_subsets = []
            worker_costs = []
            for i in range(topology.n):
                k = topology.m[i] - s_w
                subs = list(itertools.combinations(range(topology.m[i]), k))
                worker_subsets.append(subs)
                worker_costs.append(np.array([A[i] + max(B[i][j] for j in s) for s in subs]))
            for F in itertools.combinations(range(topology.n), topology.n - s_e):
                acc = worker_costs[F[0]]
                for i in F[1:]:
                    acc = np.maximum.outer(acc, worker_costs[i]).ravel()
                evaluations += acc.size
                idx = int(np.argmin(acc))
                value = float(acc[idx])
                if best is None or value < best[0]:
                    shape = tuple(len(worker_subsets[i]) for i in F)
                    multi = np.unravel_index(idx, shape)
                    picks = {i: worker_subsets[i][mi] for i, mi in zip(F, multi)}
                    best = (value, s_e, s_w, D, F, picks)
    if best is None:
        raise NoFeasibleToleranceError(
            f"no tolerance pair yields an integer load for K={K} on {topology.total_workers} workers"
        )
    value, s_e, s_w, D, F, picks = best
    e = tuple(1 if i in F else 0 for i in range(topology.n))
    w = tuple(
        tuple(1 if (i in picks and j in picks[i]) else 0 for j in range(topology.m[i]))
        for i in range(topology.n)
    )
    return Selection(s_e, s_w, e, w, value, D, tuple(skipped), evaluations)


def order_stat_coefficient(n: int, r: int) -> float:
    """f(n, r): weight of the mean-gap bound for the r-th order statistic of n variables."""
    if not 1 <= r <= n:
        raise DomainError(f"r={r} outside [1, {n}]")
    return math.sqrt((r - 1) / (n * (n - r + 1))) + math.sqrt((n - r) / (n * r))


def _gap_radical(means, variances) -> float:
    means = np.asarray(means, dtype=float)
    variances = np.asarray(variances, dtype=float)
    if means.shape != variances.shape or means.ndim != 1:
        raise ValueError("means and variances must be equal-length vectors")
    if np.any(variances < 0):
        raise ValueError("variances must be non-negative")
    n = means.size
    var_of_mean = float(np.sum(variances)) / n**2  # independent summands
    radicand = float(np.sum(variances) + np.sum((means - means.mean()) ** 2) - n * var_of_mean)
    if radicand < 0:
        if radicand >= -1e-12:
            return 0.0
        raise NumericalError(f"negative radicand {radicand} in the order-statistic bound")
    return math.sqrt(radicand)


def order_stat_gap_bound(n: int, r: int, means, variances) -> float:
    """Bound on |E[X_(r)] - u_r| where u_r is the r-th smallest mean."""
    if len(means) != n:
        raise ValueError(f"expected {n} means, got {len(means)}")
    return order_stat_coefficient(n, r) * _gap_radical(means, variances)


def theorem3_bound(selection: Selection, inputs: GapBoundInputs) -> float:
    """Bound on |E[T_tol] - objective| from per-node moments at the selected tolerance."""
    n = len(inputs.edge_means)
    edge_term = order_stat_coefficient(n, n - selection.s_e) * _gap_radical(
        inputs.edge_means, inputs.edge_variances
    )
    worker_term = 0.0
    for mrow, vrow in zip(inputs.worker_means, inputs.worker_variances):
        m_i = len(mrow)
        worker_term = max(
            worker_term,
            order_stat_coefficient(m_i, m_i - selection.s_w) * _gap_radical(mrow, vrow),
        )
    return edge_term + worker_term


def estimate_gap_inputs(
    topology: Topology,
    profile: SystemProfile,
    tolerance: Tolerance,
    D: int,
    trials: int,
    seed: int,
) -> GapBoundInputs:
    """Monte-Carlo moments of the totals entering Theorem 3, with recorded provenance."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0x713,))))
    batch = sample_hierarchical_batch(topology, profile, D, tolerance, rng, trials)
    worker_means, worker_vars = [], []
    start = 0
    for mi in topology.m:
        block = batch.worker_totals_ms[:, start : start + mi]
        worker_means.append(tuple(float(x) for x in block.mean(axis=0)))
        worker_vars.append(tuple(float(x) for x in block.var(axis=0, ddof=1)))
        start += mi
    return GapBoundInputs(
        edge_means=tuple(float(x) for x in batch.edge_totals_ms.mean(axis=0)),
        edge_variances=tuple(float(x) for x in batch.edge_totals_ms.var(axis=0, ddof=1)),
        worker_means=tuple(worker_means),
        worker_variances=tuple(worker_vars),
        trials=trials,
        seed=seed,
    )
