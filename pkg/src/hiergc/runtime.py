"""Per-iteration runtime model: samplers and homogeneous closed forms.

Model, per worker (i, j): compute time c*D plus an exponential jitter with
rate gamma; every link transmission repeats until success, the number of
transmissions being geometric on {1, 2, ...} with failure probability p. A
worker's total is edge-download + worker-download + compute + worker-upload;
an edge's total adds its upload to the (m_i - s_w)-th smallest worker total;
the system total is the (n - s_e)-th smallest edge total. All draws are
independent (no correlation between the per-worker copies of the edge
download).

Vectorised batch samplers draw whole (trials x nodes) arrays in a fixed order,
so results are reproducible for a fixed generator regardless of how callers
parallelise across generators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .profiles import EdgeProfile, SystemProfile, WorkerProfile
from .topology import Tolerance, Topology


def geometric_transmissions(rng, p, size=None):
    """Number of transmissions until success: support {1, 2, ...}, failure prob p."""
    return rng.geometric(1.0 - np.asarray(p), size=size)


def compute_jitter(rng, gamma, size=None):
    scale = np.where(np.isinf(gamma), 0.0, 1.0 / np.asarray(gamma))
    return rng.exponential(scale, size=size)


@dataclass(frozen=True)
class WorkerTotalSample:
    edge_download_ms: float
    download_ms: float
    compute_ms: float
    upload_ms: float

    @property
    def total_ms(self) -> float:
        return self.edge_download_ms + self.download_ms + self.compute_ms + self.upload_ms


def sample_worker_total(profile: WorkerProfile, edge: EdgeProfile, D: int, rng) -> WorkerTotalSample:
    """One draw of a worker's iteration time, component by component."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    edge_dl = float(geometric_transmissions(rng, edge.p)) * edge.tau_ms
    dl = float(geometric_transmissions(rng, profile.p)) * profile.tau_ms
    cmp_ms = profile.c_ms * D + float(compute_jitter(rng, profile.gamma_per_ms))
    ul = float(geometric_transmissions(rng, profile.p)) * profile.tau_ms
    return WorkerTotalSample(edge_dl, dl, cmp_ms, ul)


def expected_worker_total(profile: WorkerProfile, edge: EdgeProfile, D: int) -> float:
    jitter = 0.0 if math.isinf(profile.gamma_per_ms) else 1.0 / profile.gamma_per_ms
    return (
        edge.tau_ms / (1.0 - edge.p)
        + 2.0 * profile.tau_ms / (1.0 - profile.p)
        + profile.c_ms * D
        + jitter
    )


@dataclass(frozen=True)
class IterationSample:
    """Full timing trace of one simulated iteration."""

    worker_samples: tuple[tuple[WorkerTotalSample, ...], ...]
    edge_upload_ms: tuple[float, ...]
    worker_totals_ms: tuple[tuple[float, ...], ...]
    edge_totals_ms: tuple[float, ...]
    total_ms: float
    fastest_edges: tuple[int, ...]
    fastest_workers: tuple[tuple[int, ...], ...]

    def to_dict(self) -> dict:
        return {
            "total_ms": self.total_ms,
            "edge_totals_ms": list(self.edge_totals_ms),
            "edge_upload_ms": list(self.edge_upload_ms),
            "worker_totals_ms": [list(r) for r in self.worker_totals_ms],
            "fastest_edges": list(self.fastest_edges),
            "fastest_workers": [list(r) for r in self.fastest_workers],
        }


def _kth_smallest(values, k):
    """k-th smallest (1-based); ties resolved toward lower index for the id sets."""
    order = np.argsort(values, kind="stable")
    return float(values[order[k - 1]]), [int(x) + 1 for x in order[:k]]


def sample_iteration(
    topology: Topology,
    profile: SystemProfile,
    tolerance: Tolerance,
    D: int,
    rng,
) -> IterationSample:
    """One iteration of the hierarchical system under tolerance (s_e, s_w)."""
    tolerance.validate(topology)
    profile.validate(topology)
    samples = []
    totals = []
    for i in range(topology.n):
        row = [
            sample_worker_total(profile.workers[i][j], profile.edges[i], D, rng)
            for j in range(topology.m[i])
        ]
        samples.append(tuple(row))
        totals.append(tuple(s.total_ms for s in row))
    uploads = tuple(
        float(geometric_transmissions(rng, profile.edges[i].p)) * profile.edges[i].tau_ms
        for i in range(topology.n)
    )
    edge_totals = []
    fastest_workers = []
    for i in range(topology.n):
        k = topology.m[i] - tolerance.s_w
        stat, fastest = _kth_smallest(np.array(totals[i]), k)
        edge_totals.append(uploads[i] + stat)
        fastest_workers.append(tuple(fastest))
    total, fastest_edges = _kth_smallest(np.array(edge_totals), topology.n - tolerance.s_e)
    return IterationSample(
        tuple(samples),
        uploads,
        tuple(totals),
        tuple(edge_totals),
        total,
        tuple(fastest_edges),
        tuple(fastest_workers),
    )


# --- vectorised batch sampling -------------------------------------------------

@dataclass(frozen=True)
class _FlatArrays:
    """Per-worker parameter vectors in global worker order (edge-major)."""

    edge_of: np.ndarray
    c: np.ndarray
    gamma: np.ndarray
    tau_w: np.ndarray
    p_w: np.ndarray
    tau_e: np.ndarray
    p_e: np.ndarray
    slices: tuple[slice, ...]


def _flatten(topology: Topology, profile: SystemProfile) -> _FlatArrays:
    profile.validate(topology)
    edge_of, c, gamma, tau_w, p_w = [], [], [], [], []
    slices = []
    start = 0
    for i in range(topology.n):
        for w in profile.workers[i]:
            edge_of.append(i)
            c.append(w.c_ms)
            gamma.append(w.gamma_per_ms)
            tau_w.append(w.tau_ms)
            p_w.append(w.p)
        slices.append(slice(start, start + topology.m[i]))
        start += topology.m[i]
    return _FlatArrays(
        np.array(edge_of),
        np.array(c),
        np.array(gamma),
        np.array(tau_w),
        np.array(p_w),
        np.array([e.tau_ms for e in profile.edges]),
        np.array([e.p for e in profile.edges]),
        tuple(slices),
    )


@dataclass(frozen=True)
class BatchComponents:
    edge_download_ms: np.ndarray
    download_ms: np.ndarray
    compute_ms: np.ndarray
    upload_ms: np.ndarray

    @property
    def totals_ms(self) -> np.ndarray:
        return self.edge_download_ms + self.download_ms + self.compute_ms + self.upload_ms


def sample_worker_components_batch(
    topology: Topology, profile: SystemProfile, D: int, rng, trials: int
) -> BatchComponents:
    """(trials x total_workers) component arrays, workers in edge-major order."""
    flat = _flatten(topology, profile)
    shape = (trials, topology.total_workers)
    edge_dl = geometric_transmissions(rng, flat.p_e[flat.edge_of], shape) * flat.tau_e[flat.edge_of]
    dl = geometric_transmissions(rng, flat.p_w, shape) * flat.tau_w
    cmp_ms = flat.c * D + compute_jitter(rng, flat.gamma, shape)
    ul = geometric_transmissions(rng, flat.p_w, shape) * flat.tau_w
    return BatchComponents(edge_dl, dl, cmp_ms, ul)


@dataclass(frozen=True)
class BatchSample:
    worker_totals_ms: np.ndarray  # (trials, total_workers)
    edge_totals_ms: np.ndarray    # (trials, n)
    totals_ms: np.ndarray         # (trials,)


def sample_hierarchical_batch(
    topology: Topology,
    profile: SystemProfile,
    D: int,
    tolerance: Tolerance,
    rng,
    trials: int,
) -> BatchSample:
    """Vectorised trials of the hierarchical wait rule for a tolerance pair."""
    tolerance.validate(topology)
    flat = _flatten(topology, profile)
    comp = sample_worker_components_batch(topology, profile, D, rng, trials)
    worker_totals = comp.totals_ms
    edge_ul = geometric_transmissions(rng, flat.p_e, (trials, topology.n)) * flat.tau_e
    edge_totals = np.empty((trials, topology.n))
    for i in range(topology.n):
        k = topology.m[i] - tolerance.s_w
        block = worker_totals[:, flat.slices[i]]
        stat = np.partition(block, k - 1, axis=1)[:, k - 1]
        edge_totals[:, i] = edge_ul[:, i] + stat
    r = topology.n - tolerance.s_e
    totals = np.partition(edge_totals, r - 1, axis=1)[:, r - 1]
    return BatchSample(worker_totals, edge_totals, totals)


def sample_flat_batch(
    topology: Topology,
    profile: SystemProfile,
    D: int,
    wait_workers: int,
    rng,
    trials: int,
) -> np.ndarray:
    """Single-layer wait rule: every worker's result is relayed through its edge
    link as an independent transmission; the master waits for the fastest
    `wait_workers` worker paths. Returns (trials,) totals."""
    W = topology.total_workers
    if not 1 <= wait_workers <= W:
        raise ValueError(f"wait_workers={wait_workers} outside [1, {W}]")
    flat = _flatten(topology, profile)
    comp = sample_worker_components_batch(topology, profile, D, rng, trials)
    relay = (
        geometric_transmissions(rng, flat.p_e[flat.edge_of], (trials, W))
        * flat.tau_e[flat.edge_of]
    )
    paths = comp.totals_ms + relay
    return np.partition(paths, wait_workers - 1, axis=1)[:, wait_workers - 1]


# --- homogeneous closed forms ---------------------------------------------------

@dataclass(frozen=True)
class HomogeneousParams:
    """Fully homogeneous system: n edges, m workers each, K sub-datasets."""

    c: float
    gamma: float
    tau1: float  # worker link (ms)
    tau2: float  # edge link (ms)
    p1: float
    p2: float
    n: int
    m: int
    K: int

    def __post_init__(self):
        WorkerProfile(self.c, self.gamma, self.tau1, self.p1)
        EdgeProfile(self.tau2, self.p2)
        if self.n < 1 or self.m < 1 or self.K < 1:
            raise ValueError("n, m, K must be positive")

    def system(self) -> tuple[Topology, SystemProfile]:
        topo = Topology(self.n, [self.m] * self.n)
        prof = SystemProfile.uniform(
            topo,
            WorkerProfile(self.c, self.gamma, self.tau1, self.p1),
            EdgeProfile(self.tau2, self.p2),
        )
        return topo, prof


def _check_tolerance(params: HomogeneousParams, s_e: int, s_w: int) -> None:
    if not 0 <= s_e < params.n:
        raise DomainError(f"s_e={s_e} outside [0, {params.n})")
    if not 0 <= s_w < params.m:
        raise DomainError(f"s_w={s_w} outside [0, {params.m})")


def case1_expected(params: HomogeneousParams, s_e: int, s_w: int) -> float:
    """Computation-dominated approximation of E[T_tol] (deterministic links)."""
    _check_tolerance(params, s_e, s_w)
    load = params.c * params.K * (s_e + 1) * (s_w + 1) / (params.n * params.m)
    jitter = 0.0 if math.isinf(params.gamma) else (
        math.log((params.n - s_e) * (params.m - s_w)) / params.gamma
    )
    return load + 2 * params.tau1 + 2 * params.tau2 + jitter


def case1_optimal(params: HomogeneousParams) -> tuple[int, int, float]:
    """Best endpoint of the case-1 expectation; ties go to smaller (s_e, s_w)."""
    candidates = []
    for s_e in sorted({0, params.n - 1}):
        for s_w in sorted({0, params.m - 1}):
            candidates.append((s_e, s_w))
    best = None
    for s_e, s_w in candidates:  # already in lexicographic order
        value = case1_expected(params, s_e, s_w)
        if best is None or value < best[2]:
            best = (s_e, s_w, value)
    return best


def case2_expected(params: HomogeneousParams, s_e: int) -> float:
    """Communication-dominated approximation of E[T_tol], with s_w = 0."""
    _check_tolerance(params, s_e, 0)
    if params.p2 == 0:
        raise DomainError("case 2 requires p2 > 0 (ln p2 appears in the approximation)")
    load = params.c * params.K * (s_e + 1) / (params.n * params.m)
    tail = -(2 * params.tau2 / math.log(params.p2)) * math.log(params.n - s_e)
    return load + 2 * params.tau1 + params.tau2 + tail


def case2_optimal(params: HomogeneousParams) -> tuple[int, int, float]:
    """Endpoint rule for case 2: keep s_w = 0, pick s_e in {0, n-1}."""
    if params.p2 == 0:
        raise DomainError("case 2 requires p2 > 0 (ln p2 appears in the approximation)")
    ck = params.c * params.K
    threshold = ck / (params.n * params.m) - (
        2 * params.tau2 / math.log(params.p2)
    ) * math.log(params.n)
    s_e = 0 if ck / params.m >= threshold else params.n - 1
    return (s_e, 0, case2_expected(params, s_e))
