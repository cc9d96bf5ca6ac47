"""Two-layer gradient coding: data allocation, encoding matrices, decode pipeline.

The construction follows the cyclic-window allocation: edge node i holds a
window of n_i consecutive sub-dataset indices (mod K), and worker (i, j) holds
a window of D consecutive positions (stride D, mod n_i) inside its edge's
window. Coefficients are built so that

  * any n - s_e rows of the first-layer matrix B combine to the all-ones row
    over the K sub-datasets (master-side decodability), and
  * any m_i - s_w rows of each second-layer matrix Dbar^i combine to the
    all-ones row over edge i's n_i sub-datasets (edge-side decodability).

Coefficients are found by collapsing columns into "cells" (maximal groups of
columns held by the same set of rows), choosing a low-dimensional subspace V
containing the all-ones vector, and drawing each row as a random element of V
that vanishes off the row's cells. Independent row coefficients on the supports
cannot satisfy the span conditions (the subset equations force equalities
across entries), hence the subspace step. Every build is verified and reseeded
up to RESEED_ATTEMPTS times before giving up.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConstructionError,
    DecodeSingularError,
    DegenerateError,
    DivisibilityError,
    InfeasibleToleranceError,
    MissingPartialError,
)
from .topology import Tolerance, Topology
from .tradeoff import check_feasibility

DECODE_RESIDUAL_TOL = 1e-8
RESEED_ATTEMPTS = 8
EXHAUSTIVE_SPAN_LIMIT = 10_000
SAMPLED_SPAN_CHECKS = 1_000


@dataclass(frozen=True)
class AllocationPlan:
    """Who holds which sub-datasets. All indices 1-based."""

    topology: Topology
    tolerance: Tolerance
    K: int
    n_i: tuple[int, ...]
    D: int
    edge_sets: tuple[tuple[int, ...], ...]
    worker_sets: tuple[tuple[tuple[int, ...], ...], ...]


@dataclass(frozen=True)
class CodingScheme:
    """An allocation plus its encoding matrices.

    B is n x K; Dbar[i-1] is m_i x n_i (columns follow edge i's ordered set);
    Dmat[i-1] is m_i x K with Dbar placed on edge i's columns and zeros
    elsewhere. Matrices are immutable; rebuilding from (plan, seed) is
    bit-identical.
    """

    plan: AllocationPlan
    B: np.ndarray
    Dbar: tuple[np.ndarray, ...]
    Dmat: tuple[np.ndarray, ...]
    seed: int

    def __post_init__(self):
        self.B.setflags(write=False)
        for mat in itertools.chain(self.Dbar, self.Dmat):
            mat.setflags(write=False)


@dataclass(frozen=True)
class PatternResult:
    edges: tuple[int, ...]
    workers: tuple[tuple[int, ...], ...]
    residual: float
    ok: bool


@dataclass(frozen=True)
class VerificationReport:
    mode: str
    total: int
    results: tuple[PatternResult, ...] = field(repr=False)

    @property
    def passed(self) -> int:
        return sum(r.ok for r in self.results)

    @property
    def failed(self) -> tuple[PatternResult, ...]:
        return tuple(r for r in self.results if not r.ok)

    @property
    def worst_residual(self) -> float:
        return max((r.residual for r in self.results), default=0.0)

    @property
    def all_passed(self) -> bool:
        return self.passed == len(self.results)

    def summary(self) -> str:
        return f"{self.passed}/{len(self.results)} patterns pass (worst residual {self.worst_residual:.3e})"


def _suggest_K(topology: Topology, tolerance: Tolerance, K: int) -> int:
    M = topology.total_workers
    for cand in range(K, K + M + 1):
        total = cand * (tolerance.s_e + 1)
        if any(total * mi % M for mi in topology.m):
            continue
        if total * (tolerance.s_w + 1) % M:
            continue
        return cand
    return K + M  # unreachable: multiples of M always divide


def allocate(topology: Topology, tolerance: Tolerance, K: int) -> AllocationPlan:
    """Cyclic-window data allocation achieving the optimal load D/K with equality."""
    tolerance.validate(topology)
    if K < 1:
        raise ValueError(f"K must be positive, got {K}")
    feas = check_feasibility(topology, tolerance)
    if not feas:
        raise InfeasibleToleranceError(feas.detail)
    M = topology.total_workers
    total = K * (tolerance.s_e + 1)
    for i, mi in enumerate(topology.m, 1):
        if total * mi % M:
            raise DivisibilityError(
                f"edge {i}: n_{i} = K(s_e+1)m_{i}/sum(m) = {total * mi}/{M} is not an integer; "
                f"smallest working K >= {K} is {_suggest_K(topology, tolerance, K)}",
                edge=i,
                suggested_K=_suggest_K(topology, tolerance, K),
            )
    n_i = tuple(total * mi // M for mi in topology.m)
    if total * (tolerance.s_w + 1) % M:
        raise DivisibilityError(
            f"per-worker load D = K(s_e+1)(s_w+1)/sum(m) = {total * (tolerance.s_w + 1)}/{M} "
            f"is not an integer; smallest working K >= {K} is {_suggest_K(topology, tolerance, K)}",
            edge=None,
            suggested_K=_suggest_K(topology, tolerance, K),
        )
    D = total * (tolerance.s_w + 1) // M
    for i, ni in enumerate(n_i, 1):
        if ni > K:
            raise DegenerateError(
                f"edge {i} would hold n_{i}={ni} > K={K} sub-datasets (duplicate holdings rejected)"
            )

    offsets = [0]
    for ni in n_i[:-1]:
        offsets.append(offsets[-1] + ni)
    edge_sets = tuple(
        tuple((offsets[i] + t) % K + 1 for t in range(n_i[i])) for i in range(topology.n)
    )
    worker_sets = []
    for i in range(topology.n):
        ni = n_i[i]
        rows = tuple(
            tuple(edge_sets[i][(j * D + t) % ni] for t in range(D))
            for j in range(topology.m[i])
        )
        worker_sets.append(rows)
    return AllocationPlan(topology, tolerance, K, n_i, D, edge_sets, tuple(worker_sets))


def _bounded_uniform(rng, shape):
    # magnitudes in [0.25, 1.75] keep the decode systems well conditioned
    return rng.uniform(0.25, 1.75, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def _span_rows(windows: list[list[int]], n_cols: int, survivors: int, rng) -> np.ndarray | None:
    """Rows supported on `windows` such that any `survivors` rows span the all-ones row.

    Columns with identical cover sets are collapsed into cells; rows live in a
    subspace V spanned by the all-ones vector, one localized vector per row
    whose cell count is too small for a generic subspace, and generic fills.
    Returns None when a draw degenerates (caller reseeds).
    """
    n_rows = len(windows)
    member = np.zeros((n_rows, n_cols), dtype=bool)
    for r, win in enumerate(windows):
        member[r, win] = True
    cover_of_col = [tuple(np.nonzero(member[:, k])[0]) for k in range(n_cols)]
    cells: list[tuple[int, ...]] = []
    cell_index: dict[tuple[int, ...], int] = {}
    for cov in cover_of_col:
        if cov not in cell_index:
            cell_index[cov] = len(cells)
            cells.append(cov)
    P = len(cells)
    col_cell = np.array([cell_index[cov] for cov in cover_of_col])
    arcs = [np.array([c for c, cov in enumerate(cells) if r in cov]) for r in range(n_rows)]

    dim = min(survivors, P)
    shorts = [r for r in range(n_rows) if len(arcs[r]) < P - survivors + 1]
    basis = [np.ones(P)]
    for r in shorts:
        z = np.zeros(P)
        z[arcs[r]] = _bounded_uniform(rng, len(arcs[r]))
        basis.append(z)
    while len(basis) < dim:
        basis.append(_bounded_uniform(rng, P))
    V = np.column_stack(basis)

    beta = np.zeros((n_rows, P))
    for r in range(n_rows):
        off = np.setdiff1d(np.arange(P), arcs[r])
        if off.size:
            _, sv, vt = np.linalg.svd(V[off, :], full_matrices=True)
            rank = int(np.sum(sv > 1e-10 * max(sv[0], 1.0))) if sv.size else 0
            null = vt[rank:].T
        else:
            null = np.eye(V.shape[1])
        if null.shape[1] == 0:
            return None
        row = V @ (null @ _bounded_uniform(rng, null.shape[1]))
        row[off] = 0.0
        peak = np.max(np.abs(row[arcs[r]]))
        if peak < 1e-9 or np.min(np.abs(row[arcs[r]])) < 1e-9 * peak:
            return None  # accidental zero on the support
        beta[r] = row / peak

    rows = beta[:, col_cell]
    rows[~member] = 0.0
    return rows


def _ones_combination(rows: np.ndarray):
    """Least-squares decode weights c with c @ rows ~= 1; returns (c, inf-norm residual)."""
    ones = np.ones(rows.shape[1])
    c, *_ = np.linalg.lstsq(rows.T, ones, rcond=None)
    residual = float(np.max(np.abs(c @ rows - ones)))
    return c, residual


def _spans_ones(rows: np.ndarray) -> bool:
    return _ones_combination(rows)[1] <= DECODE_RESIDUAL_TOL


def _subset_iter(total: int, size: int, exhaustive: bool, checks: int, rng):
    if exhaustive:
        yield from itertools.combinations(range(total), size)
    else:
        for _ in range(checks):
            yield tuple(sorted(rng.choice(total, size=size, replace=False)))


def _verify_spans(mat: np.ndarray, survivors: int, exhaustive: bool, rng) -> bool:
    for subset in _subset_iter(mat.shape[0], survivors, exhaustive, SAMPLED_SPAN_CHECKS, rng):
        if not _spans_ones(mat[list(subset)]):
            return False
    return True


def build_scheme(plan: AllocationPlan, seed: int) -> CodingScheme:
    """Construct and verify the encoding matrices for a plan, deterministically."""
    topo, tol = plan.topology, plan.tolerance
    f_e = topo.n - tol.s_e
    span_checks = math.comb(topo.n, f_e) + sum(
        math.comb(mi, mi - tol.s_w) for mi in topo.m
    )
    exhaustive = span_checks <= EXHAUSTIVE_SPAN_LIMIT

    for attempt in range(RESEED_ATTEMPTS):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(attempt,))))
        edge_windows = [[k - 1 for k in s] for s in plan.edge_sets]
        B = _span_rows(edge_windows, plan.K, f_e, rng)
        if B is None or not _verify_spans(B, f_e, exhaustive, rng):
            continue
        Dbar: list[np.ndarray] = []
        ok = True
        for i in range(topo.n):
            ni, mi = plan.n_i[i], topo.m[i]
            pos_of = {k: t for t, k in enumerate(plan.edge_sets[i])}
            windows = [[pos_of[k] for k in plan.worker_sets[i][j]] for j in range(mi)]
            rows = _span_rows(windows, ni, mi - tol.s_w, rng)
            if rows is None or not _verify_spans(rows, mi - tol.s_w, exhaustive, rng):
                ok = False
                break
            Dbar.append(rows)
        if not ok:
            continue
        Dmat = []
        for i in range(topo.n):
            full = np.zeros((topo.m[i], plan.K))
            cols = [k - 1 for k in plan.edge_sets[i]]
            full[:, cols] = Dbar[i]
            Dmat.append(full)
        return CodingScheme(plan, B, tuple(Dbar), tuple(Dmat), seed)

    raise ConstructionError(
        f"span conditions failed after {RESEED_ATTEMPTS} reseeds (seed={seed}); "
        "the allocation support likely cannot be decoded"
    )


def _as_vector(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    return np.atleast_1d(arr)


def worker_encode(scheme: CodingScheme, i: int, j: int, partials) -> np.ndarray:
    """Linear combination sent by worker (i, j): sum of Dmat^i[j,k] * B[i,k] * g_k."""
    assigned = scheme.plan.worker_sets[i - 1][j - 1]
    missing = [k for k in assigned if k not in partials]
    if missing:
        raise MissingPartialError(
            f"worker ({i},{j}) missing partial gradients for sub-datasets {missing}",
            missing=missing,
        )
    out = None
    for k in assigned:
        term = scheme.Dmat[i - 1][j - 1, k - 1] * scheme.B[i - 1, k - 1] * _as_vector(partials[k])
        out = term if out is None else out + term
    return out


def _decode_weights(rows: np.ndarray, what: str) -> np.ndarray:
    c, residual = _ones_combination(rows)
    if residual > DECODE_RESIDUAL_TOL:
        raise DecodeSingularError(
            f"{what}: no combination reproduces the all-ones row "
            f"(residual {residual:.3e} > {DECODE_RESIDUAL_TOL})",
            residual=residual,
        )
    return c


def edge_decode(scheme: CodingScheme, i: int, received, F_i) -> np.ndarray:
    """Edge i combines the fastest workers' results into G_i = sum_{k in D^i} B[i,k] g_k."""
    topo, tol = scheme.plan.topology, scheme.plan.tolerance
    F_i = sorted(F_i)
    need = topo.m[i - 1] - tol.s_w
    if len(F_i) != need:
        raise ValueError(f"edge {i}: expected {need} fastest workers, got {len(F_i)}")
    absent = [j for j in F_i if j not in received]
    if absent:
        raise ValueError(f"edge {i}: results missing for workers {absent}")
    rows = scheme.Dbar[i - 1][[j - 1 for j in F_i]]
    c = _decode_weights(rows, f"edge {i} (condition 2)")
    out = None
    for cj, j in zip(c, F_i):
        term = cj * _as_vector(received[j])
        out = term if out is None else out + term
    return out


def master_decode(scheme: CodingScheme, received, F) -> np.ndarray:
    """Master combines the fastest edges' results into the full gradient sum."""
    topo, tol = scheme.plan.topology, scheme.plan.tolerance
    F = sorted(F)
    need = topo.n - tol.s_e
    if len(F) != need:
        raise ValueError(f"expected {need} fastest edges, got {len(F)}")
    absent = [i for i in F if i not in received]
    if absent:
        raise ValueError(f"results missing for edges {absent}")
    rows = scheme.B[[i - 1 for i in F]]
    a = _decode_weights(rows, "master (condition 1)")
    out = None
    for ai, i in zip(a, F):
        term = ai * _as_vector(received[i])
        out = term if out is None else out + term
    return out


def decode_pattern(scheme: CodingScheme, partials, edges, workers) -> np.ndarray:
    """Run encode -> edge decode -> master decode for one straggler pattern.

    `edges` is the surviving edge set; `workers[i-1]` the surviving workers of
    edge i (ignored for non-surviving edges).
    """
    per_edge = {}
    for i in edges:
        received = {
            j: worker_encode(scheme, i, j, partials) for j in workers[i - 1]
        }
        per_edge[i] = edge_decode(scheme, i, received, workers[i - 1])
    return master_decode(scheme, per_edge, edges)


def pattern_count(plan: AllocationPlan) -> int:
    topo, tol = plan.topology, plan.tolerance
    count = math.comb(topo.n, topo.n - tol.s_e)
    for mi in topo.m:
        count *= math.comb(mi, mi - tol.s_w)
    return count


def verify_decodability(
    scheme: CodingScheme,
    mode: str = "exhaustive",
    sample_count: int = 1000,
    sample_seed: int = 0,
    gradient_dim: int = 3,
) -> VerificationReport:
    """Check exact recovery over tolerated straggler patterns.

    Exhaustive mode walks every (edge subset) x (per-edge worker subset)
    combination; sampled mode draws `sample_count` patterns from a generator
    seeded with `sample_seed`. Failures become report entries, not exceptions.
    """
    topo, tol = scheme.plan.topology, scheme.plan.tolerance
    f_e = topo.n - tol.s_e
    grad_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(scheme.seed, spawn_key=(0xBEEF, sample_seed)))
    )

    def run_one(edges, workers):
        partials = {
            k: grad_rng.normal(size=gradient_dim) for k in range(1, scheme.plan.K + 1)
        }
        expected = sum(partials.values())
        try:
            decoded = decode_pattern(scheme, partials, edges, workers)
            residual = float(
                np.linalg.norm(decoded - expected) / max(np.linalg.norm(expected), 1e-300)
            )
            ok = residual <= 1e-9
        except DecodeSingularError as exc:
            residual, ok = float(exc.residual or np.inf), False
        return PatternResult(tuple(edges), tuple(tuple(w) for w in workers), residual, ok)

    results = []
    if mode == "exhaustive":
        worker_choices = [
            list(itertools.combinations(range(1, mi + 1), mi - tol.s_w)) for mi in topo.m
        ]
        for edges in itertools.combinations(range(1, topo.n + 1), f_e):
            for workers in itertools.product(*worker_choices):
                results.append(run_one(list(edges), list(workers)))
    elif mode == "sampled":
        pat_rng = np.random.default_rng(sample_seed)
        for _ in range(sample_count):
            edges = sorted(pat_rng.choice(topo.n, size=f_e, replace=False) + 1)
            workers = [
                tuple(sorted(pat_rng.choice(mi, size=mi - tol.s_w, replace=False) + 1))
                for mi in topo.m
            ]
            results.append(run_one(edges, workers))
    else:
        raise ValueError(f"unknown verification mode {mode!r}")
    return VerificationReport(mode, len(results), tuple(results))


def scheme_to_json(scheme: CodingScheme) -> str:
    """Serialize a scheme; plain JSON floats round-trip bit-exactly in Python."""
    plan = scheme.plan
    doc = {
        "topology": {"n": plan.topology.n, "m": list(plan.topology.m)},
        "tolerance": {"s_e": plan.tolerance.s_e, "s_w": plan.tolerance.s_w},
        "K": plan.K,
        "seed": scheme.seed,
        "layout": "row-major",
        "B": scheme.B.tolist(),
        "Dbar": [m.tolist() for m in scheme.Dbar],
        "Dmat": [m.tolist() for m in scheme.Dmat],
    }
    return json.dumps(doc, sort_keys=True, indent=2)


def scheme_from_json(text: str) -> CodingScheme:
    doc = json.loads(text)
    if doc.get("layout") != "row-major":
        raise ValueError(f"unsupported matrix layout {doc.get('layout')!r}")
    topo = Topology(doc["topology"]["n"], doc["topology"]["m"])
    tol = Tolerance(doc["tolerance"]["s_e"], doc["tolerance"]["s_w"])
    plan = allocate(topo, tol, doc["K"])
    B = np.array(doc["B"], dtype=float)
    Dbar = tuple(np.array(m, dtype=float) for m in doc["Dbar"])
    Dmat = tuple(np.array(m, dtype=float) for m in doc["Dmat"])
    if B.shape != (topo.n, plan.K):
        raise ValueError(f"B shape {B.shape} does not match ({topo.n}, {plan.K})")
    for i, (mat, mi, ni) in enumerate(zip(Dbar, topo.m, plan.n_i), 1):
        if mat.shape != (mi, ni):
            raise ValueError(f"Dbar^{i} shape {mat.shape} does not match ({mi}, {ni})")
    return CodingScheme(plan, B, Dbar, Dmat, doc["seed"])
