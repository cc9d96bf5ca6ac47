"""Comparison schemes as interchangeable strategy objects.

Each strategy bundles (a) the per-worker load D, (b) the edge and master wait
rules, (c) the master's per-iteration receive count, and (d) a decode
procedure over partial gradients. Hierarchical coded variants reuse the
two-layer machinery (CGC-W is the s_e=0 special case, CGC-E the s_w=0 one);
Standard GC runs the same code on a flattened one-edge topology where every
worker result is relayed through its edge link; Uncoded and Greedy sum plain
partial results, Greedy dropping whatever straggled.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import coding, jncss
from .errors import DivisibilityError, UnknownKindError
from .profiles import SystemProfile
from .runtime import sample_flat_batch, sample_hierarchical_batch
from .topology import Tolerance, Topology

KINDS = ("uncoded", "greedy", "cgc-w", "cgc-e", "standard-gc", "hgc", "hgc-jncss")
DISPLAY = {
    "uncoded": "Uncoded",
    "greedy": "Greedy",
    "cgc-w": "CGC-W",
    "cgc-e": "CGC-E",
    "standard-gc": "Standard GC",
    "hgc": "HGC",
    "hgc-jncss": "HGC-JNCSS",
}
FULL_GRADIENT_KINDS = ("uncoded", "cgc-w", "cgc-e", "standard-gc", "hgc", "hgc-jncss")


@dataclass(frozen=True)
class SurvivorPattern:
    """Surviving edges and, per surviving edge, surviving workers (1-based)."""

    edges: tuple[int, ...]
    workers: tuple[tuple[int, ...], ...]  # indexed by edge-1; ignored for lost edges


def _even_split(topology: Topology, K: int) -> int:
    M = topology.total_workers
    if K % M:
        raise DivisibilityError(
            f"uncoded split needs K divisible by the worker count: K={K}, workers={M}",
            suggested_K=((K + M - 1) // M) * M,
        )
    return K // M


def _worker_offsets(topology: Topology) -> list[int]:
    offs = [0]
    for mi in topology.m:
        offs.append(offs[-1] + mi)
    return offs


@dataclass(frozen=True)
class ExecutableScheme:
    kind: str
    topology: Topology
    K: int
    D: int
    wait: Tolerance            # edge/master wait rule, (0, 0) means wait for all
    flat_tolerance: int | None  # standard-gc only: tolerated worker stragglers s
    master_comm_load: int
    seed: int
    selection: jncss.Selection | None = None  # hgc-jncss provenance

    @property
    def display_name(self) -> str:
        return DISPLAY[self.kind]

    @property
    def is_coded(self) -> bool:
        return self.kind in ("cgc-w", "cgc-e", "standard-gc", "hgc", "hgc-jncss")

    @cached_property
    def coding_scheme(self) -> coding.CodingScheme | None:
        """Encoding matrices, built on first use (timing paths never need them)."""
        if not self.is_coded:
            return None
        if self.kind == "standard-gc":
            flat = Topology(1, [self.topology.total_workers])
            plan = coding.allocate(flat, Tolerance(0, self.flat_tolerance), self.K)
        else:
            plan = coding.allocate(self.topology, self.wait, self.K)
        return coding.build_scheme(plan, self.seed)

    def worker_datasets(self, i: int, j: int) -> tuple[int, ...]:
        """Sub-dataset indices computed by worker (i, j)."""
        if self.kind in ("uncoded", "greedy"):
            g = _worker_offsets(self.topology)[i - 1] + j  # global worker index, 1-based
            return tuple(range((g - 1) * self.D + 1, g * self.D + 1))
        if self.kind == "standard-gc":
            g = _worker_offsets(self.topology)[i - 1] + j
            return self.coding_scheme.plan.worker_sets[0][g - 1]
        return self.coding_scheme.plan.worker_sets[i - 1][j - 1]

    # --- decode -----------------------------------------------------------

    def _check_pattern(self, pattern: SurvivorPattern) -> None:
        topo = self.topology
        if self.kind == "standard-gc":
            lost = self.topology.total_workers - sum(
                len(pattern.workers[i - 1]) for i in pattern.edges
            )
            if lost > self.flat_tolerance:
                raise ValueError(
                    f"{self.display_name} tolerates {self.flat_tolerance} worker stragglers, pattern loses {lost}"
                )
            return
        if len(pattern.edges) < topo.n - self.wait.s_e:
            raise ValueError(
                f"{self.display_name} needs {topo.n - self.wait.s_e} surviving edges, got {len(pattern.edges)}"
            )
        for i in pattern.edges:
            need = topo.m[i - 1] - self.wait.s_w
            if len(pattern.workers[i - 1]) < need:
                raise ValueError(
                    f"{self.display_name} needs {need} surviving workers at edge {i}, "
                    f"got {len(pattern.workers[i - 1])}"
                )

    def decode(self, partials, pattern: SurvivorPattern) -> np.ndarray:
        """Master-side result for one iteration under a straggler pattern.

        `partials` maps sub-dataset index -> gradient vector. For Greedy the
        result is a lossy partial sum; every other kind reconstructs the exact
        full-gradient sum for any tolerated pattern.
        """
        self._check_pattern(pattern)
        if self.kind in ("uncoded", "greedy"):
            total = None
            for i in pattern.edges:
                for j in pattern.workers[i - 1]:
                    for k in self.worker_datasets(i, j):
                        term = np.atleast_1d(np.asarray(partials[k], dtype=float))
                        total = term.copy() if total is None else total + term
            return total
        if self.kind == "standard-gc":
            offs = _worker_offsets(self.topology)
            survivors = sorted(
                offs[i - 1] + j for i in pattern.edges for j in pattern.workers[i - 1]
            )
            keep = survivors[: self.topology.total_workers - self.flat_tolerance]
            scheme = self.coding_scheme
            received = {g: coding.worker_encode(scheme, 1, g, partials) for g in keep}
            aggregated = coding.edge_decode(scheme, 1, received, keep)
            return coding.master_decode(scheme, {1: aggregated}, [1])
        scheme = self.coding_scheme
        edges = sorted(pattern.edges)[: self.topology.n - self.wait.s_e]
        workers = [
            tuple(sorted(pattern.workers[i - 1])[: self.topology.m[i - 1] - self.wait.s_w])
            for i in range(1, self.topology.n + 1)
        ]
        return coding.decode_pattern(scheme, partials, edges, workers)

    # --- timing -----------------------------------------------------------

    def sample_totals(self, profile: SystemProfile, rng, trials: int) -> np.ndarray:
        """(trials,) iteration times under this scheme's wait rule."""
        if self.kind == "standard-gc":
            wait = self.topology.total_workers - self.flat_tolerance
            return sample_flat_batch(self.topology, profile, self.D, wait, rng, trials)
        return sample_hierarchical_batch(
            self.topology, profile, self.D, self.wait, rng, trials
        ).totals_ms

    def describe(self) -> dict:
        out = {
            "kind": self.kind,
            "name": self.display_name,
            "D": self.D,
            "K": self.K,
            "master_comm_load": self.master_comm_load,
        }
        if self.kind == "standard-gc":
            out["s"] = self.flat_tolerance
        else:
            out["s_e"], out["s_w"] = self.wait.s_e, self.wait.s_w
        return out


def standard_gc_tolerance(topology: Topology, tolerance: Tolerance) -> int:
    """Worker-straggler count a flat scheme needs for the same protection level."""
    tolerance.validate(topology)
    return tolerance.s_e * topology.m_min + tolerance.s_w * (topology.n - tolerance.s_e)


def build(
    kind: str,
    topology: Topology,
    profile: SystemProfile | None,
    K: int,
    tolerance: Tolerance | None = None,
    seed: int = 0,
) -> ExecutableScheme:
    """Assemble a strategy object; see KINDS for the recognised kinds.

    `tolerance` is required by greedy, cgc-w (s_w used), cgc-e (s_e used),
    standard-gc, and hgc. hgc-jncss derives its tolerance from the JNCSS
    solver and requires `profile`.
    """
    kind = kind.lower()
    if kind not in KINDS:
        raise UnknownKindError(f"unknown scheme kind {kind!r}; expected one of {KINDS}")
    n = topology.n

    if kind == "uncoded":
        D = _even_split(topology, K)
        return ExecutableScheme(kind, topology, K, D, Tolerance(0, 0), None, n, seed)

    if kind == "greedy":
        if tolerance is None:
            raise ValueError("greedy requires a tolerance (its wait rule)")
        tolerance.validate(topology)
        D = _even_split(topology, K)
        return ExecutableScheme(
            kind, topology, K, D, tolerance, None, n - tolerance.s_e, seed
        )

    if kind in ("cgc-w", "cgc-e", "hgc"):
        if tolerance is None:
            raise ValueError(f"{kind} requires a tolerance")
        if kind == "cgc-w":
            tol = Tolerance(0, tolerance.s_w)
        elif kind == "cgc-e":
            tol = Tolerance(tolerance.s_e, 0)
        else:
            tol = tolerance
        plan = coding.allocate(topology, tol, K)
        load = n if kind == "cgc-w" else n - tol.s_e
        return ExecutableScheme(kind, topology, K, plan.D, tol, None, load, seed)

    if kind == "standard-gc":
        if tolerance is None:
            raise ValueError("standard-gc requires the hierarchical tolerance to match")
        s = standard_gc_tolerance(topology, tolerance)
        flat = Topology(1, [topology.total_workers])
        plan = coding.allocate(flat, Tolerance(0, s), K)
        return ExecutableScheme(
            kind, topology, K, plan.D, tolerance, s, topology.total_workers - s, seed
        )

    # hgc-jncss
    if profile is None:
        raise ValueError("hgc-jncss requires node profiles (the solver input)")
    selection = jncss.solve(topology, profile, K)
    tol = Tolerance(selection.s_e, selection.s_w)
    plan = coding.allocate(topology, tol, K)
    return ExecutableScheme(
        kind, topology, K, plan.D, tol, None, n - tol.s_e, seed, selection
    )


def master_comm_load(scheme: ExecutableScheme) -> int:
    """Results the master receives per iteration (its communication load)."""
    return scheme.master_comm_load
