"""Monte-Carlo experiment engine: per-scheme runtime distributions and comparisons.

Each (scheme, K) cell gets its own counter-based random stream keyed by the
cell's position, so results are byte-reproducible for a fixed config seed no
matter how cells are executed. Master-side decode cost is ignored, as in the
underlying runtime model; reports carry that note.
"""
from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import schemes as schemes_mod
from .errors import HiergcError
from .profiles import SystemProfile
from .topology import Tolerance, Topology

REPORT_NOTES = (
    "master-side decode cost is ignored (runtime model covers compute and links only)",
    "gain metric: gain(A, B) = 1 - mean_A / mean_B ('performance gain of A over B')",
)


@dataclass(frozen=True)
class SchemeSpec:
    kind: str
    s_e: int | None = None
    s_w: int | None = None

    def tolerance(self) -> Tolerance | None:
        if self.s_e is None and self.s_w is None:
            return None
        return Tolerance(self.s_e or 0, self.s_w or 0)

    def label(self) -> str:
        return schemes_mod.DISPLAY.get(self.kind, self.kind)


@dataclass(frozen=True)
class ExperimentConfig:
    topology: Topology
    profile: SystemProfile
    schemes: tuple[SchemeSpec, ...]
    K_values: tuple[int, ...]
    trials: int
    seed: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.schemes or not self.K_values:
            raise ValueError("need at least one scheme and one K value")
        self.profile.validate(self.topology)


@dataclass(frozen=True)
class SchemeRun:
    """Statistics of one (scheme, K) cell; `error` rows carry no samples."""

    spec: SchemeSpec
    K: int
    error: str | None = None
    scheme: schemes_mod.ExecutableScheme | None = None
    samples: np.ndarray | None = field(default=None, repr=False)
    mean_ms: float | None = None
    mean_se: float | None = None
    median_ms: float | None = None
    median_se: float | None = None
    p95_ms: float | None = None
    p95_se: float | None = None

    @property
    def label(self) -> str:
        return self.spec.label()


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    runs: tuple[SchemeRun, ...]
    notes: tuple[str, ...] = REPORT_NOTES

    def at(self, kind: str, K: int) -> SchemeRun:
        for run in self.runs:
            if run.spec.kind == kind and run.K == K:
                return run
        raise KeyError(f"no run for scheme {kind!r} at K={K}")

    def ok_runs(self) -> tuple[SchemeRun, ...]:
        return tuple(r for r in self.runs if r.error is None)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


def _cell_key(spec: SchemeSpec, K: int) -> tuple[int, ...]:
    """Content-derived stream key: identical scheme specs share identical draws."""
    return (
        zlib.crc32(spec.kind.encode()),
        0 if spec.s_e is None else spec.s_e + 1,
        0 if spec.s_w is None else spec.s_w + 1,
        K,
    )


def _quantile_se(samples: np.ndarray, q: float, rng, resamples: int = 200) -> float:
    idx = rng.integers(0, samples.size, size=(resamples, samples.size))
    return float(np.quantile(samples[idx], q, axis=1).std(ddof=1))


def run(config: ExperimentConfig) -> ExperimentReport:
    """Build every scheme at every K and sample `trials` iteration times each.

    A scheme that fails to build (e.g. a load-divisibility error) contributes
    an error row instead of aborting the other cells.
    """
    runs: list[SchemeRun] = []
    for spec in config.schemes:
        for K in config.K_values:
            try:
                scheme = schemes_mod.build(
                    spec.kind,
                    config.topology,
                    config.profile,
                    K,
                    tolerance=spec.tolerance(),
                    seed=config.seed,
                )
            except (HiergcError, ValueError) as exc:
                runs.append(SchemeRun(spec, K, error=str(exc)))
                continue
            key = _cell_key(spec, K)
            rng = _stream(config.seed, *key)
            samples = scheme.sample_totals(config.profile, rng, config.trials)
            boot = _stream(config.seed, *key, 1)
            n = samples.size
            runs.append(
                SchemeRun(
                    spec,
                    K,
                    scheme=scheme,
                    samples=samples,
                    mean_ms=float(samples.mean()),
                    mean_se=float(samples.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
                    median_ms=float(np.median(samples)),
                    median_se=_quantile_se(samples, 0.5, boot) if n > 1 else 0.0,
                    p95_ms=float(np.quantile(samples, 0.95)),
                    p95_se=_quantile_se(samples, 0.95, boot) if n > 1 else 0.0,
                )
            )
    return ExperimentReport(config, tuple(runs))


def gain(mean_a: float, mean_b: float) -> float:
    """Relative gain of A over B: 1 - mean_A / mean_B."""
    return 1.0 - mean_a / mean_b


@dataclass(frozen=True)
class ComparisonTable:
    K: int
    labels: tuple[str, ...]
    means: tuple[float, ...]
    ses: tuple[float, ...]
    gains: tuple[tuple[float, ...], ...]        # gains[a][b] = gain of a over b
    significant: tuple[tuple[bool, ...], ...]   # |mean_a - mean_b| > 2 combined SE
    ranking: tuple[str, ...]                    # labels sorted fastest first

    def rows(self) -> list[dict]:
        return [
            {"scheme": lab, "mean_ms": m, "mean_se": s}
            for lab, m, s in zip(self.labels, self.means, self.ses)
        ]


def compare_table(report: ExperimentReport, K: int | None = None) -> ComparisonTable:
    """Pairwise relative-gain matrix at one K (the first K by default)."""
    K = report.config.K_values[0] if K is None else K
    runs = [r for r in report.ok_runs() if r.K == K]
    if len(runs) < 2:
        raise ValueError(f"need at least two successful schemes at K={K}")
    labels = tuple(r.label for r in runs)
    means = tuple(r.mean_ms for r in runs)
    ses = tuple(r.mean_se for r in runs)
    gains, signif = [], []
    for a in range(len(runs)):
        grow, srow = [], []
        for b in range(len(runs)):
            grow.append(gain(means[a], means[b]))
            srow.append(abs(means[a] - means[b]) > 2.0 * float(np.hypot(ses[a], ses[b])))
        gains.append(tuple(grow))
        signif.append(tuple(srow))
    order = sorted(range(len(runs)), key=lambda i: means[i])
    return ComparisonTable(
        K, labels, means, ses, tuple(gains), tuple(signif), tuple(labels[i] for i in order)
    )


# --- serialisation ---------------------------------------------------------

def report_to_dict(report: ExperimentReport) -> dict:
    rows = []
    for run_ in report.runs:
        row = {"scheme": run_.label, "kind": run_.spec.kind, "K": run_.K}
        if run_.error is not None:
            row["error"] = run_.error
        else:
            row.update(run_.scheme.describe())
            row.update(
                trials=int(run_.samples.size),
                mean_ms=run_.mean_ms,
                mean_se=run_.mean_se,
                median_ms=run_.median_ms,
                median_se=run_.median_se,
                p95_ms=run_.p95_ms,
                p95_se=run_.p95_se,
            )
        rows.append(row)
    return {
        "topology": {"n": report.config.topology.n, "m": list(report.config.topology.m)},
        "trials": report.config.trials,
        "seed": report.config.seed,
        "K_values": list(report.config.K_values),
        "notes": list(report.notes),
        "schemes": rows,
    }


def report_to_json(report: ExperimentReport) -> str:
    return json.dumps(report_to_dict(report), sort_keys=True, indent=2)


def write_samples_jsonl(report: ExperimentReport, path) -> None:
    with open(path, "w") as fh:
        for run_ in report.ok_runs():
            for t, x in enumerate(run_.samples):
                fh.write(
                    json.dumps(
                        {"scheme": run_.label, "K": run_.K, "trial": t, "T_tol_ms": float(x)},
                        sort_keys=True,
                    )
                )
                fh.write("\n")


def write_samples_csv(report: ExperimentReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("scheme,K,trial,T_tol_ms\n")
        for run_ in report.ok_runs():
            for t, x in enumerate(run_.samples):
                fh.write(f"{run_.label},{run_.K},{t},{float(x)!r}\n")
