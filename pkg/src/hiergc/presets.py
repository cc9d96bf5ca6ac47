"""Built-in experiment presets, as plain config documents.

`paper-sec6` is the heterogeneous 4-edge / 40-worker testbed: one
strong-communication edge (tau 50 ms, p 0.1), two normal edges (tau 100 ms,
p 0.1), one weak edge (tau 500 ms, p 0.2); under every edge, five workers with
strong compute and strong links, two with strong compute but lossy links, two
with weak compute, and one weak in both. Compute cost per sub-dataset is 10 ms
for strong-compute workers and 50 ms for weak ones (the logistic-regression
workload scale); override via c_strong_ms / c_weak_ms.

`example-1` is the small uniform system: 3 edges x 3 workers, K = 9,
tolerance (1, 1).
"""
from __future__ import annotations

import copy

_EDGE_TYPES = [
    {"tau_ms": 50.0, "p": 0.1},   # type I: strong communication
    {"tau_ms": 100.0, "p": 0.1},  # type II: normal
    {"tau_ms": 100.0, "p": 0.1},
    {"tau_ms": 500.0, "p": 0.2},  # type III: weak
]


def _worker_row(c_strong: float, c_weak: float) -> list[dict]:
    strong_fast = {"c_ms": c_strong, "gamma_per_ms": 0.1, "tau_ms": 50.0, "p": 0.1}
    strong_slowlink = {"c_ms": c_strong, "gamma_per_ms": 0.1, "tau_ms": 100.0, "p": 0.5}
    weak_fastlink = {"c_ms": c_weak, "gamma_per_ms": 0.01, "tau_ms": 50.0, "p": 0.1}
    weak_slow = {"c_ms": c_weak, "gamma_per_ms": 0.01, "tau_ms": 100.0, "p": 0.5}
    return [strong_fast] * 5 + [strong_slowlink] * 2 + [weak_fastlink] * 2 + [weak_slow]


def paper_sec6(c_strong_ms: float = 10.0, c_weak_ms: float = 50.0) -> dict:
    return {
        "topology": {"n": 4, "m": [10, 10, 10, 10]},
        "tolerance": {"s_e": 1, "s_w": 1},
        "K": 40,
        "seed": 0,
        "profiles": {
            "edges": copy.deepcopy(_EDGE_TYPES),
            "workers": [_worker_row(c_strong_ms, c_weak_ms) for _ in range(4)],
        },
        "experiment": {
            "schemes": [
                {"kind": "uncoded"},
                {"kind": "greedy", "s_e": 1, "s_w": 1},
                {"kind": "cgc-w", "s_w": 1},
                {"kind": "cgc-e", "s_e": 1},
                {"kind": "standard-gc", "s_e": 1, "s_w": 1},
                {"kind": "hgc", "s_e": 1, "s_w": 1},
                {"kind": "hgc-jncss"},
            ],
            "K_sweep": [40, 80, 120, 160, 200],
            "trials": 10_000,
        },
    }


def example_1() -> dict:
    uniform_worker = {"c_ms": 10.0, "gamma_per_ms": 0.1, "tau_ms": 50.0, "p": 0.1}
    uniform_edge = {"tau_ms": 100.0, "p": 0.1}
    return {
        "topology": {"n": 3, "m": [3, 3, 3]},
        "tolerance": {"s_e": 1, "s_w": 1},
        "K": 9,
        "seed": 0,
        "profiles": {
            "edges": [dict(uniform_edge) for _ in range(3)],
            "workers": [[dict(uniform_worker) for _ in range(3)] for _ in range(3)],
        },
        "experiment": {
            "schemes": [
                {"kind": "uncoded"},
                {"kind": "greedy", "s_e": 1, "s_w": 1},
                {"kind": "hgc", "s_e": 1, "s_w": 1},
                {"kind": "hgc-jncss"},
            ],
            "K_sweep": [9],
            "trials": 2_000,
        },
        "training": {
            "N": 90,
            "d": 5,
            "iterations": 200,
            "learning_rate": None,
            "scheme": {"kind": "hgc", "s_e": 1, "s_w": 1},
            "policy": {"mode": "adversarial-cycle"},
        },
    }


PRESETS = {"paper-sec6": paper_sec6, "example-1": example_1}


def get(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    return PRESETS[name]()
