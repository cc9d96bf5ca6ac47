"""Hierarchical gradient coding for master-edge-worker distributed learning.

Submodules: `tradeoff` (load/straggler bounds), `coding` (two-layer scheme
construction and decoding), `runtime` (stochastic iteration-time model),
`jncss` (joint node and coding-scheme selection), `schemes` (comparison
strategies), `sim` (Monte-Carlo experiments), `traindemo` (synthetic
end-to-end training), `cli` (command line).
"""
from .topology import Tolerance, Topology
from .profiles import EdgeProfile, SystemProfile, WorkerProfile

__all__ = [
    "Tolerance",
    "Topology",
    "EdgeProfile",
    "SystemProfile",
    "WorkerProfile",
]

__version__ = "0.1.0"
