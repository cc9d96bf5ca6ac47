from fractions import Fraction

import numpy as np
import pytest

from hiergc import coding
from hiergc.topology import Tolerance, Topology
from hiergc.tradeoff import (
    LayerSpec,
    check_feasibility,
    conventional_min_load,
    hgc_min_load,
    multilayer_min_load,
)

EX1 = Topology(3, [3, 3, 3])


def equality_set(topology, tolerance):
    """Exact characterisation of conventional == hgc (degenerate tight cases)."""
    s_e, s_w = tolerance.s_e, tolerance.s_w
    if s_e == 0:
        return s_w == 0 or topology.n == 1
    return all(m == s_w + 1 for m in topology.m) and (s_w == 0 or topology.n == s_e + 1)


def random_instance(rng, n_max=5, m_max=6):
    n = int(rng.integers(1, n_max + 1))
    topo = Topology(n, [int(x) for x in rng.integers(1, m_max + 1, size=n)])
    tol = Tolerance(int(rng.integers(0, n)), int(rng.integers(0, topo.m_min)))
    return topo, tol


def test_hgc_min_load_example1():
    assert hgc_min_load(EX1, Tolerance(1, 1)) == Fraction(4, 9)


def test_hgc_min_load_no_stragglers():
    topo = Topology(2, [4, 2])
    assert hgc_min_load(topo, Tolerance(0, 0)) == Fraction(1, 6)


def test_hgc_min_load_heterogeneous():
    assert hgc_min_load(Topology(2, [4, 2]), Tolerance(1, 1)) == Fraction(2, 3)


def test_conventional_example1():
    # the s_e largest group plus s_w per surviving edge, plus one
    assert conventional_min_load(EX1, Tolerance(1, 1)) == Fraction(3 + 2 * 1 + 1, 9)


def test_conventional_single_edge_matches_single_layer_bound():
    topo = Topology(1, [7])
    for s_w in range(7):
        assert conventional_min_load(topo, Tolerance(0, s_w)) == Fraction(s_w + 1, 7)


def test_conventional_picks_largest_groups():
    topo = Topology(3, [5, 2, 9])
    # s_e = 2 silences the 9- and 5-worker edges
    assert conventional_min_load(topo, Tolerance(2, 1)) == Fraction(9 + 5 + 1 + 1, 16)


def test_strict_dominance_random_campaign():
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 500:
        topo, tol = random_instance(rng)
        conv, hgc = conventional_min_load(topo, tol), hgc_min_load(topo, tol)
        assert conv >= hgc
        if equality_set(topo, tol):
            assert conv == hgc
        else:
            assert conv > hgc
            checked += 1


def test_equality_set_is_exact_on_small_sweep():
    for n in range(1, 4):
        for m in ([2] * n, [3] * n, list(range(1, n + 1))):
            topo = Topology(n, m)
            for s_e in range(n):
                for s_w in range(topo.m_min):
                    tol = Tolerance(s_e, s_w)
                    equal = conventional_min_load(topo, tol) == hgc_min_load(topo, tol)
                    assert equal == equality_set(topo, tol)


def test_hgc_monotone_in_tolerance():
    rng = np.random.default_rng(11)
    for _ in range(100):
        topo, tol = random_instance(rng)
        if tol.s_e + 1 < topo.n:
            assert hgc_min_load(topo, Tolerance(tol.s_e + 1, tol.s_w)) > hgc_min_load(topo, tol)
        if tol.s_w + 1 < topo.m_min:
            assert hgc_min_load(topo, Tolerance(tol.s_e, tol.s_w + 1)) > hgc_min_load(topo, tol)


def test_multilayer_two_layer_matches_hgc():
    spec = LayerSpec((3, 3), (1, 1))
    assert multilayer_min_load(spec) == Fraction(4, 9)
    assert multilayer_min_load(spec) == hgc_min_load(EX1, Tolerance(1, 1))


def test_multilayer_single_layer():
    assert multilayer_min_load(LayerSpec((8,), (2,))) == Fraction(3, 8)


def test_multilayer_full_replication_boundary():
    assert multilayer_min_load(LayerSpec((2, 2, 2), (1, 1, 1))) == 1


def test_layerspec_validation():
    with pytest.raises(ValueError):
        LayerSpec((2, 2), (1, 2))


def test_feasibility_example1():
    res = check_feasibility(EX1, Tolerance(1, 0))
    assert res.feasible and res.worst_value == Fraction(4, 3)


def test_feasibility_skewed_topology():
    res = check_feasibility(Topology(2, [1, 100]), Tolerance(1, 0))
    assert not res.feasible
    assert res.worst_subset == (1,)
    assert res.worst_value == Fraction(2, 101)


def test_feasibility_no_edge_stragglers_always_holds():
    rng = np.random.default_rng(3)
    for _ in range(50):
        topo, _ = random_instance(rng)
        assert check_feasibility(topo, Tolerance(0, 0)).feasible


def test_bounds_times_K_reproduce_allocated_load():
    cases = [
        (EX1, Tolerance(1, 1), 9),
        (Topology(2, [2, 2]), Tolerance(1, 0), 4),
        (Topology(4, [10] * 4), Tolerance(2, 3), 40),
    ]
    for topo, tol, K in cases:
        plan = coding.allocate(topo, tol, K)
        assert hgc_min_load(topo, tol) * K == plan.D


def test_tolerance_domain_enforced():
    with pytest.raises(ValueError):
        hgc_min_load(EX1, Tolerance(3, 0))
    with pytest.raises(ValueError):
        hgc_min_load(EX1, Tolerance(0, 3))
