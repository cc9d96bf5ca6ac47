import itertools

import numpy as np
import pytest

from hiergc import traindemo
from hiergc.schemes import SurvivorPattern, build
from hiergc.topology import Tolerance, Topology
from hiergc.traindemo import StragglerPolicy, centralized_gd, make_task, run_training

EX1 = Topology(3, [3, 3, 3])


def ex1_task(iterations=60, seed=5):
    return make_task(N=90, d=5, K=9, iterations=iterations, seed=seed)


def test_uncoded_without_stragglers_matches_centralized():
    task = ex1_task()
    scheme = build("uncoded", EX1, None, 9)
    result = run_training(task, scheme, StragglerPolicy("none"))
    central = centralized_gd(task)
    assert traindemo.trajectory_gap(result, central) <= 1e-12
    assert result.max_residual <= 1e-12


def test_hgc_adversarial_cycle_recovers_exactly():
    task = ex1_task(iterations=200)
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 1), seed=2)
    result = run_training(task, scheme, StragglerPolicy("adversarial-cycle"))
    assert result.max_residual <= 1e-9
    central = centralized_gd(task)
    assert traindemo.trajectory_gap(result, central) <= 1e-7
    seen = set(result.patterns)
    assert len(seen) == 81  # 200 iterations rotate through all 81 patterns


def test_greedy_residual_exceeds_threshold():
    task = ex1_task()
    scheme = build("greedy", EX1, None, 9, tolerance=Tolerance(1, 1), seed=0)
    result = run_training(task, scheme, StragglerPolicy("random", s_e=1, s_w=1, seed=3))
    assert result.max_residual > 0.01


def test_full_gradient_schemes_share_the_trajectory():
    task = ex1_task(iterations=80)
    central = centralized_gd(task)
    cases = [
        ("uncoded", StragglerPolicy("none")),
        ("cgc-w", StragglerPolicy("random", s_e=0, s_w=1, seed=1)),
        ("cgc-e", StragglerPolicy("random", s_e=1, s_w=0, seed=2)),
        ("hgc", StragglerPolicy("adversarial-cycle")),
        ("standard-gc", StragglerPolicy("random", s_e=1, s_w=1, seed=4)),
    ]
    for kind, policy in cases:
        scheme = build(kind, EX1, None, 9, tolerance=Tolerance(1, 1), seed=7)
        result = run_training(task, scheme, policy)
        assert traindemo.trajectory_gap(result, central) <= 1e-7, kind


def test_hgc_pattern_independence():
    task = ex1_task(iterations=80)
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 1), seed=9)
    runs = [
        run_training(task, scheme, StragglerPolicy("none")),
        run_training(task, scheme, StragglerPolicy("adversarial-cycle")),
        run_training(task, scheme, StragglerPolicy("random", s_e=1, s_w=1, seed=11)),
        run_training(
            task, scheme,
            StragglerPolicy("fixed", pattern=SurvivorPattern((1, 2), ((1, 2), (1, 2), (1, 2)))),
        ),
    ]
    for a, b in itertools.combinations(runs, 2):
        assert traindemo.trajectory_gap(a, b) <= 1e-7


def test_deterministic_replay():
    task = ex1_task()
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 1), seed=3)
    policy = StragglerPolicy("random", s_e=1, s_w=1, seed=21)
    a = run_training(task, scheme, policy)
    b = run_training(task, scheme, policy)
    assert np.array_equal(a.betas, b.betas)
    assert a.losses == b.losses and a.residuals == b.residuals


def test_policy_validation():
    task = ex1_task(iterations=5)
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 0), seed=0)
    with pytest.raises(ValueError):
        run_training(task, scheme, StragglerPolicy("random", s_e=1, s_w=1, seed=0))
    with pytest.raises(ValueError):
        StragglerPolicy("sometimes")
    with pytest.raises(ValueError):
        StragglerPolicy("fixed")


def test_task_requires_divisible_N():
    with pytest.raises(ValueError):
        make_task(N=91, d=4, K=9, iterations=5, seed=0)


def test_fixed_pattern_mode_reproduces_specific_scenario():
    # the illustrated failure: edge 3 down plus worker 3 of edges 1 and 2
    task = ex1_task(iterations=40)
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 1), seed=4)
    pattern = SurvivorPattern((1, 2), ((1, 2), (1, 2), (1, 2, 3)))
    result = run_training(task, scheme, StragglerPolicy("fixed", pattern=pattern))
    assert result.max_residual <= 1e-9


def test_trajectory_csv(tmp_path):
    task = ex1_task(iterations=10)
    scheme = build("hgc", EX1, None, 9, tolerance=Tolerance(1, 1), seed=0)
    result = run_training(task, scheme, StragglerPolicy("none"))
    path = tmp_path / "trajectory.csv"
    traindemo.write_trajectory_csv(result, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "iteration,loss,residual"
    assert len(lines) == 11
    it, loss, res = lines[1].split(",")
    assert it == "1"
    assert float(loss) == result.losses[0]
