"""Command-line interface.

One config document (or a built-in preset) drives every subcommand. Results go
to files under the output directory (--out, else $HIERGC_OUT, else
./hiergc-out) and a short summary to stdout; diagnostics go to stderr. Exit
codes: 0 success, 1 invalid input, 2 internal error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from . import config as cfg
from . import coding, jncss, plots, presets, sim, tradeoff, traindemo
from .errors import ConfigError, HiergcError
from .runtime import sample_iteration
from .schemes import build as build_scheme_strategy
from .topology import Tolerance
from .tradeoff import LayerSpec

OUT_ENV = "HIERGC_OUT"


def _note(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_doc(args) -> dict:
    if args.preset:
        doc = presets.get(args.preset)
    else:
        doc = cfg.load_document(args.config)
    if args.seed is not None:
        doc = dict(doc)
        doc["seed"] = args.seed
    return doc


def _seed(doc: dict) -> int:
    return cfg._get(doc, "", "seed", int, required=False, default=0)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get(OUT_ENV) or "hiergc-out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(args, name: str, payload: dict, summary_lines=()) -> None:
    """Write a JSON artifact and print the summary; stdout-only without --out."""
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out or os.environ.get(OUT_ENV):
        path = _out_dir(args) / name
        path.write_text(text + "\n")
        _note(f"wrote {path}")
        for line in summary_lines:
            print(line)
    else:
        for line in summary_lines:
            print(line)
        print(text)


# --- subcommands -----------------------------------------------------------

def cmd_plan(args) -> int:
    doc = _load_doc(args)
    topo = cfg.parse_topology(doc)
    tol = cfg.parse_tolerance(doc, topo)
    hgc = tradeoff.hgc_min_load(topo, tol)
    conv = tradeoff.conventional_min_load(topo, tol)
    feas = tradeoff.check_feasibility(topo, tol)
    payload = {
        "topology": {"n": topo.n, "m": list(topo.m)},
        "tolerance": {"s_e": tol.s_e, "s_w": tol.s_w},
        "hgc_min_load": str(hgc),
        "hgc_min_load_float": float(hgc),
        "conventional_min_load": str(conv),
        "conventional_min_load_float": float(conv),
        "feasible": bool(feas),
        "feasibility_detail": feas.detail,
    }
    lines = [
        f"optimal per-worker load D/K = {hgc} ({float(hgc):.4f})",
        f"conventional single-layer load D_con/K = {conv} ({float(conv):.4f})",
        f"feasible: {bool(feas)}",
    ]
    if "K" in doc:
        K = cfg._get(doc, "", "K", int)
        try:
            plan = coding.allocate(topo, tol, K)
            payload["allocation"] = {"K": K, "n_i": list(plan.n_i), "D": plan.D}
            lines.append(f"K={K}: per-edge holdings n_i={list(plan.n_i)}, per-worker load D={plan.D}")
        except HiergcError as exc:
            payload["allocation_error"] = str(exc)
            lines.append(f"K={K}: {exc}")
    if "layers" in doc:
        sub = cfg._get(doc, "", "layers", dict)
        spec = LayerSpec(
            tuple(cfg._get(sub, "layers", "fanouts", list)),
            tuple(cfg._get(sub, "layers", "tolerances", list)),
        )
        ml = tradeoff.multilayer_min_load(spec)
        payload["multilayer_min_load"] = str(ml)
        lines.append(f"multilayer bound D/K = {ml}")
    _emit(args, "plan.json", payload, lines)
    return 0


def cmd_build_scheme(args) -> int:
    doc = _load_doc(args)
    topo = cfg.parse_topology(doc)
    tol = cfg.parse_tolerance(doc, topo)
    K = cfg._get(doc, "", "K", int)
    plan = coding.allocate(topo, tol, K)
    scheme = coding.build_scheme(plan, _seed(doc))
    text = coding.scheme_to_json(scheme)
    path = _out_dir(args) / "scheme.json"
    path.write_text(text + "\n")
    _note(f"wrote {path}")
    print(f"built scheme: K={K}, D={plan.D}, n_i={list(plan.n_i)}, seed={scheme.seed}")
    return 0


def cmd_verify(args) -> int:
    if args.scheme:
        scheme = coding.scheme_from_json(Path(args.scheme).read_text())
    else:
        doc = _load_doc(args)
        topo = cfg.parse_topology(doc)
        tol = cfg.parse_tolerance(doc, topo)
        plan = coding.allocate(topo, tol, cfg._get(doc, "", "K", int))
        scheme = coding.build_scheme(plan, _seed(doc))
    count = coding.pattern_count(scheme.plan)
    if count <= 10_000:
        report = coding.verify_decodability(scheme, "exhaustive")
    else:
        _note(f"{count} patterns: sampling 1000")
        report = coding.verify_decodability(scheme, "sampled", sample_count=1000, sample_seed=scheme.seed)
    payload = {
        "mode": report.mode,
        "patterns": report.total,
        "passed": report.passed,
        "worst_residual": report.worst_residual,
        "failures": [
            {"edges": list(r.edges), "workers": [list(w) for w in r.workers], "residual": r.residual}
            for r in report.failed
        ],
    }
    _emit(args, "verification.json", payload, [report.summary()])
    return 0 if report.all_passed else 1


def cmd_simulate(args) -> int:
    doc = _load_doc(args)
    topo = cfg.parse_topology(doc)
    profile = cfg.parse_profiles(doc, topo)
    experiment = cfg.parse_experiment(doc, topo, profile, _seed(doc), args.trials)
    _note(
        f"simulating {len(experiment.schemes)} schemes x {len(experiment.K_values)} K values "
        f"x {experiment.trials} trials"
    )
    report = sim.run(experiment)
    table = sim.compare_table(report) if len(report.ok_runs()) >= 2 else None

    out = _out_dir(args)
    (out / "report.json").write_text(sim.report_to_json(report) + "\n")
    sim.write_samples_jsonl(report, out / "samples.jsonl")
    sim.write_samples_csv(report, out / "samples.csv")
    plots.plot_iteration_times(report, out / "iteration_times.png")
    plots.plot_comm_loads(report, out / "comm_loads.png")
    if args.trace:
        _write_traces(report, experiment, out / "traces.jsonl", args.trace)
    _note(f"wrote report.json, samples.jsonl, samples.csv and figures under {out}")

    for run in report.runs:
        if run.error:
            print(f"{run.label:<12} K={run.K:<4} ERROR: {run.error}")
    if table is not None:
        if args.format == "csv":
            print("scheme,K,mean_ms,mean_se,median_ms,p95_ms,D,master_comm_load")
            for r in report.ok_runs():
                print(
                    f"{r.label},{r.K},{r.mean_ms!r},{r.mean_se!r},{r.median_ms!r},"
                    f"{r.p95_ms!r},{r.scheme.D},{r.scheme.master_comm_load}"
                )
        else:
            print(f"{'scheme':<12} {'K':>4} {'mean ms':>10} {'±se':>8} {'median':>10} {'p95':>10} {'D':>4} {'recv':>5}")
            for r in report.ok_runs():
                print(
                    f"{r.label:<12} {r.K:>4} {r.mean_ms:>10.1f} {r.mean_se:>8.2f} "
                    f"{r.median_ms:>10.1f} {r.p95_ms:>10.1f} {r.scheme.D:>4} {r.scheme.master_comm_load:>5}"
                )
            print("fastest first at K={}: {}".format(table.K, ", ".join(table.ranking)))
    return 0


def _write_traces(report, experiment, path, count: int) -> None:
    """Full per-node timing traces (scalar sampler) for the first K of each scheme."""
    with open(path, "w") as fh:
        for si, run in enumerate(report.ok_runs()):
            if run.K != experiment.K_values[0] or run.spec.kind == "standard-gc":
                continue
            rng = np.random.Generator(
                np.random.Philox(np.random.SeedSequence(experiment.seed, spawn_key=(0x7A, si)))
            )
            for t in range(count):
                s = sample_iteration(
                    experiment.topology, experiment.profile, run.scheme.wait, run.scheme.D, rng
                )
                row = {"scheme": run.label, "K": run.K, "trial": t, **s.to_dict()}
                fh.write(json.dumps(row, sort_keys=True) + "\n")


def cmd_optimize(args) -> int:
    doc = _load_doc(args)
    topo = cfg.parse_topology(doc)
    profile = cfg.parse_profiles(doc, topo)
    K = cfg._get(doc, "", "K", int)
    seed = _seed(doc)
    selection = jncss.solve(topo, profile, K)
    trials = args.trials or 100_000
    _note(f"estimating moments with {trials} trials")
    inputs = jncss.estimate_gap_inputs(
        topo, profile, Tolerance(selection.s_e, selection.s_w), selection.D, trials, seed
    )
    bound = jncss.theorem3_bound(selection, inputs)
    payload = {
        "K": K,
        "s_e": selection.s_e,
        "s_w": selection.s_w,
        "D": selection.D,
        "objective_ms": selection.objective,
        "e": list(selection.e),
        "w": [list(r) for r in selection.w],
        "evaluations": selection.evaluations,
        "skipped": [
            {"s_e": s.s_e, "s_w": s.s_w, "reason": s.reason} for s in selection.skipped
        ],
        "expected_gap_bound_ms": bound,
        "moments": {"trials": inputs.trials, "seed": inputs.seed},
        "note": (
            "gap bound uses the m_i-scaled worker radicand from the order-statistic "
            "lemma; the displayed theorem scales that term by n instead"
        ),
    }
    _emit(
        args,
        "selection.json",
        payload,
        [
            f"selected tolerance (s_e, s_w) = ({selection.s_e}, {selection.s_w}), D = {selection.D}",
            f"proxy objective = {selection.objective:.2f} ms; expected-gap bound = {bound:.2f} ms",
            f"candidates skipped (non-integer load): {len(selection.skipped)}",
        ],
    )
    return 0


def cmd_demo_train(args) -> int:
    doc = _load_doc(args)
    topo = cfg.parse_topology(doc)
    training = cfg._get(doc, "", "training", dict)
    seed = _seed(doc)
    K = cfg._get(doc, "", "K", int)
    spec = cfg.parse_scheme_spec(cfg._get(training, "training", "scheme", dict), "training.scheme")
    policy = cfg.parse_policy(cfg._get(training, "training", "policy", dict), "training.policy")
    profile = cfg.parse_profiles(doc, topo) if "profiles" in doc else None
    task = traindemo.make_task(
        cfg._get(training, "training", "N", int),
        cfg._get(training, "training", "d", int),
        K,
        cfg._get(training, "training", "iterations", int),
        seed,
        cfg._get(training, "training", "learning_rate", float, required=False),
    )
    scheme = build_scheme_strategy(spec.kind, topo, profile, K, tolerance=spec.tolerance(), seed=seed)
    result = traindemo.run_training(task, scheme, policy)
    central = traindemo.centralized_gd(task)
    gap = traindemo.trajectory_gap(result, central)

    out = _out_dir(args)
    traindemo.write_trajectory_csv(result, out / "trajectory.csv")
    plots.plot_training(result, central, out / "training_curves.png")
    payload = {
        "scheme": spec.kind,
        "policy": policy.mode,
        "iterations": task.iterations,
        "learning_rate": task.learning_rate,
        "final_loss": result.losses[-1],
        "centralized_final_loss": central.losses[-1],
        "max_recovery_residual": result.max_residual,
        "final_trajectory_gap": gap,
    }
    (out / "demo.json").write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
    _note(f"wrote trajectory.csv, training_curves.png, demo.json under {out}")
    print(
        f"{spec.label()} under {policy.mode}: max recovery residual {result.max_residual:.3e}, "
        f"final gap to centralized GD {gap:.3e}"
    )
    return 0


def cmd_bounds(args) -> int:
    doc = _load_doc(args)
    sub = cfg._get(doc, "", "bounds", dict)
    payload: dict = {}
    lines = []
    if "order_stat" in sub:
        os_doc = cfg._get(sub, "bounds", "order_stat", dict)
        means = cfg._get(os_doc, "bounds.order_stat", "means", list)
        variances = cfg._get(os_doc, "bounds.order_stat", "variances", list)
        r = cfg._get(os_doc, "bounds.order_stat", "r", int)
        bound = jncss.order_stat_gap_bound(len(means), r, means, variances)
        payload["order_stat"] = {"n": len(means), "r": r, "bound": bound}
        lines.append(f"|E[X_({r})] - u_{r}| <= {bound:.6g}")
    if "theorem3" in sub:
        t3 = cfg._get(sub, "bounds", "theorem3", dict)
        path = "bounds.theorem3"
        selection = jncss.Selection(
            cfg._get(t3, path, "s_e", int),
            cfg._get(t3, path, "s_w", int),
            (), (), 0.0, 1,
        )
        inputs = jncss.GapBoundInputs(
            tuple(cfg._get(t3, path, "edge_means", list)),
            tuple(cfg._get(t3, path, "edge_variances", list)),
            tuple(tuple(r) for r in cfg._get(t3, path, "worker_means", list)),
            tuple(tuple(r) for r in cfg._get(t3, path, "worker_variances", list)),
            trials=0,
            seed=0,
        )
        bound = jncss.theorem3_bound(selection, inputs)
        payload["theorem3"] = {"bound": bound}
        lines.append(f"|E[T_tol] - T_hat| <= {bound:.6g} ms")
    if not payload:
        raise ConfigError("bounds", "need an 'order_stat' and/or 'theorem3' section")
    _emit(args, "bounds.json", payload, lines)
    return 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hiergc",
        description="Hierarchical gradient coding: plan loads, build/verify schemes, "
        "simulate iteration times, optimize tolerance, train on synthetic data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        src = p.add_mutually_exclusive_group(required=needs_config)
        src.add_argument("--config", help="path to a JSON config document")
        src.add_argument("--preset", choices=sorted(presets.PRESETS), help="built-in config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./hiergc-out)")
        p.add_argument("--format", choices=["json", "csv"], default="json")
        p.add_argument("--trials", type=int, default=None, help="override trial count")

    common(sub.add_parser("plan", help="trade-off bounds and feasibility"))
    common(sub.add_parser("build-scheme", help="construct and serialize a coding scheme"))
    p_verify = sub.add_parser("verify", help="check decodability over straggler patterns")
    common(p_verify, needs_config=False)
    p_verify.add_argument("--scheme", help="verify a serialized scheme.json instead of building")
    p_sim = sub.add_parser("simulate", help="Monte-Carlo iteration-time comparison")
    common(p_sim)
    p_sim.add_argument("--trace", type=int, default=0, help="also export N full timing traces per scheme")
    common(sub.add_parser("optimize", help="solve JNCSS and bound the proxy gap"))
    common(sub.add_parser("demo-train", help="coded gradient descent on synthetic data"))
    common(sub.add_parser("bounds", help="order-statistic / expected-gap bound calculator"))
    return parser


COMMANDS = {
    "plan": cmd_plan,
    "build-scheme": cmd_build_scheme,
    "verify": cmd_verify,
    "simulate": cmd_simulate,
    "optimize": cmd_optimize,
    "demo-train": cmd_demo_train,
    "bounds": cmd_bounds,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "verify" and not (args.config or args.preset or args.scheme):
        print("verify needs --config, --preset, or --scheme", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, HiergcError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
