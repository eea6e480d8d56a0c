"""Command-line entry point: ``ldaqc {gen,engineer,simulate,bench,report,selftest}``."""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

from . import __version__
from .detuning import DEFAULT_DELTA0, FAMILIES, check_blockade, engineer_detunings
from .dynamics import (
    BLOCKADE_FACTOR,
    SPLITTINGS,
    HamiltonianModel,
    IntegratorConfig,
    PulseSchedule,
    default_c6,
    evolve,
    minimal_gap,
    trajectory,
    write_trajectory_csv,
)
from .graph import load, save
from .harness import (
    EnsembleSpec,
    ExperimentConfig,
    generate_instances,
    read_records_jsonl,
    report,
    run_ensemble,
)
from .metrics import approximation_ratio, blockade_violation, spm, success_probability
from .mis import enumerate_independent_sets


def _add_ensemble_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ensemble")
    g.add_argument("--rows", type=int)
    g.add_argument("--cols", type=int)
    g.add_argument("--holes", type=float, dest="hole_probability", help="site removal probability")
    g.add_argument("--count", type=int)
    g.add_argument("--seed", type=int, help="master seed")
    g.add_argument("--n-min", type=int)
    g.add_argument("--n-max", type=int)
    g.add_argument("--allow-disconnected", action="store_true", default=None)
    g.add_argument("--hp-window", type=float, nargs=2, metavar=("LO", "HI"), help="keep LO < HP_trad <= HI")


def _ensemble_from_args(base: EnsembleSpec, args) -> EnsembleSpec:
    over = {
        k: getattr(args, k)
        for k in ("rows", "cols", "hole_probability", "count", "seed", "n_min", "n_max")
        if getattr(args, k) is not None
    }
    if args.allow_disconnected:
        over["require_connected"] = False
    if args.hp_window is not None:
        over["hp_window"] = tuple(args.hp_window)
    return replace(base, **over)


def _add_physics_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("physics")
    g.add_argument("--family", choices=sorted(FAMILIES))
    g.add_argument("--delta0", type=float, help=f"sweep amplitude / Omega_max (default {DEFAULT_DELTA0:g})")
    g.add_argument("--safety", type=float, help="multiplier on a* (default 0.99)")
    g.add_argument("--blockade-factor", type=float, help=f"U_nn = 2 pi Omega_max * factor (default {BLOCKADE_FACTOR:g})")
    g.add_argument("--c6", type=float, help="explicit C6; overrides --blockade-factor")
    g.add_argument("--tf", type=float, nargs="+", dest="t_f", help="durations in units of pi / Omega_max")
    g.add_argument("--dt", type=float, help="step in units of 1 / Omega_max (default 0.02)")
    g.add_argument("--method", choices=sorted(SPLITTINGS))


def _config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if getattr(args, "config", None) else ExperimentConfig()
    over = {
        k: getattr(args, k)
        for k in ("family", "delta0", "safety", "blockade_factor", "c6", "t_f", "dt", "method")
        if getattr(args, k, None) is not None
    }
    if getattr(args, "out", None):
        over["output_dir"] = str(args.out)
    if getattr(args, "no_gap", False):
        over["compute_gap"] = False
    return replace(cfg, ensemble=_ensemble_from_args(cfg.ensemble, args), **over)


# ------------------------------------------------------------------ commands


def cmd_gen(args) -> int:
    cfg = _config_from_args(args)
    out = Path(args.out or "instances")
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"version": __version__, "ensemble": asdict(cfg.ensemble), "instances": []}
    for inst in generate_instances(cfg.ensemble):
        name = f"instance_{inst.index:04d}.txt"
        save(inst.graph, out / name)
        manifest["instances"].append({"index": inst.index, "seed": inst.seed, "file": name, "n": inst.graph.n, "m": inst.graph.m})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(manifest['instances'])} instances to {out}")
    return 0


def cmd_engineer(args) -> int:
    g = load(args.graph)
    prof = engineer_detunings(g, args.family or "linear", args.delta0 or DEFAULT_DELTA0, args.safety or 0.99)
    text = prof.to_json(indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if g.positions is not None:
        c6 = args.c6 or default_c6(1.0, args.blockade_factor or BLOCKADE_FACTOR)
        ok = check_blockade(prof, HamiltonianModel(g, c6=c6).u_min)
        print(f"blockade check: {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    g = load(args.graph)
    delta0 = args.delta0 or DEFAULT_DELTA0
    prof = engineer_detunings(g, args.family or "linear", delta0, args.safety or 0.99)
    if args.u_edge is not None or g.positions is None:
        model = HamiltonianModel(g, u_edge=args.u_edge or default_c6(1.0, args.blockade_factor or BLOCKADE_FACTOR))
    else:
        model = HamiltonianModel(g, c6=args.c6 or default_c6(1.0, args.blockade_factor or BLOCKADE_FACTOR))
    cat = enumerate_independent_sets(g)
    integ = IntegratorConfig(args.dt or 0.02, args.method or "bm6")
    protocols = ["traditional", "local_degree"] if args.protocol == "both" else [args.protocol]
    results = []
    for proto in protocols:
        for tf in args.t_f or [20.0]:
            sched = PulseSchedule.from_profile(prof, tf * math.pi, 1.0, proto)
            res = evolve(model, sched, integ)
            p = success_probability(res.state, cat)
            row = {
                "protocol": proto,
                "t_f_over_pi": tf,
                "p_mis": p,
                "spm": spm(p),
                "r_ratio": approximation_ratio(res.state, cat),
                "blockade_violation": blockade_violation(res.state, cat),
                "norm_drift": res.norm_drift,
            }
            if args.gap:
                row["delta_min"] = minimal_gap(model, sched, 100, cat.mis_count, "blockade", cat.all_masks()).delta_min
            if args.trajectory:
                path = Path(args.trajectory)
                path = path.with_name(f"{path.stem}_{proto}_{tf:g}{path.suffix or '.csv'}")
                write_trajectory_csv(trajectory(model, sched, cat, args.samples, integ), path)
            results.append(row)
    print(json.dumps({"mis_size": cat.mis_size, "mis_count": cat.mis_count, "profile": prof.to_dict(), "runs": results}, indent=2))
    return 0


def cmd_bench(args) -> int:
    from .bench import format_rows, run_benchmark

    print(format_rows(run_benchmark(args.sizes, args.steps, args.repeats)))
    return 0


def cmd_report(args) -> int:
    if args.records:
        records = read_records_jsonl(args.records)
        out = Path(args.out or Path(args.records).parent)
    else:
        cfg = _config_from_args(args)
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        cfg.save(out / "config.json")
        records = run_ensemble(cfg)
    summary = report(records, out)
    print(f"{summary['n_ok']} ok, {summary['n_skipped']} skipped, {summary['n_failed']} failed -> {out}")
    for key, e in summary["by_t_f"].items():
        p = e["mean_p_mis"]
        print(f"  t_f = {key} pi: P_MIS trad {p['traditional']:.4f}  LD {p['local_degree']:.4f}  mean log10 error ratio {e['mean_log_error_ratio']:+.3f}")
    return 1 if summary["n_failed"] else 0


def cmd_selftest(args) -> int:
    from .selftest import run_all

    failed = 0
    for name, ok, detail in run_all():
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldaqc", description="Local-degree adiabatic MIS on simulated Rydberg arrays")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample King's-graph instances and write a manifest")
    p.add_argument("--config", help="ExperimentConfig JSON; flags override its ensemble fields")
    p.add_argument("--out", help="output directory (default ./instances)")
    _add_ensemble_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("engineer", help="engineer degree-dependent detunings for one graph")
    p.add_argument("graph")
    p.add_argument("--out", help="write the profile JSON here too")
    _add_physics_flags(p)
    p.set_defaults(func=cmd_engineer)

    p = sub.add_parser("simulate", help="anneal one graph under one or both protocols")
    p.add_argument("graph")
    p.add_argument("--protocol", choices=["both", "traditional", "local_degree"], default="both")
    p.add_argument("--u-edge", type=float, help="uniform edge interaction (graphs without positions)")
    p.add_argument("--gap", action="store_true", help="also compute the minimum spectral gap")
    p.add_argument("--trajectory", help="CSV path prefix for sampled trajectories")
    p.add_argument("--samples", type=int, default=50)
    _add_physics_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="time numba kernels against the numpy fallback")
    p.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="run an ensemble (or reload records) and write summaries")
    p.add_argument("--config", help="ExperimentConfig JSON")
    p.add_argument("--records", help="existing records.jsonl; skips the run")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--no-gap", action="store_true", help="skip spectral-gap computations")
    _add_ensemble_flags(p)
    _add_physics_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("selftest", help="brute-force oracle cross-checks")
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
