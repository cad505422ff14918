"""Command-line frontend.

Subcommands cover the pipeline end to end: ``gen`` (benchmark + stimuli),
``sta``, ``simulate``, ``candidates``, ``optimize``, ``baseline``,
``evaluate``, and ``montecarlo``. Reports are JSON/CSV; identical
invocations with identical seeds write byte-identical reports (wall-clock
numbers go to a separate timing file).

Exit codes: 0 success, 1 infeasible optimization, 2 input error,
3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench
from .baselines import aps, glp
from .candidates import dump_candidates
from .errors import AxagingError, InfeasibleError, InputError, InternalError
from .ga import DEFAULT_SEED, GaConfig, chromosome_plan, evolve
from .metrics import decode_outputs, nmed as compute_nmed, resolve_decoding
from .netlist import apply_rewiring, emit_netlist, parse_netlist
from .sim import functional_simulate, generate_stimuli, load_stimuli, save_stimuli, timing_simulate
from .timing import (
    Corner,
    annotate,
    default_timing_model,
    derive_aged_model,
    load_timing_model,
    restatic,
    sample_variation,
    save_timing_model,
)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3


def _add_common(p: argparse.ArgumentParser, netlist: bool = True) -> None:
    if netlist:
        p.add_argument("--netlist", required=True, help="structural netlist file")
    p.add_argument("--timing", help="timing model file (default: built-in synthetic model)")
    p.add_argument("--aging-factor", type=float, default=None,
                   help="aged = fresh * factor for entries without an aged column (default 1.1215)")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--out-dir", default=".", help="directory for artifacts")
    p.add_argument("--output-bus", action="append", default=None,
                   help="output bus to decode, most significant first (repeatable)")
    p.add_argument("--metric", choices=["nmed", "nmed-literal"], default="nmed")
    p.add_argument("--threads", type=int, default=1, help="worker bound; never affects results")
    p.add_argument("--config", help="key=value config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="axaging", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", help="evolve an approximate netlist meeting the fresh-CPD target")
    _add_common(p)
    p.add_argument("--delay-target", type=float, default=None,
                   help="aged CPD bound (default: fresh baseline CPD)")
    p.add_argument("--opt-vectors", type=int, default=100_000)
    p.add_argument("--eval-vectors", type=int, default=100_000)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--generations", type=int, default=None)
    p.add_argument("--mutation", type=float, default=None, help="initial per-bit mutation probability")
    p.add_argument("--crossover", type=float, default=None)
    p.add_argument("--elite", type=int, default=None)
    p.add_argument("--diversity-threshold", type=float, default=None)

    p = sub.add_parser("sta", help="print corner CPD and critical path")
    _add_common(p)
    p.add_argument("--corner", choices=["fresh", "aged"], default="fresh")

    p = sub.add_parser("simulate", help="simulate and emit the decoded output stream")
    _add_common(p)
    p.add_argument("--mode", choices=["functional", "timing"], default="functional")
    p.add_argument("--corner", choices=["fresh", "aged"], default="aged")
    p.add_argument("--clock", type=float, default=None, help="timing mode sample period (default: fresh CPD)")
    p.add_argument("--vectors", type=int, default=10_000)
    p.add_argument("--stimuli", help="hex stimulus file (default: generated)")
    p.add_argument("--out", default="outputs.txt")

    p = sub.add_parser("evaluate", help="NMED between two output streams or two netlists")
    _add_common(p, netlist=False)
    p.add_argument("--golden", help="golden stream file (one decimal per line)")
    p.add_argument("--observed", help="observed stream file")
    p.add_argument("--netlist", help="reference netlist (with --against)")
    p.add_argument("--against", help="netlist to compare against --netlist")
    p.add_argument("--vectors", type=int, default=100_000)

    p = sub.add_parser("gen", help="emit a generated benchmark netlist and stimuli")
    _add_common(p, netlist=False)
    p.add_argument("--kind", choices=["rca", "mult", "adder_tree", "conv3x3"], required=True)
    p.add_argument("--width", type=int, default=8)
    p.add_argument("--inputs", type=int, default=4, help="adder_tree term count")
    p.add_argument("--coeff-width", type=int, default=8, help="conv3x3 coefficient width")
    p.add_argument("--opt-vectors", type=int, default=100_000)
    p.add_argument("--eval-vectors", type=int, default=100_000)

    p = sub.add_parser("baseline", help="run a reference strategy (glp or aps)")
    _add_common(p)
    p.add_argument("--method", choices=["glp", "aps"], required=True)
    p.add_argument("--delay-target", type=float, default=None)
    p.add_argument("--opt-vectors", type=int, default=100_000)
    p.add_argument("--eval-vectors", type=int, default=100_000)

    p = sub.add_parser("montecarlo", help="process-variation study at the fresh-CPD clock")
    _add_common(p)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--sigma", type=float, default=0.10)
    p.add_argument("--mc-vectors", type=int, default=10_000)
    p.add_argument("--vectors", type=int, default=100_000, help="evaluation stimulus pool")

    p = sub.add_parser("candidates", help="dump the approximation-candidate table")
    _add_common(p)
    p.add_argument("--opt-vectors", type=int, default=100_000)

    return ap


def _load_config_defaults(argv: list[str], ap: argparse.ArgumentParser) -> list[str]:
    """Apply --config key=value pairs as parser defaults (flags still win)."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config")
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return argv
    path = Path(known.config)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    defaults = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        defaults[key.replace("-", "_")] = value
    for action in ap._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        known_dests = {a.dest: a for a in action._actions}
        sub_defaults = {}
        for key, value in defaults.items():
            a = known_dests.get(key)
            if a is None:
                continue
            if a.type is not None:
                value = a.type(value)
            sub_defaults[key] = value
        action.set_defaults(**sub_defaults)
    return argv


def _seed(args) -> int:
    seed = args.seed if args.seed is not None else DEFAULT_SEED
    print(f"seed: {seed}")
    return seed


def _model(args):
    factor = args.aging_factor if args.aging_factor is not None else None
    from .timing import DEFAULT_AGING_FACTOR

    f = factor if factor is not None else DEFAULT_AGING_FACTOR
    if args.timing:
        if not Path(args.timing).exists():
            raise InputError(f"timing model file not found: {args.timing}")
        return load_timing_model(args.timing, f)
    return default_timing_model(f)


def _netlist(args):
    path = Path(args.netlist)
    if not path.exists():
        raise InputError(f"netlist file not found: {path}")
    return parse_netlist(path.read_text())


def _json_dump(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def cmd_optimize(args) -> int:
    seed = _seed(args)
    n = _netlist(args)
    model = _model(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    decoding = resolve_decoding(n, args.output_bus)
    fresh = annotate(n, model, Corner.FRESH)
    aged = annotate(n, model, Corner.AGED)
    delay_target = args.delay_target if args.delay_target is not None else fresh.cpd

    opt_stim = generate_stimuli(n, args.opt_vectors, seed=seed)
    eval_stim = generate_stimuli(n, args.eval_vectors, seed=seed + 1)

    overrides = {"seed": seed, "threads": args.threads}
    if args.population is not None:
        overrides["population_size"] = args.population
    if args.generations is not None:
        overrides["generations"] = args.generations
    if args.mutation is not None:
        overrides["mutation_probability_initial"] = args.mutation
    if args.crossover is not None:
        overrides["crossover_probability"] = args.crossover
    if args.elite is not None:
        overrides["elite_count"] = args.elite
    if args.diversity_threshold is not None:
        overrides["diversity_threshold"] = args.diversity_threshold
    config = GaConfig.for_netlist(n, **overrides)

    cands = bench.extract_candidates(n, aged, opt_stim, seed)
    result = evolve(config, cands, n, model, opt_stim, decoding)
    approx = apply_rewiring(n, result.plan(cands))
    aged_approx = annotate(approx, model, Corner.AGED)

    netlist_path = out_dir / f"{n.name}_approx.v"
    netlist_path.write_text(emit_netlist(approx))

    history_path = out_dir / "ga_history.csv"
    with history_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["generation", "best_fitness", "mean_fitness", "diversity",
                    "mutation_prob", "best_nmed", "best_aged_cpd"])
        for row in result.history:
            w.writerow([row.generation, f"{row.best_fitness:.10g}", f"{row.mean_fitness:.10g}",
                        f"{row.diversity:.10g}", f"{row.mutation_prob:.10g}",
                        f"{row.best_nmed:.10g}", f"{row.best_aged_cpd:.10g}"])

    golden = decode_outputs(functional_simulate(n, eval_stim), decoding)
    observed = decode_outputs(
        functional_simulate(approx, eval_stim), resolve_decoding(approx, decoding.bus_names)
    )
    variant = "literal" if args.metric == "nmed-literal" else "standard"
    metrics = compute_nmed(golden, observed, decoding, variant)

    applied = [
        cands[net].replacement
        for net, bit in zip(result.eligible_order, result.best.bits) if bit
    ]
    report = {
        "circuit": n.name,
        "seed": seed,
        "fresh_cpd": fresh.cpd,
        "aged_cpd_baseline": aged.cpd,
        "aged_cpd_approx": aged_approx.cpd,
        "delay_target": delay_target,
        "feasible": bool(result.feasible and aged_approx.cpd <= delay_target),
        "nmed_opt": result.best_nmed,
        "nmed_eval": metrics.nmed,
        "error_rate_eval": metrics.error_rate,
        "metric_variant": variant,
        "chromosome": result.best.to01(),
        "applied_candidates": len(applied),
        "candidate_mix": bench._mix_fractions(c.replacement for c in cands.values()),
        "selected_mix": bench._mix_fractions(applied),
        "population_size": config.population_size,
        "generations": config.generations,
        "artifacts": {"netlist": netlist_path.name, "history": history_path.name},
    }
    _json_dump(out_dir / "report.json", report)
    print(f"fresh cpd {fresh.cpd:.6g}  aged baseline {aged.cpd:.6g}  aged approx {aged_approx.cpd:.6g}")
    print(f"eval nmed {metrics.nmed:.6g}  feasible {report['feasible']}")
    if not report["feasible"]:
        print("optimize: no feasible solution found", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_sta(args) -> int:
    _seed(args)
    n = _netlist(args)
    model = _model(args)
    corner = Corner.AGED if args.corner == "aged" else Corner.FRESH
    dag = annotate(n, model, corner)
    print(f"circuit: {n.name}")
    print(f"corner: {corner.value}")
    print(f"cpd: {dag.cpd:.10g}")
    names = [n.gate_names[g] for g in dag.critical_path]
    print("critical_path: " + " -> ".join(names))
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = _seed(args)
    n = _netlist(args)
    model = _model(args)
    decoding = resolve_decoding(n, args.output_bus)
    if args.stimuli:
        stim = load_stimuli(args.stimuli, n)
    else:
        stim = generate_stimuli(n, args.vectors, seed=seed)
    if args.mode == "functional":
        values = decode_outputs(functional_simulate(n, stim), decoding)
    else:
        corner = Corner.AGED if args.corner == "aged" else Corner.FRESH
        dag = annotate(n, model, corner)
        clock = args.clock if args.clock is not None else annotate(n, model, Corner.FRESH).cpd
        values = decode_outputs(timing_simulate(dag, stim, clock), decoding)
    out = Path(args.out_dir) / args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(str(int(v)) for v in values) + "\n")
    print(f"wrote {len(values)} output values to {out}")
    return EXIT_OK


def _read_stream(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise InputError(f"stream file not found: {p}")
    return np.array([int(line) for line in p.read_text().split()], dtype=np.int64)


def cmd_evaluate(args) -> int:
    variant = "literal" if args.metric == "nmed-literal" else "standard"
    if args.golden and args.observed:
        golden = _read_stream(args.golden)
        observed = _read_stream(args.observed)
        width = max(int(golden.max()), int(observed.max()), 1).bit_length()
        from .metrics import OutputDecoding

        decoding = OutputDecoding("stream", tuple(range(width)), ("stream",))
        m = compute_nmed(golden, observed, decoding, variant)
    elif args.netlist and args.against:
        seed = _seed(args)
        ref = parse_netlist(Path(args.netlist).read_text())
        other = parse_netlist(Path(args.against).read_text())
        decoding = resolve_decoding(ref, args.output_bus)
        stim = generate_stimuli(ref, args.vectors, seed=seed)
        golden = decode_outputs(functional_simulate(ref, stim), decoding)
        observed = decode_outputs(
            functional_simulate(other, stim), resolve_decoding(other, decoding.bus_names)
        )
        m = compute_nmed(golden, observed, decoding, variant)
    else:
        raise InputError("evaluate needs --golden/--observed files or --netlist/--against netlists")
    print(f"vectors: {m.vectors}")
    print(f"nmed: {m.nmed:.10g}")
    print(f"mean_error_distance: {m.mean_error_distance:.10g}")
    print(f"error_rate: {m.error_rate:.10g}")
    print(f"max_error_distance: {m.max_error_distance}")
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = _seed(args)
    spec = bench.BenchmarkSpec(
        kind=args.kind,
        width=args.width,
        inputs=args.inputs,
        coeff_width=args.coeff_width,
        seed=seed,
        opt_count=args.opt_vectors,
        eval_count=args.eval_vectors,
    )
    n = bench.generate_benchmark(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    netlist_path = out_dir / f"{spec.name}.v"
    netlist_path.write_text(emit_netlist(n))
    save_stimuli(generate_stimuli(n, spec.opt_count, seed=seed), str(out_dir / f"{spec.name}_opt.stim"))
    save_stimuli(generate_stimuli(n, spec.eval_count, seed=seed + 1), str(out_dir / f"{spec.name}_eval.stim"))
    model = _model(args)
    save_timing_model(model, str(out_dir / "timing.model"))
    print(f"wrote {netlist_path} ({n.num_gates} gates) + stimuli + timing model")
    return EXIT_OK


def cmd_baseline(args) -> int:
    seed = _seed(args)
    n = _netlist(args)
    model = _model(args)
    decoding = resolve_decoding(n, args.output_bus)
    fresh = annotate(n, model, Corner.FRESH)
    target = args.delay_target if args.delay_target is not None else fresh.cpd
    opt_stim = generate_stimuli(n, args.opt_vectors, seed=seed)
    eval_stim = generate_stimuli(n, args.eval_vectors, seed=seed + 1)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.method == "glp":
        approx, metrics, pruned = glp(n, model, target, opt_stim, eval_stim, decoding)
        extra = {"pruned_nets": pruned}
    else:
        config, approx, metrics = aps(n, model, target, opt_stim, eval_stim, decoding)
        extra = {"truncation": config.truncation}
    aged_cpd = annotate(approx, model, Corner.AGED).cpd
    (out_dir / f"{n.name}_{args.method}.v").write_text(emit_netlist(approx))
    report = {
        "circuit": n.name,
        "method": args.method,
        "seed": seed,
        "delay_target": target,
        "aged_cpd": aged_cpd,
        "nmed_eval": metrics.nmed,
        "error_rate_eval": metrics.error_rate,
        **extra,
    }
    _json_dump(out_dir / f"{args.method}_report.json", report)
    print(f"{args.method}: aged cpd {aged_cpd:.6g} (target {target:.6g}), eval nmed {metrics.nmed:.6g}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    seed = _seed(args)
    n = _netlist(args)
    model = _model(args)
    spec = bench.BenchmarkSpec("rca", width=8, seed=seed,
                               opt_count=args.vectors, eval_count=args.vectors)
    record = bench.run_experiment(spec, model=model, baseline=n, keep_artifacts=True)
    summary = bench.run_montecarlo(record, args.samples, args.sigma, seed, args.mc_vectors)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "montecarlo.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["circuit", "variant", "min", "q1", "median", "q3", "max"])
        for name, v in summary.variants.items():
            w.writerow([n.name, name, f"{v.minimum:.10g}", f"{v.q1:.10g}",
                        f"{v.median:.10g}", f"{v.q3:.10g}", f"{v.maximum:.10g}"])
    for name, v in summary.variants.items():
        print(f"{name}: median nmed {v.median:.6g} (q1 {v.q1:.6g}, q3 {v.q3:.6g})")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_candidates(args) -> int:
    seed = _seed(args)
    n = _netlist(args)
    model = _model(args)
    aged = annotate(n, model, Corner.AGED)
    stim = generate_stimuli(n, args.opt_vectors, seed=seed)
    cands = bench.extract_candidates(n, aged, stim, seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "candidates.txt"
    path.write_text(dump_candidates(cands, n))
    print(f"wrote {len(cands)} candidates to {path}")
    return EXIT_OK


_COMMANDS = {
    "optimize": cmd_optimize,
    "sta": cmd_sta,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "gen": cmd_gen,
    "baseline": cmd_baseline,
    "montecarlo": cmd_montecarlo,
    "candidates": cmd_candidates,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        argv = _load_config_defaults(argv, ap)
        args = ap.parse_args(argv)
        return _COMMANDS[args.command](args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AxagingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
