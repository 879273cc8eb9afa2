"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 infeasible or plan rejected,
3 precondition failure or exhausted budget.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench, nusmv, report
from .checker import LOOP_MODES, PACKET, validate_plan, validate_transitions
from .ltl import LtlNameError, LtlSyntaxError, parse_ltl
from .model import ModelError, is_wait
from .netio import FormatError, Network, dump_network, load_network, plan_commands, plan_to_json, read_spec
from .reduce import rule_granularity_reduce
from .simulate import SimulationBudgetExceeded, simulate_semantics
from .synth import ALGORITHMS, Infeasible, Plan, SynthOptions

EXIT_OK, EXIT_INPUT, EXIT_REJECTED, EXIT_PRECONDITION = 0, 1, 2, 3

INPUT_ERRORS = (FormatError, ModelError, LtlSyntaxError, LtlNameError, OSError,
                json.JSONDecodeError, nusmv.MangleError, bench.BenchError, KeyError)


class InputError(Exception):
    pass


def _common(p: argparse.ArgumentParser, plan: bool = False) -> None:
    p.add_argument("--network", help="network description (JSON)")
    p.add_argument("--spec", help="LTL property: a file path or the formula itself")
    p.add_argument("--initial", default=None, help="name of the initial policy (default: initial)")
    p.add_argument("--final", default=None, help="name of the final policy (default: final)")
    p.add_argument("--rule-granularity", action="store_true", default=None,
                   help="split multi-rule switches into per-rule pseudo-switches first")
    p.add_argument("--loop-mode", choices=LOOP_MODES, default=PACKET)
    if plan:
        p.add_argument("--plan", required=True, help="plan file produced by synth")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netsynth", description="Synthesize and check network update plans.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize an update plan")
    _common(p)
    p.add_argument("--job", help="job file (JSON) supplying defaults for the other options")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), default=None)
    p.add_argument("--out", help="write the plan (or infeasibility report) here as JSON")
    p.add_argument("--no-cex-learning", action="store_true", default=None)
    p.add_argument("--max-visited", type=int, default=None)
    p.add_argument("--seed", type=int, default=None, help="accepted for uniformity; synthesis is deterministic")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("check", help="validate a plan file")
    _common(p, plan=True)
    p.add_argument("--discipline", choices=("auto", "careful", "transitions"), default="auto",
                   help="careful: per-configuration checks with waits; transitions: in-flight flips")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="explore all interleavings of a plan explicitly")
    _common(p, plan=True)
    p.add_argument("--max-packets", type=int, default=None)
    p.add_argument("--max-states", type=int, default=2_000_000)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bench", help="generate a benchmark instance")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--updating", type=int, required=True)
    p.add_argument("--ingress", type=int, default=3)
    p.add_argument("--impossible", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".", help="output directory for network.json and spec.ltl")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("emit-nusmv", help="write a NuSMV model of one configuration")
    _common(p)
    p.add_argument("--policy", default=None, help="policy to emit (default: the initial policy)")
    p.add_argument("--out", help="model file (default: stdout)")
    p.add_argument("--shift", action="store_true", help="evaluate the property from the ingress step")
    p.add_argument("--run", action="store_true", help="also run NuSMV on the model and report its verdict")
    p.add_argument("--nusmv-path", default=None, help=f"NuSMV binary (default: ${nusmv.ENV_VAR} or PATH)")
    p.set_defaults(func=cmd_emit_nusmv)

    p = sub.add_parser("report", help="sweep benchmark runs into a CSV table and figures")
    p.add_argument("--nodes", type=int, nargs="+", required=True)
    p.add_argument("--updating", type=int, nargs="+", required=True)
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--algo", choices=sorted(ALGORITHMS), nargs="+", default=["order"])
    p.add_argument("--impossible", action="store_true")
    p.add_argument("--no-cex-learning", action="store_true", help="also run each point without learning")
    p.add_argument("--max-visited", type=int, default=None)
    p.add_argument("--out", default="report", help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


# -- input handling ------------------------------------------------------------

def _apply_job(args) -> None:
    job_path = getattr(args, "job", None)
    if not job_path:
        return
    job = json.loads(Path(job_path).read_text())
    base = Path(job_path).parent
    unknown = set(job) - {"network", "spec", "algorithm", "options", "output", "initial", "final"}
    if unknown:
        raise InputError(f"job file: unknown keys {sorted(unknown)}")

    def rel(v):
        return str(base / v) if v and not Path(v).is_absolute() else v

    if args.network is None and "network" in job:
        args.network = rel(job["network"])
    if args.spec is None and "spec" in job:
        spec = job["spec"]
        args.spec = rel(spec) if (base / spec).exists() else spec
    if args.algo is None:
        args.algo = job.get("algorithm")
    if args.out is None and "output" in job:
        args.out = rel(job["output"])
    for name in ("initial", "final"):
        if getattr(args, name) is None and name in job:
            setattr(args, name, job[name])
    opts = job.get("options", {})
    if args.rule_granularity is None and "rule_granularity" in opts:
        args.rule_granularity = bool(opts["rule_granularity"])
    if args.no_cex_learning is None and "cex_learning" in opts:
        args.no_cex_learning = not opts["cex_learning"]
    if args.max_visited is None and "max_visited" in opts:
        args.max_visited = opts["max_visited"]


def _problem(args):
    if not args.network or not args.spec:
        raise InputError("--network and --spec are required")
    net = load_network(args.network)
    f = parse_ltl(read_spec(args.spec))
    init_name = args.initial or "initial"
    final_name = args.final or "final"
    initial, final = net.policy(init_name), net.policy(final_name)
    topo, names = net.topology, {init_name: initial, final_name: final}
    if args.rule_granularity:
        topo, (initial, final) = rule_granularity_reduce(net.topology, [initial, final])
        names = {init_name: initial, final_name: final}
    return net, topo, initial, final, f, names, init_name, final_name


def _load_plan(path, names, rule_granularity):
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict):
        raise FormatError("plan file must hold a JSON object")
    if bool(data.get("rule_granularity", False)) != bool(rule_granularity):
        raise InputError("plan was synthesized with rule_granularity="
                         f"{data.get('rule_granularity')}; pass --rule-granularity accordingly")
    return data, plan_commands(data, names)


def _fmt_cmds(cmds) -> str:
    return ", ".join("WAIT" if is_wait(c) else c.switch for c in cmds) or "(empty)"


def _print_stats(stats: dict) -> None:
    print("stats: " + ", ".join(f"{k}={v}" for k, v in stats.items()))


# -- commands --------------------------------------------------------------------

def cmd_synth(args) -> int:
    _apply_job(args)
    algo = args.algo or "order"
    if algo not in ALGORITHMS:
        raise InputError(f"unknown algorithm {algo!r}")
    net, topo, initial, final, f, _, init_name, final_name = _problem(args)
    opts = SynthOptions(cex_learning=not args.no_cex_learning, max_visited=args.max_visited,
                        loop_mode=args.loop_mode)
    result, stats = ALGORITHMS[algo](topo, initial, final, f, net.space, opts)
    stats_json = stats.to_json()
    if isinstance(result, Plan):
        doc = plan_to_json(algo, result.commands, stats_json, initial=init_name, final=final_name,
                           rule_granularity=bool(args.rule_granularity))
        print(f"plan ({len(result.commands)} commands): {_fmt_cmds(result.commands)}")
        code = EXIT_OK
    else:
        kind = "infeasible" if isinstance(result, Infeasible) else "precondition-failure"
        doc = {"algorithm": algo, "result": kind, "reason": result.reason, "initial": init_name,
               "final": final_name, "rule_granularity": bool(args.rule_granularity), "stats": stats_json}
        print(f"{kind}: {result.reason}")
        code = EXIT_REJECTED if isinstance(result, Infeasible) else EXIT_PRECONDITION
    _print_stats(stats_json)
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return code


def cmd_check(args) -> int:
    net, topo, initial, final, f, names, *_ = _problem(args)
    data, cmds = _load_plan(args.plan, names, args.rule_granularity)
    discipline = args.discipline
    if discipline == "auto":
        discipline = "transitions" if data.get("algorithm") == "configpairs" else "careful"
    check = validate_transitions if discipline == "transitions" else validate_plan
    rep = check(topo, initial, cmds, f, net.space, final=final, loop_mode=args.loop_mode)
    if rep.ok:
        print(f"plan is valid ({discipline}): {_fmt_cmds(cmds)}")
        return EXIT_OK
    print(f"plan rejected ({discipline}): {rep.describe()}")
    return EXIT_REJECTED


def cmd_simulate(args) -> int:
    net, topo, initial, final, f, names, *_ = _problem(args)
    _, cmds = _load_plan(args.plan, names, args.rule_granularity)
    try:
        rep = simulate_semantics(topo, initial, cmds, f, net.space, max_packets=args.max_packets,
                                 max_states=args.max_states)
    except SimulationBudgetExceeded as exc:
        print(f"budget exhausted: {exc}")
        return EXIT_PRECONDITION
    if rep.ok:
        print(f"no violating network trace ({rep.states} states explored)")
        return EXIT_OK
    print(f"violation: {rep.reason}")
    if rep.cex is not None:
        print("  " + rep.cex.describe())
    return EXIT_REJECTED


def cmd_bench(args) -> int:
    params = bench.BenchParams(args.nodes, args.updating, args.ingress, args.impossible, args.seed)
    inst = bench.generate(params)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net = Network(inst.topology, inst.space, {"initial": inst.initial, "final": inst.final})
    dump_network(net, out / "network.json")
    (out / "spec.ltl").write_text(inst.spec_text + "\n")
    print(f"wrote {out / 'network.json'} and {out / 'spec.ltl'} "
          f"({len(inst.topology.switches)} switches, {params.updating_nodes} differ)")
    return EXIT_OK


def cmd_emit_nusmv(args) -> int:
    net, topo, initial, final, f, names, *_ = _problem(args)
    name = args.policy or args.initial or "initial"
    policy = names.get(name)
    if policy is None:
        if args.rule_granularity:
            raise InputError("with --rule-granularity only the initial or final policy can be emitted")
        policy = net.policy(name)
    model = nusmv.emit_nusmv(topo, policy, f, net.space, shift=args.shift)
    if args.out:
        model.write(args.out)
    else:
        sys.stdout.write(model.text)
    if args.run:
        try:
            verdict = nusmv.run_nusmv(model, args.nusmv_path, space=net.space, topo=topo)
        except nusmv.NusmvUnavailable as exc:
            print(f"oracle unavailable: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        except nusmv.NusmvError as exc:
            print(f"NuSMV error: {exc}", file=sys.stderr)
            return EXIT_PRECONDITION
        print(f"NuSMV verdict: {'true' if verdict.ok else 'false'}", file=sys.stderr)
        if not verdict.ok:
            return EXIT_REJECTED
    return EXIT_OK


def cmd_report(args) -> int:
    points = []
    for n in args.nodes:
        for m in args.updating:
            for seed in args.seeds:
                for algo in args.algo:
                    learn_modes = (True, False) if args.no_cex_learning else (True,)
                    for learn in learn_modes:
                        points.append(report.SweepPoint(n, m, args.impossible, seed, algo, learn))

    def progress(row):
        print(f"N={row['nodes']} M={row['updating']} seed={row['seed']} {row['algorithm']}"
              f"{'' if row['cex_learning'] else ' (no learning)'}: {row['result']}, "
              f"{row['model_check_calls']} checks, {row['wall_time_ms']} ms")

    csv_path, figures = report.report(points, args.out, max_visited=args.max_visited, progress=progress)
    print(f"wrote {csv_path}")
    for p in figures:
        print(f"wrote {p}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
