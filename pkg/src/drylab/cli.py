"""Operator command line: curate, simulate, serve, eval.

Exit codes are stable so shell pipelines can branch on failure class:
0 success, 2 usage, 3 parse, 4 eligibility, 5 integration, 6 protocol.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .curation import (
    CurationError,
    DEFAULT_N_POINTS,
    curate_document,
    read_bundle,
    write_bundle,
)
from .environment import SessionConfig
from .metrics import evaluate_models, render_report
from .sbml import SbmlParseError, check_eligibility, parse_sbml
from .server import SessionServer, serve_stdio
from .simulate import (
    SimulationError,
    assemble,
    determine_duration,
    simulate,
    trajectory_to_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_ELIGIBILITY = 4
EXIT_INTEGRATION = 5
EXIT_PROTOCOL = 6


def _fail(code: int, message: str) -> int:
    print(f"drylab: {message}", file=sys.stderr)
    return code


def _existing_file(raw: str) -> Path:
    path = Path(raw)
    if not path.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {raw}")
    return path


def _existing_dir(raw: str) -> Path:
    path = Path(raw)
    if not path.is_dir():
        raise argparse.ArgumentTypeError(f"no such directory: {raw}")
    return path


def _override(raw: str) -> tuple[str, float]:
    sid, sep, value = raw.partition("=")
    if not sep or not sid:
        raise argparse.ArgumentTypeError(f"expected SPECIES=VALUE, got {raw!r}")
    try:
        return sid, float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number in override {raw!r}") from None


def _noise_levels(raw: str) -> list[float]:
    try:
        return [float(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad noise levels {raw!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drylab",
        description="Dry-lab benchmark tooling for reaction-network mechanism discovery.",
    )
    parser.add_argument("--version", action="version", version=f"drylab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_curate = sub.add_parser("curate", help="turn a raw model document into a task bundle")
    p_curate.add_argument("input", type=_existing_file, help="model document (XML)")
    p_curate.add_argument("--seed", type=int, default=0)
    p_curate.add_argument("--points", type=int, default=DEFAULT_N_POINTS,
                          help="samples per trajectory (default %(default)s)")
    p_curate.add_argument("--out", type=Path, required=True, help="bundle output directory")

    p_sim = sub.add_parser("simulate", help="integrate a model and print the trajectory CSV")
    p_sim.add_argument("input", type=_existing_file)
    p_sim.add_argument("--duration", type=float, default=None,
                       help="seconds to simulate (default: auto-determined)")
    p_sim.add_argument("--points", type=int, default=DEFAULT_N_POINTS)
    p_sim.add_argument("--override", type=_override, action="append", default=[],
                       metavar="SPECIES=VALUE", help="initial concentration override")
    p_sim.add_argument("--plot", type=Path, default=None, help="also render a PNG figure")

    p_serve = sub.add_parser("serve", help="serve a task bundle over the session protocol")
    p_serve.add_argument("bundle", type=_existing_dir, help="directory from `drylab curate`")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=0, help="0 picks a free port")
    p_serve.add_argument("--stdio", action="store_true",
                         help="serve one session over stdin/stdout instead of TCP")
    p_serve.add_argument("--max-iterations", type=int, default=20)
    p_serve.add_argument("--debug-attempts", type=int, default=3)
    p_serve.add_argument("--with-knockout", action="store_true")
    p_serve.add_argument("--log-dir", type=Path, default=None,
                         help="write per-session transcripts here")

    p_eval = sub.add_parser("eval", help="score a candidate model against a reference")
    p_eval.add_argument("predicted", type=_existing_file)
    p_eval.add_argument("reference", type=_existing_file)
    p_eval.add_argument("--conditions", type=_existing_file, default=None,
                        help="JSON list of initial-override maps")
    p_eval.add_argument("--duration", type=float, default=None,
                        help="seconds to simulate (default: auto-determined from reference)")
    p_eval.add_argument("--points", type=int, default=DEFAULT_N_POINTS)
    p_eval.add_argument("--noise-levels", type=_noise_levels, default=None,
                        metavar="L1,L2,...", help="run the robustness sweep at these levels")
    p_eval.add_argument("--replicates", type=int, default=3)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--sigma-proportional", action="store_true",
                        help="noise sigma = level*c0 instead of variance = level*c0")
    p_eval.add_argument("--out", type=Path, default=None,
                        help="directory for metrics.tsv and figures (default: stdout, no figures)")
    p_eval.add_argument("--no-figures", action="store_true")
    return parser


def cmd_curate(args) -> int:
    document = args.input.read_bytes()
    report = check_eligibility(document, sim_probe=True)
    if not report.accepted:
        reasons = ", ".join(report.reasons)
        detail = ("; ".join(report.messages)) if report.messages else ""
        return _fail(EXIT_ELIGIBILITY, f"ineligible input ({reasons})" + (f": {detail}" if detail else ""))
    try:
        task = curate_document(document, seed=args.seed, n_points=args.points)
    except CurationError as exc:
        return _fail(EXIT_ELIGIBILITY, str(exc))
    write_bundle(task, args.out)
    print(f"wrote bundle to {args.out} (duration {task.duration_s:g} s, "
          f"{task.n_points} points, seed {task.seed})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        model = parse_sbml(args.input.read_bytes())
    except SbmlParseError as exc:
        return _fail(EXIT_PARSE, f"parse failure: {exc}")
    try:
        duration = args.duration
        if duration is None:
            duration, _ = determine_duration(model)
        system = assemble(model)
        trajectory = simulate(system, dict(args.override), duration, args.points)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except SimulationError as exc:
        return _fail(EXIT_INTEGRATION, str(exc))
    sys.stdout.write(trajectory_to_csv(trajectory))
    if args.plot is not None:
        from .figures import plot_trajectory

        plot_trajectory(trajectory, args.plot)
    return EXIT_OK


def cmd_serve(args) -> int:
    try:
        task = read_bundle(args.bundle)
    except (SbmlParseError, OSError, KeyError, ValueError) as exc:
        return _fail(EXIT_PARSE, f"corrupt bundle: {exc}")
    config = SessionConfig(
        max_iterations=args.max_iterations,
        debug_attempts=args.debug_attempts,
        allow_knockout=args.with_knockout,
    )
    if args.stdio:
        transcript = args.log_dir / "session-stdio.jsonl" if args.log_dir else None
        serve_stdio(task, config, transcript)
        return EXIT_OK
    try:
        server = SessionServer((args.host, args.port), task, config, log_dir=args.log_dir)
    except OSError as exc:
        return _fail(EXIT_PROTOCOL, f"cannot bind {args.host}:{args.port}: {exc}")
    print(json.dumps({"event": "listening", "host": args.host, "port": server.port}),
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


def cmd_eval(args) -> int:
    try:
        predicted = parse_sbml(args.predicted.read_bytes())
        reference = parse_sbml(args.reference.read_bytes())
    except SbmlParseError as exc:
        return _fail(EXIT_PARSE, f"parse failure: {exc}")

    conditions = None
    if args.conditions is not None:
        try:
            conditions = json.loads(args.conditions.read_text())
        except json.JSONDecodeError as exc:
            return _fail(EXIT_USAGE, f"bad conditions file: {exc}")
        if not isinstance(conditions, list) or not all(isinstance(c, dict) for c in conditions):
            return _fail(EXIT_USAGE, "conditions file must hold a JSON list of objects")

    try:
        duration = args.duration
        if duration is None:
            duration, _ = determine_duration(reference)
        report = evaluate_models(
            predicted, reference,
            conditions=conditions,
            duration=duration,
            n_points=args.points,
            noise_levels=args.noise_levels,
            replicates=args.replicates,
            seed=args.seed,
            proportional_sigma=args.sigma_proportional,
        )
    except SimulationError as exc:
        return _fail(EXIT_INTEGRATION, f"reference simulation failed: {exc}")

    rendered = render_report(report)
    if args.out is None:
        sys.stdout.write(rendered)
        return EXIT_OK

    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "metrics.tsv").write_text(rendered)
    if not args.no_figures:
        from .figures import plot_robustness_curve, plot_trajectory_comparison

        ref_traj = simulate(assemble(reference), {}, duration, args.points)
        try:
            pred_traj = simulate(assemble(predicted), {}, duration, args.points)
            plot_trajectory_comparison(ref_traj, pred_traj, args.out / "trajectories.png")
        except (SimulationError, ValueError):
            pass
        if report.robustness:
            plot_robustness_curve(list(report.robustness), args.out / "robustness.png")
    print(f"wrote report to {args.out / 'metrics.tsv'}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    commands = {
        "curate": cmd_curate,
        "simulate": cmd_simulate,
        "serve": cmd_serve,
        "eval": cmd_eval,
    }
    return commands[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
