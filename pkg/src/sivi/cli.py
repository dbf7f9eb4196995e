"""Command-line interface for the benchmark experiments.

Subcommands: `example1` and `example2` reproduce the two benchmark studies,
`solve` runs the solver on a linear-Gaussian problem described by a JSON file,
and `verify` executes the library's invariant suites. Every run writes CSVs
plus a key-value metadata file from which the CSVs can be regenerated.

Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_verify_suites
from .feasible import BoxSet, PolyhedronSet, ProjectionError
from .harness import (
    METADATA_FORMAT,
    export_csv,
    read_run_metadata,
    run_replications,
    write_run_metadata,
)
from .numkit import EigenSolveError, NonFiniteError
from .oracle import BatchSchedule, additive_gaussian_oracle
from .problems import InnerSolveError, build_example1, build_example2
from .solver import DivergedError, SiviProblem, SolverConfig, solve

_NUMERICAL_FAILURES = (
    DivergedError,
    ProjectionError,
    InnerSolveError,
    EigenSolveError,
    NonFiniteError,
    FloatingPointError,
    RuntimeError,
)

_AUTO_CAP_THRESHOLD = 1000
_AUTO_CAP = 10_000


def _add_run_flags(parser: argparse.ArgumentParser, default_eta: float, default_iters: int) -> None:
    parser.add_argument("--eta", type=float, default=default_eta, help="projection step size")
    parser.add_argument("--delta", type=float, default=0.5, help="batch growth exponent offset")
    parser.add_argument("--reps", type=int, default=None,
                        help="replication count (default 20, or 1 with --deterministic)")
    parser.add_argument("--iters", type=int, default=default_iters, help="iteration horizon")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--cap", default=None,
                        help='batch-size cap: integer or "none" '
                             f"(default: none up to {_AUTO_CAP_THRESHOLD} iterations, {_AUTO_CAP} beyond)")
    parser.add_argument("--deterministic", action="store_true", help="turn oracle noise off")
    parser.add_argument("--record-every", type=int, default=1, help="record cadence in iterations")
    parser.add_argument("--out", default=None, help="output directory (default <command>_out)")
    parser.add_argument("--gap-mode", default="exact",
                        help='"exact" or "mc:M" for a fresh Monte Carlo gap batch of size M')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sivi",
        description="Benchmarks for a projection-based stochastic inverse variational inequality solver.",
    )
    parser.add_argument("--version", action="version", version=f"sivi {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p1 = sub.add_parser("example1", help="3-dimensional linear benchmark with known solution")
    _add_run_flags(p1, default_eta=4.0, default_iters=200)

    p2 = sub.add_parser("example2", help="network equilibrium control benchmark")
    _add_run_flags(p2, default_eta=1.0, default_iters=100)
    p2.add_argument("--inner-sign", choices=("standard", "literal"), default="standard",
                    help="inner equilibrium sign convention (literal is indefinite and fails loudly)")

    ps = sub.add_parser("solve", help="solve a linear-Gaussian problem from a JSON config file")
    ps.add_argument("--config", required=True, help="path to the problem JSON")
    _add_run_flags(ps, default_eta=1.0, default_iters=200)

    pv = sub.add_parser("verify", help="run the library invariant suites")
    pv.add_argument("--seed", type=int, default=7)
    pv.add_argument("--pairs", type=int, default=2000, help="random pairs per projection property")
    return parser


def _parse_cap(raw, iterations: int) -> int | None:
    if raw is None:
        return None if iterations <= _AUTO_CAP_THRESHOLD else _AUTO_CAP
    if isinstance(raw, str) and raw.lower() == "none":
        return None
    return int(raw)


def _parse_gap_mode(raw: str) -> tuple[str, int | None]:
    if raw == "exact":
        return "exact", None
    if raw.startswith("mc:"):
        return "mc", int(raw.split(":", 1)[1])
    if raw == "mc":
        return "mc", None
    raise ValueError(f'invalid --gap-mode "{raw}" (expected "exact" or "mc:M")')


def _solver_config(args) -> tuple[SolverConfig, int]:
    cap = _parse_cap(args.cap, args.iters)
    gap_mode, gap_batch = _parse_gap_mode(args.gap_mode)
    reps = args.reps if args.reps is not None else (1 if args.deterministic else 20)
    config = SolverConfig(
        eta=args.eta,
        iterations=args.iters,
        schedule=BatchSchedule(args.delta, cap=cap),
        master_seed=args.seed,
        gap_mode=gap_mode,
        gap_batch=gap_batch,
        record_every=args.record_every,
    )
    return config, reps


def _vector_text(values) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values).ravel())


def _base_metadata(command: str, args, config: SolverConfig, reps: int) -> dict[str, str]:
    entries = {
        "format": METADATA_FORMAT,
        "version": __version__,
        "command": command,
        "eta": repr(float(args.eta)),
        "delta": repr(float(args.delta)),
        "reps": str(reps),
        "iters": str(args.iters),
        "seed": str(args.seed),
        "cap": "none" if config.schedule.cap is None else str(config.schedule.cap),
        "deterministic": str(bool(args.deterministic)),
        "record_every": str(args.record_every),
        "gap_mode": args.gap_mode,
    }
    return entries


def metadata_to_argv(entries: dict[str, str], out_dir: str) -> list[str]:
    """Reconstruct an equivalent CLI invocation from a metadata file's entries."""
    if entries.get("format") != METADATA_FORMAT:
        raise ValueError(f"unsupported metadata format {entries.get('format')!r}")
    command = entries["command"]
    argv = [
        command,
        "--eta", entries["eta"],
        "--delta", entries["delta"],
        "--reps", entries["reps"],
        "--iters", entries["iters"],
        "--seed", entries["seed"],
        "--cap", entries["cap"],
        "--record-every", entries["record_every"],
        "--gap-mode", entries["gap_mode"],
        "--out", out_dir,
    ]
    if entries.get("deterministic") == "True":
        argv.append("--deterministic")
    if command == "example2":
        argv += ["--inner-sign", entries["inner_sign"]]
    if command == "solve":
        argv += ["--config", entries["config_path"]]
    return argv


def _write_outputs(out_dir: Path, config: SolverConfig, reps: int, problem_builder, metadata: dict[str, str]) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if reps == 1:
        trace = solve(problem_builder(), config, replication=0)
        export_csv(trace, out_dir / "trace.csv")
        metadata["csv_files"] = "trace.csv"
        final_err = trace.final_error()
        closing = f"final gap {trace.records[-1].gap_norm:.3e}"
        if final_err is not None:
            closing += f", final err {final_err:.3e}"
    else:
        stats = run_replications(problem_builder, config, reps)
        export_csv(stats, out_dir / "stats.csv")
        export_csv(stats.traces[0], out_dir / "trace_rep0.csv")
        metadata["csv_files"] = "stats.csv trace_rep0.csv"
        if stats.failures:
            metadata["failed_replications"] = "; ".join(msg for _, msg in stats.failures)
            print(f"warning: {len(stats.failures)} replication(s) diverged", file=sys.stderr)
        closing = f"mean final gap {stats.metrics['gap_norm'].mean[-1]:.3e} over {stats.n_replications} replications"
    write_run_metadata(out_dir / "run_metadata.txt", metadata)
    print(f"{metadata['command']}: {closing}; outputs in {out_dir}")


def _cmd_example1(args) -> int:
    config, reps = _solver_config(args)
    metadata = _base_metadata("example1", args, config, reps)
    out_dir = Path(args.out) if args.out else Path("example1_out")
    _write_outputs(out_dir, config, reps, lambda: build_example1(deterministic=args.deterministic), metadata)
    return 0


def _cmd_example2(args) -> int:
    config, reps = _solver_config(args)
    metadata = _base_metadata("example2", args, config, reps)
    metadata["inner_sign"] = args.inner_sign
    _, model = build_example2(args.seed, deterministic=args.deterministic, inner_sign=args.inner_sign)
    metadata["alpha"] = _vector_text(model.alpha)
    metadata["beta"] = _vector_text(model.beta)
    for row_index in range(model.q):
        metadata[f"L_row_{row_index}"] = _vector_text(model.L[row_index])
    metadata["b"] = _vector_text(model.b)
    out_dir = Path(args.out) if args.out else Path("example2_out")
    builder = lambda: build_example2(args.seed, deterministic=args.deterministic, inner_sign=args.inner_sign)[0]
    _write_outputs(out_dir, config, reps, builder, metadata)
    return 0


def problem_from_config(spec: dict) -> SiviProblem:
    """Build a linear-Gaussian problem G(x) = A x + offset + noise from a JSON dict."""
    matrix = np.asarray(spec["matrix"], dtype=np.float64)
    offset = np.asarray(spec["offset"], dtype=np.float64)
    dim = offset.shape[0]
    noise_scale = float(spec.get("noise_scale", 1.0))
    box = BoxSet(spec["box_lo"], spec["box_hi"])
    feasible = box
    if "halfspace_L" in spec:
        feasible = PolyhedronSet(box, spec["halfspace_L"], spec["halfspace_b"])
    oracle = additive_gaussian_oracle(
        lambda x: matrix @ x + offset, dim=dim, noise_scale=noise_scale, name=spec.get("name", "custom")
    )
    return SiviProblem(
        oracle=oracle,
        feasible_set=feasible,
        x0=np.asarray(spec.get("x0", np.zeros(dim)), dtype=np.float64),
        x_star=None if "x_star" not in spec else np.asarray(spec["x_star"], dtype=np.float64),
        name=spec.get("name", "custom"),
        deterministic=noise_scale == 0.0,
    )


def _cmd_solve(args) -> int:
    spec = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if args.deterministic:
        spec = dict(spec, noise_scale=0.0)
    config, reps = _solver_config(args)
    metadata = _base_metadata("solve", args, config, reps)
    metadata["config_path"] = str(args.config)
    metadata["config_json"] = json.dumps(spec, sort_keys=True)
    out_dir = Path(args.out) if args.out else Path("solve_out")
    _write_outputs(out_dir, config, reps, lambda: problem_from_config(spec), metadata)
    return 0


def _cmd_verify(args) -> int:
    results = run_verify_suites(seed=args.seed, n_pairs=args.pairs)
    for result in results:
        print(result)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cli_main(argv: list[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    handlers = {
        "example1": _cmd_example1,
        "example2": _cmd_example2,
        "solve": _cmd_solve,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except _NUMERICAL_FAILURES as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def rerun_from_metadata(metadata_path, out_dir) -> int:
    """Regenerate a run's CSVs from its metadata file into a new directory."""
    entries = read_run_metadata(metadata_path)
    return cli_main(metadata_to_argv(entries, str(out_dir)))


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
