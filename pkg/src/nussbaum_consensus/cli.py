"""Command-line entry point.

Exit codes: 0 success, 1 invalid input or failed validation, 2 divergence,
64 usage error.
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import ConfigError, LoadedConfig, dump_scenario, load_scenario
from .digraph import (
    GraphError,
    basis_bicomponents,
    has_jointly_strongly_connected_basis,
    laplacian,
    laplacian_rank,
    left_null_vector,
    load_graph,
    reduced_laplacian,
    strongly_connected_components,
)
from .metrics import diagnose
from .schedule import validate
from .simulate import DivergenceError, simulate

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_DIVERGED = 2
EXIT_USAGE = 64
OUTPUT_ENV = "NUSSBAUM_CONSENSUS_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt_set(members) -> str:
    return "{" + ",".join(str(i + 1) for i in sorted(members)) + "}"


def cmd_analyze(args, out=None) -> int:
    out = out or sys.stdout
    graphs = []
    for path in args.files:
        try:
            graphs.append(load_graph(path))
        except OSError as exc:
            print(f"error: {path}: {exc.strerror}", file=sys.stderr)
            return EXIT_INVALID
        except GraphError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
    for path, g in zip(args.files, graphs):
        lap = laplacian(g)
        bases = basis_bicomponents(g)
        print(f"[{path}]", file=out)
        print(f"n = {g.n}", file=out)
        sccs = sorted(strongly_connected_components(g), key=min)
        print(f"sccs = {' '.join(_fmt_set(c) for c in sccs)}", file=out)
        print(f"basis_bicomponents = {' '.join(_fmt_set(c) for c in bases)}", file=out)
        print(f"d = {len(bases)}", file=out)
        print(f"rank = {laplacian_rank(lap)}", file=out)
        for comp in bases:
            omega = left_null_vector(reduced_laplacian(lap, comp))
            print(f"omega{_fmt_set(comp)} = {','.join(repr(float(w)) for w in omega)}", file=out)
        print(file=out)
    if len({g.n for g in graphs}) == 1:
        verdict = has_jointly_strongly_connected_basis(graphs)
        print(f"joint_basis = {str(verdict).lower()}", file=out)
    else:
        print("joint_basis = n/a (agent counts differ)", file=out)
    return EXIT_OK


def _load(path) -> LoadedConfig | None:
    try:
        return load_scenario(path)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_validate(args, out=None) -> int:
    out = out or sys.stdout
    loaded = _load(args.config)
    if loaded is None:
        return EXIT_INVALID
    report = validate(loaded.scenario.schedule, step=loaded.scenario.step)
    for line in report.lines():
        print(line, file=out)
    return EXIT_OK if report.passed else EXIT_INVALID


def _output_dir(out_dir, loaded: LoadedConfig, many: bool) -> Path:
    if out_dir is not None:
        base = Path(out_dir)
        return base / loaded.source.stem if many else base
    if loaded.output_dir is not None:
        return loaded.output_dir
    return Path(os.environ.get(OUTPUT_ENV, "runs")) / loaded.source.stem


def run_one(config, overrides: dict, out_dir: str | None, dump: bool, many: bool = False) -> tuple[int, str]:
    """Simulate one scenario file; returns (exit code, printable summary)."""
    loaded = _load(config)
    if loaded is None:
        return EXIT_INVALID, ""
    try:
        sc = loaded.scenario.replace(**overrides) if overrides else loaded.scenario
    except ValueError as exc:
        print(f"error: {config}: {exc}", file=sys.stderr)
        return EXIT_INVALID, ""
    target = _output_dir(out_dir, loaded, many)
    target.mkdir(parents=True, exist_ok=True)
    if dump:
        (target / "scenario.toml").write_text(dump_scenario(sc, target))

    validation = validate(sc.schedule, step=sc.step)
    try:
        tr = simulate(sc)
    except DivergenceError as exc:
        print(f"error: {config}: diverged at t = {exc.t!r}", file=sys.stderr)
        return EXIT_DIVERGED, ""
    except ValueError as exc:
        print(f"error: {config}: {exc}", file=sys.stderr)
        return EXIT_INVALID, ""

    tr.to_csv(target / "trajectory.csv")
    report = diagnose(tr, sc.gains)
    report.to_csv(target / "diagnostics.csv")
    lines = [f"config = {config}", f"model = {sc.model}", f"horizon = {sc.horizon!r}", f"step = {sc.step!r}"]
    lines += [f"schedule_{line}" for line in validation.lines()]
    lines += report.lines()
    (target / "report.txt").write_text("\n".join(lines) + "\n")
    return EXIT_OK, "\n".join(lines + [f"output = {target}"])


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    overrides = {}
    if args.model is not None:
        overrides["model"] = args.model
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if args.step is not None:
        overrides["step"] = args.step
    many = len(args.configs) > 1
    jobs = [(c, overrides, args.out, args.dump_config, many) for c in args.configs]
    if args.jobs > 1 and many:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, *zip(*jobs)))
    else:
        results = [run_one(*job) for job in jobs]
    for _, summary in results:
        if summary:
            print(summary, file=out)
            print(file=out)
    return max(code for code, _ in results)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nussbaum-consensus", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("analyze", help="connectivity structure of graph files")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("validate", help="check a scenario's switching schedule")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run scenarios and write trajectories and diagnostics")
    p.add_argument("configs", nargs="+", metavar="config")
    p.add_argument("--model", choices=("si", "di"))
    p.add_argument("--horizon", type=float)
    p.add_argument("--step", type=float)
    p.add_argument("--out", help=f"output directory (default: from the config, else ${OUTPUT_ENV} or ./runs)")
    p.add_argument("--dump-config", action="store_true", help="also write the resolved scenario as scenario.toml")
    p.add_argument("--jobs", type=int, default=1, help="run several config files in parallel")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
