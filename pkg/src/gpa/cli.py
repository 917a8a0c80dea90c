"""Command-line interface: run model files end to end, check them, or emit
gnuplot scripts for the CSV outputs."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

from .analysis import AnalysisOptions, AnalysisRunner, ComparisonRun, SwitchPointReport
from .errors import GpaError
from .language import parse_model, validate
from .language import ast
from .moments import format_system
from .semantics import format_classes


@dataclass
class RunConfig:
    input_path: str
    out_dir: str = "."
    seed: int = 0
    threads: int = 1
    variance_method: str = "closure"
    dump_classes: bool = False
    dump_odes: bool = False
    sim_switchpoints: bool = False


def _fmt(x) -> str:
    return "%.17g" % x


def write_dataset_csv(grid, series, sink) -> None:
    """Header ``time,<label>,...`` then one row per grid point, 17 significant digits."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["time"] + [s.label for s in series])
    columns = [s.values for s in series]
    for j in range(len(grid)):
        writer.writerow([_fmt(grid[j])] + [_fmt(col[j]) for col in columns])


def write_switchpoint_csv(report: SwitchPointReport, path: Path) -> None:
    """Distance series per min term, plus a sidecar listing the crossing times."""
    with open(path, "w", newline="\n") as sink:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["time"] + list(report.labels))
        for j in range(len(report.grid)):
            writer.writerow([_fmt(report.grid[j])] + [_fmt(s[j]) for s in report.series])
    sidecar = path.with_suffix(".crossings.txt") if path.suffix == ".csv" else Path(str(path) + ".crossings.txt")
    with open(sidecar, "w", newline="\n") as sink:
        for label, times in zip(report.labels, report.crossings):
            sink.write(label + ": " + " ".join(_fmt(t) for t in times) + "\n")


def run_file(cfg: RunConfig) -> list:
    """Parse, validate and execute every analysis block; returns the written paths."""
    source = Path(cfg.input_path).read_text()
    vm = validate(parse_model(source))
    options = AnalysisOptions(
        seed=cfg.seed,
        threads=cfg.threads,
        variance_method=cfg.variance_method,
        sim_switchpoints=cfg.sim_switchpoints,
    )
    runner = AnalysisRunner(vm, options)
    if cfg.dump_classes:
        print(format_classes(runner.classes, runner.idx))
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list = []

    def emit(results, grid, stem):
        for j, res in enumerate(results):
            name = res.command.redirect or f"{stem(j)}.csv"
            path = out_dir / name
            path.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(res.payload, SwitchPointReport):
                write_switchpoint_csv(res.payload, path)
            else:
                with open(path, "w", newline="\n") as sink:
                    write_dataset_csv(grid, res.payload, sink)
            written.append(path)

    for i, block in enumerate(vm.analyses):
        run = runner.run_block(block)
        if isinstance(run, ComparisonRun):
            if cfg.dump_odes:
                print(format_system(run.odes.system))
            emit(run.odes.results, run.odes.dataset.grid, lambda j: f"{i}_odes_{j}")
            emit(run.simulation.results, run.simulation.dataset.grid, lambda j: f"{i}_sim_{j}")
            emit(run.results, run.odes.dataset.grid, lambda j: f"{i}_{j}")
        else:
            if cfg.dump_odes and isinstance(block, ast.OdesBlock):
                print(format_system(run.system))
            emit(run.results, run.dataset.grid, lambda j: f"{i}_{j}")
    return written


def gnuplot_script(csv_path: str) -> str:
    """A gnuplot script plotting every column of a written CSV against time."""
    with open(csv_path, newline="") as f:
        header = next(csv.reader(f))
    ncols = len(header)
    plots = ", ".join(f'"{csv_path}" using 1:{c} with lines' for c in range(2, ncols + 1))
    return (
        'set datafile separator ","\n'
        "set key autotitle columnhead\n"
        'set xlabel "time"\n'
        f"plot {plots}\n"
    )


def _report_error(path: str, exc: GpaError) -> None:
    if exc.line is not None:
        print(f"{path}:{exc.line}:{exc.col}: error: {exc.message}", file=sys.stderr)
    else:
        print(f"{path}: error: {exc.message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gpa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute all analyses in a model file")
    p_run.add_argument("input")
    p_run.add_argument("--out-dir", default=".")
    p_run.add_argument("--seed", type=int, default=0, help="master simulation seed (default 0)")
    p_run.add_argument("--threads", type=int, default=1)
    p_run.add_argument("--variance-method", choices=("closure", "lna"), default="closure")
    p_run.add_argument("--dump-classes", action="store_true", help="print the transition classes")
    p_run.add_argument("--dump-odes", action="store_true", help="print each generated ODE system")
    p_run.add_argument(
        "--sim-switchpoints",
        action="store_true",
        help="allow plotSwitchpoints inside simulation analyses (extension)",
    )

    p_check = sub.add_parser("check", help="parse and validate only")
    p_check.add_argument("input")

    p_gnu = sub.add_parser("gnuplot", help="emit a gnuplot script for a written CSV")
    p_gnu.add_argument("csv")

    args = parser.parse_args(argv)

    if args.command == "gnuplot":
        sys.stdout.write(gnuplot_script(args.csv))
        return 0

    if args.command == "check":
        try:
            source = Path(args.input).read_text()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        try:
            vm = validate(parse_model(source))
        except GpaError as exc:
            _report_error(args.input, exc)
            return 1
        print(
            f"ok: {len(vm.params)} parameters, {len(vm.source.component_defs)} components, "
            f"{len(vm.group_order)} groups, {len(vm.analyses)} analyses"
        )
        return 0

    cfg = RunConfig(
        input_path=args.input,
        out_dir=args.out_dir,
        seed=args.seed,
        threads=args.threads,
        variance_method=args.variance_method,
        dump_classes=args.dump_classes,
        dump_odes=args.dump_odes,
        sim_switchpoints=args.sim_switchpoints,
    )
    try:
        run_file(cfg)
    except GpaError as exc:
        _report_error(args.input, exc)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
