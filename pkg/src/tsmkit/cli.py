"""Command-line front end.

Exit codes: 0 success, 2 configuration/usage error, 3 numeric or domain
error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis, ays
from .config import ConfigError, RunConfig, load_config
from .fileio import (FileFormatError, atomic_write, partition_file, read_label_file, set_file,
                     write_label_file)
from .grid import PointSet
from .system import DomainError, ParameterError, UsageError
from .tsm import Region, classify_point, relative_volumes, tsm_partition
from .viability import SuccessorMap, capture_basin, viability_kernel

log = logging.getLogger("tsmkit")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4


def _controls_arg(values):
    if not values:
        return None
    out = []
    for v in values:
        out.extend(u.strip() for u in v.split(",") if u.strip())
    return tuple(out)


def _run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(
        resolution=getattr(args, "resolution", None),
        controls=_controls_arg(getattr(args, "control", None)),
        workers=getattr(args, "workers", None),
        seed=getattr(args, "seed", None),
        out=getattr(args, "out", None),
    )


def _output(cfg: RunConfig, default: str) -> Path:
    return Path(cfg.out or default)


def _table(header_lines, columns, rows) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v: float) -> str:
    return repr(float(v))


def _metadata(cfg: RunConfig) -> dict:
    return {"model": cfg.model, "config_hash": cfg.hash()}


# commands

def cmd_partition(args) -> int:
    cfg = _run_config(args)
    out = _output(cfg, "partition.tsm")
    t0 = time.perf_counter()
    grid = cfg.grid()
    result = tsm_partition(cfg.system(), cfg.desirable(), grid, cfg.successor_config(grid),
                           controls=cfg.controls, workers=cfg.workers, metadata=_metadata(cfg))
    wall = time.perf_counter() - t0
    write_label_file(out, partition_file(result, cfg.axes(), cfg.echo()))
    counts = result.counts
    fractions = relative_volumes(result)
    iters = " ".join(f"{k}={v}" for k, v in result.metadata["iterations"].items())
    text = _table(
        [f"tsmkit partition {out.name}", f"config_hash={cfg.hash()}",
         f"resolution={cfg.resolution}", f"iterations {iters}", f"wall_time_s={wall:.3f}"],
        ["region", "code", "count", "fraction"],
        [[r.name, int(r), counts[r.name], _fmt(fractions[r.name])] for r in Region])
    if args.summary:
        try:
            atomic_write(args.summary, text.encode())
        except OSError:
            out.unlink(missing_ok=True)
            raise
    sys.stdout.write(text)
    return EXIT_OK


def _successor_map(cfg: RunConfig, controls):
    grid = cfg.grid()
    return grid, SuccessorMap.build(grid, cfg.system(), cfg.successor_config(grid), controls,
                                    cfg.workers)


def cmd_kernel(args) -> int:
    cfg = _run_config(args)
    out = _output(cfg, "kernel.tsm")
    grid, succ = _successor_map(cfg, cfg.controls)
    constraint = PointSet.from_predicate(grid, cfg.desirable())
    kernel, stats = viability_kernel(constraint, succ, return_stats=True)
    meta = _metadata(cfg) | {"operation": "kernel", "constraint": "desirable",
                             "controls": list(succ.controls), "iterations": stats.iterations}
    write_label_file(out, set_file("kernel", kernel, cfg.axes(), cfg.echo(), meta,
                                   _compact_map(cfg)))
    print(f"kernel,{len(kernel)},{grid.size},{stats.iterations}")
    return EXIT_OK


def _named_set(name: str, cfg: RunConfig, grid, succ) -> PointSet:
    plus = PointSet.from_predicate(grid, cfg.desirable())
    if name == "desirable":
        return plus
    if name == "undesirable":
        return ~plus
    if name == "shelter":
        return viability_kernel(plus, succ, controls=(succ.default,))
    if name == "empty":
        return PointSet.empty(grid)
    if name == "all":
        return PointSet.full(grid)
    raise UsageError(f"unknown set {name!r}")


def cmd_capture(args) -> int:
    cfg = _run_config(args)
    out = _output(cfg, "capture.tsm")
    grid, succ = _successor_map(cfg, cfg.controls)
    target = _named_set(args.target, cfg, grid, succ)
    if not target:
        log.warning("capture target %r is empty; the basin is empty", args.target)
    constraint = None if args.constraint == "all" else _named_set(args.constraint, cfg, grid, succ)
    basin, stats = capture_basin(target, constraint, succ, return_stats=True)
    meta = _metadata(cfg) | {"operation": "capture", "target": args.target,
                             "constraint": args.constraint, "controls": list(succ.controls),
                             "iterations": stats.iterations}
    write_label_file(out, set_file("capture", basin, cfg.axes(), cfg.echo(), meta,
                                   _compact_map(cfg)))
    print(f"capture,{len(basin)},{grid.size},{stats.iterations}")
    return EXIT_OK


def _compact_map(cfg: RunConfig):
    return cfg.params.compact_map if cfg.model == "ays" else None


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    if cfg.model != "ays":
        raise UsageError("sweeps need the ays model")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.log:
        values = np.geomspace(args.start, args.stop, args.steps)
    else:
        values = np.linspace(args.start, args.stop, args.steps)
    options = dict(epsilon=cfg.epsilon, controls=cfg.controls or ays.CONTROLS,
                   mode=cfg.expansion_mode, lipschitz=cfg.lipschitz, dt=cfg.dt,
                   dt_factor=cfg.dt_factor)
    res = args.resolution or 40
    spec = analysis.SweepSpec(args.param, values, cfg.params, res, options)
    rows = analysis.bifurcation_sweep(spec, workers=cfg.workers)
    names = [r.name for r in Region]
    table = []
    for row in rows:
        fr = row.fractions or {}
        table.append([_fmt(row.value)] + [_fmt(fr[n]) if fr else "" for n in names]
                     + [row.error or ""])
    text = _table([f"tsmkit sweep {args.param}", f"config_hash={cfg.hash()}",
                   f"resolution={res}"], [args.param] + names + ["error"], table)
    atomic_write(_output(cfg, "sweep.csv"), text.encode())
    sys.stdout.write(text)
    failed = sum(r.error is not None for r in rows)
    return EXIT_NUMERIC if failed == len(rows) else EXIT_OK


def cmd_classify(args) -> int:
    lf = read_label_file(args.partition)
    result = lf.to_result()
    if args.state is not None:
        try:
            state = [float(v) for v in args.state.split(",")]
        except ValueError:
            raise UsageError(f"cannot parse state {args.state!r}") from None
    else:
        state = [args.A, args.Y, args.S]
        if any(v is None for v in state):
            raise UsageError("give --state or all of --A, --Y, --S")
    if len(state) != lf.grid.n:
        raise UsageError(f"state has {len(state)} components, partition has {lf.grid.n}")
    print(classify_point(np.array(state), result).name)
    return EXIT_OK


def cmd_flow(args) -> int:
    cfg = _run_config(args)
    if cfg.model != "ays":
        raise UsageError("flow sampling needs the ays model")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    control = args.flow_control or ays.DEFAULT
    if control not in (cfg.controls or ays.CONTROLS):
        raise UsageError(f"unknown control {control!r}")
    trajs = analysis.flow_sample(cfg.system(), args.count, cfg.seed, control,
                                 t_end=args.t_end, step=args.step)
    outdir = _output(cfg, "flow")
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        index = []
        for i, tr in enumerate(trajs):
            name = f"traj_{i:05d}.csv"
            rows = [[_fmt(t)] + [_fmt(v) for v in x] for t, x in zip(tr.times, tr.states)]
            text = _table([f"control={control}", f"attractor={tr.attractor}",
                           f"exited={int(tr.exited)}"], ["t"] + cfg.axes(), rows)
            atomic_write(outdir / name, text.encode())
            written.append(outdir / name)
            index.append([name, tr.attractor, int(tr.exited), len(tr)])
        text = _table([f"tsmkit flow control={control}", f"config_hash={cfg.hash()}",
                       f"seed={cfg.seed}", f"green_fraction={analysis.green_fraction(trajs)!r}"],
                      ["file", "attractor", "exited", "samples"], index)
        atomic_write(outdir / "index.csv", text.encode())
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    print(f"flow,{len(trajs)},green_fraction={analysis.green_fraction(trajs)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsmkit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="run configuration file (key = value lines)")
        sp.add_argument("--resolution", type=int, help="lattice points per axis")
        sp.add_argument("--control", action="append",
                        help="control subset, comma-separated or repeated")
        sp.add_argument("--workers", type=int, help="worker count")
        if out:
            sp.add_argument("--out", help="output path")

    sp = sub.add_parser("partition", help="full region partition")
    common(sp)
    sp.add_argument("--summary", help="also write the summary table here")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("kernel", help="viability kernel of the desirable region")
    common(sp)
    sp.set_defaults(func=cmd_kernel)

    sets = ["desirable", "undesirable", "shelter", "empty", "all"]
    sp = sub.add_parser("capture", help="capture basin of a named target set")
    common(sp)
    sp.add_argument("--target", choices=sets, default="desirable")
    sp.add_argument("--constraint", choices=sets, default="all")
    sp.set_defaults(func=cmd_capture)

    sp = sub.add_parser("sweep", help="partition fractions over a parameter range")
    common(sp)
    sp.add_argument("--param", choices=analysis.SWEEP_PARAMS, required=True)
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--steps", type=int, default=21)
    sp.add_argument("--log", action="store_true", help="geometric spacing")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("classify", help="region of a state in a partition file")
    sp.add_argument("--partition", default="partition.tsm")
    sp.add_argument("--A", type=float, help="excess atmospheric carbon [GtC]")
    sp.add_argument("--Y", type=float, help="economic output [US$/a]")
    sp.add_argument("--S", type=float, help="renewable knowledge stock [GJ]")
    sp.add_argument("--state", help="comma-separated state in original coordinates")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("flow", help="sample trajectories of the homogenized flow")
    common(sp)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--flow-control", help="control applied along the trajectories")
    sp.add_argument("--t-end", type=float, default=20.0)
    sp.add_argument("--step", type=float, default=0.01)
    sp.set_defaults(func=cmd_flow)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileFormatError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, ParameterError, ArithmeticError, AssertionError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
