"""Command-line entry points: ``register``, ``bench`` and ``ablate``.

Exit codes: 0 success, 1 registration failed, 2 bad input or configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import List, Optional

from . import bench
from .config import PipelineConfig, build_config, load_config
from .errors import InputError, RegistrationError, RegistrationFailedError
from .pipeline import CloudSource, format_failure, format_report, register_files
from .verification import ScoreParams

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2

log = logging.getLogger("pyramidreg")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one configuration key (repeatable)")
    p.add_argument("--seed", type=int, help="random seed (overrides the config file)")
    p.add_argument("--out", help="write output here instead of standard output")
    p.add_argument("--jobs", type=int, default=1, help="maximum worker processes")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pyramidreg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    reg = sub.add_parser("register", help="register a source scan to a target")
    reg.add_argument("--src", required=True, help="source cloud (.xyz text or KITTI .bin)")
    reg.add_argument("--tgt", required=True, help="target cloud (.xyz text or KITTI .bin)")
    reg.add_argument("--src-labels", help="per-point labels for the source (.label or text)")
    reg.add_argument("--tgt-labels", help="per-point labels for the target (.label or text)")
    reg.add_argument("--src-landmarks", help="labeled XYZ file used directly as source landmarks")
    reg.add_argument("--tgt-landmarks", help="labeled XYZ file used directly as target landmarks")
    reg.add_argument("--timings", action="store_true", help="append the timing breakdown to the report")
    _common(reg)

    for name, helptext in (("bench", "run the synthetic success-rate suite"),
                           ("ablate", "run an ablation study")):
        b = sub.add_parser(name, help=helptext)
        b.add_argument("--trials", type=int, default=20)
        b.add_argument("--csv", help="also write the table as CSV to this path")
        b.add_argument("--overlap", type=float, default=0.3)
        b.add_argument("--spurious", type=float, default=0.5)
        b.add_argument("--noise", type=float, default=0.3, help="landmark noise sigma in meters")
        b.add_argument("--timings", action="store_true", help="include timing columns")
        if name == "ablate":
            b.add_argument("--variant", choices=("scores", "thresholds"), required=True)
        _common(b)
    return parser


def _config(args) -> PipelineConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise InputError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    if args.config:
        return load_config(args.config, overrides)
    return build_config(overrides)


def _emit(text: str, path: Optional[str]):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_register(args) -> int:
    try:
        cfg = _config(args)
        src = CloudSource(args.src, args.src_labels, args.src_landmarks)
        tgt = CloudSource(args.tgt, args.tgt_labels, args.tgt_landmarks)
        result = register_files(src, tgt, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RegistrationFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        sys.stderr.write(format_failure(exc.records))
        return EXIT_FAILED
    except RegistrationError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FAILED
    log.info("selected layer %d of %d", result.selected_layer, len(result.layers))
    try:
        _emit(format_report(result, include_timings=args.timings), args.out)
    except OSError as exc:
        print(f"error: {args.out}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def _scene(args, cfg: PipelineConfig) -> bench.SceneSpec:
    return bench.SceneSpec(overlap_fraction=args.overlap, spurious_fraction=args.spurious,
                           landmark_noise=args.noise, dof=cfg.dof, seed=cfg.seed)


def _bench_setup(args):
    if args.trials < 1:
        raise InputError("--trials must be at least 1")
    if args.jobs < 1:
        raise InputError("--jobs must be at least 1")
    cfg = _config(args)
    try:
        spec = _scene(args, cfg)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    criteria = bench.INDOOR_CRITERIA if cfg.dof == "SE2" else bench.OUTDOOR_CRITERIA
    return cfg, spec, criteria


def _write_tables(table: bench.Table, args):
    _emit(table.to_ascii(), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(table.to_csv())


def cmd_bench(args) -> int:
    try:
        cfg, spec, criteria = _bench_setup(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    scenes = [("full", replace(spec, overlap_fraction=1.0, spurious_fraction=0.0)), ("low", spec)]
    cfgs = [("pyramid", cfg)] + [(f"[{e:g}]", replace(cfg, thresholds=(e,))) for e in cfg.thresholds]
    table = bench.run_suite(scenes, cfgs, criteria, args.trials, jobs=args.jobs, include_timings=args.timings)
    _write_tables(table, args)
    return EXIT_OK


def cmd_ablate(args) -> int:
    try:
        cfg, spec, criteria = _bench_setup(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.variant == "scores":
        mus = (0.1, 1.0, 5.0) if cfg.dof == "SE2" else (0.1, 1.0)
        variants = [ScoreParams(cfg.score.mu, "euclidean", cfg.score.downsample_voxel)]
        variants += [ScoreParams(m, "trimmed", cfg.score.downsample_voxel) for m in mus]
        variants += [ScoreParams(m, "truncated", cfg.score.downsample_voxel) for m in mus]
        table = bench.ablate_score_variants(spec, variants, args.trials, cfg, criteria)
    else:
        table = bench.threshold_ablation(spec, cfg.thresholds, args.trials, cfg, criteria, jobs=args.jobs)
        if not args.timings:
            keep = ["thresholds", "trials", "success_pct", "oracle_pct"]
            slim = bench.Table(keep)
            for row in table.rows:
                slim.add(*(row[table.columns.index(c)] for c in keep))
            table = slim
    _write_tables(table, args)
    return EXIT_OK


COMMANDS = {"register": cmd_register, "bench": cmd_bench, "ablate": cmd_ablate}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
