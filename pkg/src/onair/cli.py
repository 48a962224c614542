"""Command line interface.

Subcommands: ``synth``, ``mask``, ``reconstruct``, ``metrics`` and
``sweep``. Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 numerical degeneracy.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import logging
import math
import shutil
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .config import ExperimentConfig, load_config
from .errors import ConfigError, NumericalDegeneracyError
from .masks import MaskSpec, gen_mask
from .metrics import MetricReport
from .patches import PatchConfig
from .pipeline import BATCH, MeasurementStream, batch_reconstruct, reconstruct_stream
from .sensing import SensingOperator
from .synth import noise_std_for_snr, synth_phantom, synth_planted

log = logging.getLogger("onair")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

RECONSTRUCTION = "reconstruction.oatf"
DICTIONARY = "dictionary.oatf"
METRICS = "metrics.csv"


@dataclass
class ExperimentResult:
    frames: np.ndarray
    report: MetricReport | None
    output_dir: Path
    diagnostics: list


def _read_video(path, what):
    try:
        x = io.read_tensor(path)
    except FileNotFoundError:
        raise FileNotFoundError(f"{what} file not found: {path}") from None
    if x.ndim != 3:
        raise ConfigError(f"{what} {path}: expected a 3-D (N_x, N_y, T) tensor, got shape {x.shape}")
    return x


def _build_source(cfg: ExperimentConfig):
    """Measurement source and (optional) reference frames."""
    data = _read_video(cfg.input, "input")
    if cfg.mask_file is not None:
        masks = _read_video(cfg.mask_file, "mask") != 0
        if masks.shape != data.shape:
            raise ConfigError(f"mask_file: shape {masks.shape} does not match input {data.shape}")
    else:
        masks = gen_mask(cfg.mask, data.shape[:2], data.shape[2])
    op = SensingOperator(cfg.sensing, masks)
    reference = None
    if cfg.input_kind == "frames":
        noise = 0.0
        if not math.isinf(cfg.noise_snr_db):
            noise = noise_std_for_snr(op.apply(data), cfg.noise_snr_db)
        source = MeasurementStream.simulate(data, op, noise, seed=cfg.seed)
        reference = data
    else:
        source = MeasurementStream(op, data * masks)
    if cfg.reference is not None:
        reference = _read_video(cfg.reference, "reference")
        if reference.shape != data.shape:
            raise ConfigError(f"reference: shape {reference.shape} does not match input {data.shape}")
    return source, reference


def run_experiment(cfg: ExperimentConfig | str | Path, seed: int | None = None,
                   output_dir: str | Path | None = None) -> ExperimentResult:
    """Reconstruct per ``cfg`` and write the reconstruction, dictionary and metrics.

    On any error the files written so far are removed (and the output
    directory too if this call created it) before the exception propagates.
    """
    if not isinstance(cfg, ExperimentConfig):
        cfg = load_config(cfg)
    if seed is not None:
        cfg = cfg.with_overrides(seed=seed)
    out = Path(output_dir) if output_dir is not None else cfg.output_dir

    source, reference = _build_source(cfg)
    dictionary = None
    if cfg.initial_dictionary is not None:
        dictionary = io.read_dictionary(cfg.initial_dictionary).atoms

    created = not out.exists()
    written = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.onair.variant == BATCH:
            result = batch_reconstruct(source, cfg.onair, dictionary=dictionary)
        else:
            result = reconstruct_stream(source, cfg.onair, dictionary=dictionary)
        report = MetricReport.compute(result.frames, reference) if reference is not None else None
        for name in (RECONSTRUCTION, DICTIONARY, DICTIONARY + ".meta", METRICS):
            written.append(out / name)
        io.write_tensor(out / RECONSTRUCTION, result.frames)
        io.write_dictionary(out / DICTIONARY, result.dictionary)
        io.emit_metrics(report, result.diagnostics, out / METRICS)
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created:
            shutil.rmtree(out, ignore_errors=True)
        raise
    if report is not None:
        log.info("psnr_3d %.3f dB, nrmse %.4f %%", report.psnr_3d, report.nrmse_percent)
    return ExperimentResult(result.frames, report, out, result.diagnostics)


def _dims(text):
    try:
        parts = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected AxB, got {text!r}") from None
    if len(parts) != 2 or min(parts) < 1:
        raise argparse.ArgumentTypeError(f"expected two positive sizes AxB, got {text!r}")
    return parts


def _cmd_synth(args):
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.kind == "phantom":
        io.write_tensor(out, synth_phantom(args.frame_dims, args.frames, args.motion, args.rate))
        return EXIT_OK
    patch = PatchConfig(tuple(args.patch), tuple(args.patch[:2]), args.patch[2])
    data = synth_planted(patch, args.atoms, args.frames, args.frame_dims, args.sparsity, args.snr_db,
                         args.seed, rank=args.rank, unitary=args.unitary)
    io.write_tensor(out, data.frames)
    if args.clean:
        io.write_tensor(args.clean, data.clean)
    if args.dictionary:
        io.write_tensor(args.dictionary, data.dictionary)
    return EXIT_OK


def _cmd_mask(args):
    spec = MaskSpec(pattern=args.pattern, keep_fraction=args.fraction, acceleration=args.accel,
                    seed=args.seed, per_frame=not args.static, num_lines=args.lines)
    io.write_tensor(args.out, gen_mask(spec, args.frame_dims, args.frames).astype(np.float64))
    return EXIT_OK


def _cmd_reconstruct(args):
    res = run_experiment(args.config, seed=args.seed, output_dir=args.output_dir)
    if not args.quiet:
        print(f"wrote {res.output_dir}")
        if res.report is not None:
            print(f"psnr_3d {res.report.psnr_3d:.4f}  nrmse_percent {res.report.nrmse_percent:.4f}")
    return EXIT_OK


def _cmd_metrics(args):
    x = _read_video(args.reconstruction, "reconstruction")
    ref = _read_video(args.reference, "reference")
    report = MetricReport.compute(x, ref)
    if args.out:
        io.emit_metrics(report, [], args.out)
    if not args.quiet:
        print(f"psnr_3d {report.psnr_3d:.4f}")
        print(f"nrmse_percent {report.nrmse_percent:.4f}")
        for k, v in enumerate(report.psnr_per_frame):
            print(f"psnr_frame_{k} {v:.4f}")
    return EXIT_OK


def _sweep_one(job):
    cfg, out = job
    try:
        res = run_experiment(cfg, output_dir=out)
    except (NumericalDegeneracyError, ArithmeticError) as exc:
        return cfg.onair.lam_s, cfg.onair.lam_z, math.nan, math.nan, f"degenerate: {exc}"
    r = res.report
    return cfg.onair.lam_s, cfg.onair.lam_z, r.psnr_3d, r.nrmse_percent, "ok"


def run_sweep(cfg: ExperimentConfig, lambda_s, lambda_z, output_dir, workers: int = 1):
    """Grid over ``lambda_s x lambda_z``; rows sorted by decreasing PSNR."""
    output_dir = Path(output_dir)
    if cfg.input_kind != "frames" and cfg.reference is None:
        raise ConfigError("reference: sweep needs reference frames to rank configurations")
    jobs = []
    for ls, lz in itertools.product(lambda_s, lambda_z):
        sub = cfg.with_overrides(lambda_s=repr(float(ls)), lambda_z=repr(float(lz)))
        jobs.append((sub, output_dir / f"ls_{ls:g}_lz_{lz:g}"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    rows.sort(key=lambda r: (-r[2] if not math.isnan(r[2]) else math.inf, r[0], r[1]))
    output_dir.mkdir(parents=True, exist_ok=True)
    with open(output_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("rank", "lambda_s", "lambda_z", "psnr_3d", "nrmse_percent", "status"))
        for k, (ls, lz, p, e, status) in enumerate(rows, 1):
            w.writerow((k, repr(ls), repr(lz), repr(p), repr(e), status))
    return rows


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _cmd_sweep(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    out = Path(args.output_dir) if args.output_dir else cfg.output_dir
    rows = run_sweep(cfg, args.lambda_s, args.lambda_z, out, args.workers)
    if not args.quiet:
        print(f"{'rank':>4} {'lambda_s':>10} {'lambda_z':>10} {'psnr_3d':>9} {'nrmse_%':>9}")
        for k, (ls, lz, p, e, _) in enumerate(rows, 1):
            print(f"{k:>4} {ls:>10.4g} {lz:>10.4g} {p:>9.3f} {e:>9.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", help="only print errors")

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument("--config", required=True, help="key=value experiment file")
    run.add_argument("--seed", type=int, help="overrides the config seed")
    run.add_argument("--output-dir", help="overrides output_dir from the config")

    p = argparse.ArgumentParser(prog="onair", description="Online adaptive image reconstruction.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic video")
    s.add_argument("kind", choices=("planted", "phantom"))
    s.add_argument("--out", required=True)
    s.add_argument("--frame-dims", type=_dims, default=(64, 64))
    s.add_argument("--frames", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--patch", type=int, nargs=3, default=(4, 4, 5), metavar=("NX", "NY", "NT"))
    s.add_argument("--atoms", type=int, default=80)
    s.add_argument("--sparsity", type=int, default=3)
    s.add_argument("--snr-db", type=float, default=math.inf)
    s.add_argument("--rank", type=int)
    s.add_argument("--unitary", action="store_true")
    s.add_argument("--clean", help="also write the noiseless frames here")
    s.add_argument("--dictionary", help="also write the planted dictionary here")
    s.add_argument("--motion", choices=("none", "translate", "intensity-ramp"), default="translate")
    s.add_argument("--rate", type=float)
    s.set_defaults(func=_cmd_synth)

    m = sub.add_parser("mask", parents=[common], help="write a sampling mask tensor")
    m.add_argument("--out", required=True)
    m.add_argument("--pattern", choices=("uniform", "cartesian", "radial"), default="uniform")
    m.add_argument("--frame-dims", type=_dims, default=(64, 64))
    m.add_argument("--frames", type=int, default=20)
    m.add_argument("--fraction", type=float, default=0.5)
    m.add_argument("--accel", type=float, default=1.0)
    m.add_argument("--lines", type=int)
    m.add_argument("--static", action="store_true", help="same mask for every frame")
    m.add_argument("--seed", type=int, default=0)
    m.set_defaults(func=_cmd_mask)

    r = sub.add_parser("reconstruct", parents=[common, run], help="run one experiment")
    r.set_defaults(func=_cmd_reconstruct)

    e = sub.add_parser("metrics", parents=[common], help="PSNR and NRMSE of a reconstruction")
    e.add_argument("reconstruction")
    e.add_argument("reference")
    e.add_argument("--out", help="write the summary table here")
    e.set_defaults(func=_cmd_metrics)

    w = sub.add_parser("sweep", parents=[common, run], help="grid search over lambda_s x lambda_z")
    w.add_argument("--lambda-s", type=_floats, required=True)
    w.add_argument("--lambda-z", type=_floats, required=True)
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=_cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NumericalDegeneracyError as exc:
        print(f"onair: numerical degeneracy: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"onair: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # ConfigError and validation errors from the library
        print(f"onair: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
