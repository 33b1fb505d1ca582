"""Command-line entry point: gen, train, eval, sweep, sim, plot.

Exit status: 0 ok, 2 bad configuration or flags, 3 input validation
failure, 4 I/O failure, 5 generation failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import formats
from .data import (
    FORMAT_VERSION as DATASET_VERSION,
    DatasetFormatError,
    DatasetValidationError,
    GenerationError,
    WorldConfig,
    build_dataset,
    dumps_dataset,
    load_dataset,
)
from .detect import DetectorNoise
from .evalmetrics import histogram, regression_metrics, seed_sweep
from .net import TrainConfig, forward, train

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_IO = 4
EXIT_GENERATION = 5

SPLIT_LABELS = {"train": "Training", "val": "Validation", "test": "Testing"}


class ConfigError(ValueError):
    pass


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    path.write_text(text)
    return path


def write_manifest(command: str, config: dict, seed, outputs, inputs=(), path=None) -> Path:
    """Record what produced the outputs; file names only, so runs in different
    directories produce identical manifests."""
    outputs = [Path(p) for p in outputs]
    man = {
        "command": command,
        "config": config,
        "seed": seed,
        "format_versions": {"dataset": DATASET_VERSION, "weights": formats.VERSION,
                            "tables": formats.VERSION, "trace": formats.VERSION},
        "inputs": [{"path": Path(p).name, "sha256": formats.sha256_file(p)} for p in inputs],
        "outputs": [{"path": p.name, "sha256": formats.sha256_file(p)} for p in outputs],
    }
    path = Path(path) if path else outputs[0].with_name(outputs[0].name + ".manifest.json")
    path.write_text(json.dumps(man, indent=1, sort_keys=True) + "\n")
    return path


def _load_world(path) -> WorldConfig:
    if path is None:
        return WorldConfig()
    try:
        raw = json.loads(Path(path).read_text())
    except OSError:
        raise
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg})") from None
    try:
        return WorldConfig.from_dict(raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None


# -- commands -----------------------------------------------------------------

def cmd_gen(args) -> int:
    world = _load_world(args.config)
    if args.mirror:
        world = replace(world, mirror_augment=True)
    try:
        ds = build_dataset(world, args.count, args.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = _write(args.out, dumps_dataset(ds))
    write_manifest("gen", {"world": world.to_dict(), "count": args.count}, args.seed, [out])
    st = ds.stats
    c = ds.split_counts()
    print(f"frames simulated {st['frames']}, examined {st['examined']}, static dropped "
          f"{st['static_dropped']}, lost {st['lost']}, yield {st['yield']:.2%}")
    print(f"samples {len(ds.samples)}: train {c['train']} / val {c['val']} / test {c['test']}")
    return EXIT_OK


def _train_arrays(ds):
    counts = ds.split_counts()
    for k in ("train", "val"):
        if counts[k] == 0:
            raise DatasetValidationError(0, "split", f"dataset has no {k} samples")
    return ds.arrays("train"), ds.arrays("val")


def cmd_train(args) -> int:
    try:
        cfg = TrainConfig(args.epochs, args.lr, args.batch, args.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    ds = load_dataset(args.data)
    (xt, yt), (xv, yv) = _train_arrays(ds)
    res = train(xt, yt, xv, yv, cfg)
    out = Path(args.out)
    formats.save_weights(res, out, {"dataset_fingerprint": ds.fingerprint})
    hist = _write(Path(args.history) if args.history else out.with_suffix(".history.csv"),
                  formats.history_csv(res))
    write_manifest("train", asdict(cfg), cfg.seed, [out, hist], [args.data])
    k = math.degrees(1.0) ** 2
    print(f"epochs {cfg.epochs}  lr {cfg.learning_rate}  batch {cfg.batch_size}  seed {cfg.seed}")
    print(f"final train loss {res.train_loss[-1]:.6g} rad^2 ({res.train_loss[-1] * k:.4f} deg^2), "
          f"val loss {res.val_loss[-1]:.6g} rad^2 ({res.val_loss[-1] * k:.4f} deg^2)")
    return EXIT_OK


def format_table(rows) -> str:
    """One row per split, metrics in degrees to 4 decimals."""
    lines = [f"{'Dataset':<12}{'MSE':>10}{'MAE':>10}{'RMSE':>10}{'MaxAE':>10}{'N':>7}"]
    for label, m in rows:
        lines.append(f"{label:<12}{m.mse:>10.4f}{m.mae:>10.4f}{m.rmse:>10.4f}{m.max_ae:>10.4f}{m.n:>7d}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    if not args.oracle and not args.weights:
        raise ConfigError("eval needs --weights or --oracle")
    params = None if args.oracle else formats.load_weights(args.weights)[0]
    ds = load_dataset(args.data)
    splits = ["val", "test"] if args.split == "all" else [args.split]
    rows = []
    for sp in splits:
        sub = ds.subset(sp)
        if not sub:
            raise DatasetValidationError(0, "split", f"dataset has no {sp} samples")
        x, y = ds.arrays(sp)
        pred = y.copy() if args.oracle else forward(params, x)
        rows.append((SPLIT_LABELS[sp], regression_metrics(pred, y)))
        if args.predictions and sp == splits[-1]:
            p = _write(args.predictions, formats.predictions_csv([s.frame_index for s in sub], y, pred))
            inputs = [args.data] if args.oracle else [args.weights, args.data]
            write_manifest("eval", {"split": sp, "oracle": args.oracle}, None, [p], inputs)
    print(format_table(rows))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.seeds < 2:
        raise ConfigError("--seeds must be >= 2")
    try:
        base = TrainConfig(args.epochs, args.lr, args.batch, args.seed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    ds = load_dataset(args.data)
    (xt, yt), (xv, yv) = _train_arrays(ds)
    test = ds.arrays("test")

    def progress(run):
        if not args.quiet:
            print(f"seed {run.seed}: MAE {run.metrics.mae:.4f}  MaxAE {run.metrics.max_ae:.4f}", flush=True)

    summary = seed_sweep(base, args.seeds, (xt, yt), (xv, yv), test, on_run=progress)
    out = _write(args.out, formats.sweep_csv(summary))
    edges, counts = histogram([r.metrics.max_ae for r in summary.runs], args.bin_width)
    hist = _write(Path(args.out).with_suffix(".hist.csv"), formats.histogram_csv(edges, counts, args.bin_width))
    write_manifest("sweep", {**asdict(base), "n_seeds": args.seeds, "bin_width": args.bin_width},
                   base.seed, [out, hist], [args.data])
    print(f"MaxAE mean {summary.mean_max_ae:.4f} deg (95% CI +/-{summary.ci95_max_ae:.4f}, "
          f"std {summary.std_max_ae:.4f}); {summary.frac_max_ae_below_1:.0%} of runs below 1 deg")
    print(f"MAE mean {summary.mean_mae:.4f} deg (std {summary.std_mae:.4f}); "
          f"RMSE mean {summary.mean_rmse:.4f} deg (std {summary.std_rmse:.4f})")
    return EXIT_OK


def cmd_sim(args) -> int:
    from .simloop import CampaignConfig, ControlConfig, MlpPredictor, OraclePredictor, run_campaign

    try:
        noise = DetectorNoise(args.corner_sigma, args.miss_prob, args.fp_rate, (args.conf_lo, args.conf_hi))
        ctl = ControlConfig(gain=args.gain, max_yaw_rate=args.max_yaw_rate)
        cc = CampaignConfig(noise=noise, frames=args.frames, ugv_speed=args.ugv_speed)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    if args.episodes < 1 or args.frames < 10:
        raise ConfigError("--episodes must be >= 1 and --frames >= 10")
    inputs = []
    if args.oracle:
        predictor, source = OraclePredictor(cc.camera), "oracle"
    else:
        params, _ = formats.load_weights(args.weights)
        predictor, source = MlpPredictor(params), "weights"
        inputs.append(args.weights)
    res = run_campaign(cc, ctl, predictor, args.episodes, args.seed)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    config = {"predictor": source, "episodes": args.episodes, "control": asdict(ctl),
              "campaign": json.loads(json.dumps(asdict(cc)))}
    report = {
        "success_rate": res.success_rate,
        "mean_abs_alignment_error_deg": res.mean_abs_alignment_error,
        "max_abs_alignment_error_deg": res.max_abs_alignment_error,
        "episodes": [{"episode": i, "success": e.success, "reason": e.reason, "lock_frame": e.lock_frame,
                      "mean_abs_alignment_error_deg": e.mean_abs_alignment_error,
                      "max_abs_alignment_error_deg": e.max_abs_alignment_error}
                     for i, e in enumerate(res.episodes)],
    }
    rep = _write(outdir / "report.json", json.dumps(report, indent=1) + "\n")
    tr = _write(outdir / "traces.jsonl", formats.trace_lines(res.episodes, {"seed": args.seed, **config}))
    write_manifest("sim", config, args.seed, [rep, tr], inputs, path=outdir / "manifest.json")
    print(f"episodes {args.episodes}  success rate {res.success_rate:.1%}")
    print(f"mean abs alignment error {res.mean_abs_alignment_error:.4f} deg, "
          f"max {res.max_abs_alignment_error:.4f} deg")
    return EXIT_OK


def cmd_plot(args) -> int:
    from . import plots

    kind = formats.sniff_kind(args.input)
    out = Path(args.out)
    if kind == "predictions":
        truth, pred = formats.read_predictions(args.input)
        if args.kind == "scatter":
            fig = plots.pred_vs_true(np.degrees(truth), np.degrees(pred))
        else:
            from .evalmetrics import wrapped_residuals_deg
            fig = plots.error_vs_index(wrapped_residuals_deg(pred, truth))
    elif kind == "sweep":
        runs, summ = formats.read_sweep(args.input)
        fig = plots.maxae_histogram([r.metrics.max_ae for r in runs], args.bin_width,
                                    summ.get("mean_max_ae"), summ.get("ci95_max_ae"))
    elif kind == "history":
        cols, rows, _ = formats.read_csv_table(args.input, "history")
        tab = np.array(rows, dtype=float)
        fig = plots.loss_history(tab[:, 0], tab[:, 1], tab[:, 2])
    elif kind == "trace":
        _, recs = formats.read_trace(args.input)
        eps: dict[int, list[float]] = {}
        for r in recs:
            eps.setdefault(r["episode"], []).append(r["error_deg"])
        fig = plots.alignment_trace(eps)
    else:
        raise formats.FormatError(f"{args.input}: cannot plot a {kind} file")
    plots.save_svg(fig, out)
    write_manifest("plot", {"kind": kind, "variant": args.kind, "bin_width": args.bin_width}, None,
                   [out], [args.input])
    print(f"wrote {out}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="uavheading", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--config", help="world config JSON (defaults if omitted)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=9000)
    g.add_argument("--mirror", action="store_true", help="add mirrored samples")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    def train_flags(p):
        p.add_argument("--data", required=True)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--lr", type=float, default=0.001)
        p.add_argument("--batch", type=int, default=32)
        p.add_argument("--seed", type=int, default=0)

    t = sub.add_parser("train", help="train the heading regressor")
    train_flags(t)
    t.add_argument("--out", required=True, help="weights file")
    t.add_argument("--history", help="loss history CSV (default: <out>.history.csv)")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="MSE/MAE/RMSE/MaxAE table for a split")
    e.add_argument("--weights")
    e.add_argument("--data", required=True)
    e.add_argument("--split", choices=("train", "val", "test", "all"), default="test")
    e.add_argument("--predictions", help="write per-sample predictions CSV")
    e.add_argument("--oracle", action="store_true", help="score the ground truth itself (sanity row)")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("sweep", help="retrain over many seeds, MaxAE statistics")
    train_flags(s)
    s.add_argument("--seeds", type=int, default=20)
    s.add_argument("--bin-width", type=float, default=0.05)
    s.add_argument("--out", required=True)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_sweep)

    m = sub.add_parser("sim", help="closed-loop yaw alignment campaign")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--weights")
    src.add_argument("--oracle", action="store_true")
    m.add_argument("--episodes", type=int, default=100)
    m.add_argument("--frames", type=int, default=300)
    m.add_argument("--corner-sigma", type=float, default=2.0)
    m.add_argument("--miss-prob", type=float, default=0.05)
    m.add_argument("--fp-rate", type=float, default=0.0)
    m.add_argument("--conf-lo", type=float, default=0.5)
    m.add_argument("--conf-hi", type=float, default=1.0)
    m.add_argument("--gain", type=float, default=0.5)
    m.add_argument("--max-yaw-rate", type=float, default=2.0)
    m.add_argument("--ugv-speed", type=float, default=0.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out-dir", required=True)
    m.set_defaults(func=cmd_sim)

    p = sub.add_parser("plot", help="SVG figure from a history, predictions, sweep or trace file")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=("error", "scatter"), default="error",
                   help="figure for predictions files")
    p.add_argument("--bin-width", type=float, default=0.05)
    p.set_defaults(func=cmd_plot)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetFormatError, DatasetValidationError, formats.FormatError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except GenerationError as e:
        print(f"generation error: {e}", file=sys.stderr)
        return EXIT_GENERATION


if __name__ == "__main__":
    sys.exit(main())
