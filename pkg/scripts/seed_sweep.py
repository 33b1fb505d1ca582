"""Retrain over N seeds on a fixed dataset and summarise MaxAE.

    python3 scripts/seed_sweep.py --seeds 20 --out runs/sweep
"""

import argparse
from pathlib import Path

from uavheading import formats, plots
from uavheading.data import WorldConfig, build_dataset
from uavheading.evalmetrics import histogram, seed_sweep
from uavheading.net import TrainConfig


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=9000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--data-seed", type=int, default=0)
    ap.add_argument("--bin-width", type=float, default=0.05)
    ap.add_argument("--out", default="runs/sweep")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    ds = build_dataset(WorldConfig(), args.count, args.data_seed)

    def progress(run):
        m = run.metrics
        print(f"seed {run.seed:3d}  MAE {m.mae:.4f}  RMSE {m.rmse:.4f}  MaxAE {m.max_ae:.4f}", flush=True)

    s = seed_sweep(TrainConfig(), args.seeds, ds.arrays("train"), ds.arrays("val"), ds.arrays("test"),
                   on_run=progress)
    (out / "sweep.csv").write_text(formats.sweep_csv(s))
    mx = [r.metrics.max_ae for r in s.runs]
    edges, counts = histogram(mx, args.bin_width)
    (out / "hist.csv").write_text(formats.histogram_csv(edges, counts, args.bin_width))
    plots.save_svg(plots.maxae_histogram(mx, args.bin_width, s.mean_max_ae, s.ci95_max_ae), out / "maxae_hist.svg")
    print(f"MaxAE {s.mean_max_ae:.4f} deg (95% CI +/-{s.ci95_max_ae:.4f}, std {s.std_max_ae:.4f}), "
          f"{s.frac_max_ae_below_1:.0%} of runs below 1 deg")
    print(f"MAE {s.mean_mae:.4f} deg, std {s.std_mae:.4f} ({s.std_mae / s.mean_mae:.1%} of mean)")


if __name__ == "__main__":
    main()
